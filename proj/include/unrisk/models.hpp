#pragma once

#include "unrisk/common.hpp"
#include "unrisk/views.hpp"

#include <array>
#include <functional>
#include <optional>

#include <nlohmann/json_fwd.hpp>

namespace unrisk {

enum class ModelKind { Logistic, ModifiedHinge, AdditiveScorer };

std::string kind_name(ModelKind kind);
ModelKind kind_from_name(const std::string& name);

/// Loss-vector values of one view: entry i is f_v(theta; x_v, i).
struct LossVector {
  int view = 0;  // 0-based
  Vec values;    // length k
};

/// Per-view feature machinery. For the linear kinds this produces the k x d
/// matrix whose row i is phi_v(x_v, i); the class-block layout places the raw
/// view input into the block of theta owned by (view, class).
struct ViewSpec {
  int input_dim = 0;
  int block_offset = 0;  // start of this view's blocks within theta (class-block maps)
  // Custom dense feature map (k x d matrix per input); overrides the block layout.
  std::function<Mat(const Vec&)> custom_features;
  // Additive-scorer machinery: per-view score vector (length k) and optional
  // gradient (k x d) when the scorer is theta-dependent.
  std::function<Vec(const Vec&)> scores;
  std::function<Mat(const Vec&)> score_grad;
};

/// A fixed model whose loss decomposes as L(theta; x, y) = A(theta; x) - sum_v
/// f_v(theta; x_v, y) across three conditionally independent views. Immutable
/// after construction; safe for concurrent evaluation.
class ViewLossModel {
 public:
  ViewLossModel() = default;

  static ViewLossModel logistic(int k, const std::array<int, 3>& view_dims, Vec theta);
  static ViewLossModel modified_hinge(int k, const std::array<int, 3>& view_dims, Vec theta);
  static ViewLossModel additive_scorer(int k, std::array<std::function<Vec(const Vec&)>, 3> scorers,
                                       int d = 0, Vec theta = Vec(),
                                       std::array<std::function<Mat(const Vec&)>, 3> grads = {});
  /// Linear-in-theta model with arbitrary dense feature maps (tests, mediation).
  static ViewLossModel with_features(ModelKind kind, int k, int d,
                                     std::array<std::function<Mat(const Vec&)>, 3> feature_maps,
                                     std::array<int, 3> input_dims, Vec theta);

  int k() const { return k_; }
  int d() const { return d_; }
  ModelKind kind() const { return kind_; }
  const Vec& theta() const { return theta_; }
  int view_dim(int v) const { return views_[v].input_dim; }

  /// Same family evaluated at different parameters.
  ViewLossModel with_theta(Vec theta) const;

  /// (f_v(theta; x_v, i))_{i=1..k}.
  Vec loss_vector(const Vec& x_v, int v) const;

  /// A(theta; x); the log-partition for the softmax-normalized kinds, zero for
  /// the modified hinge.
  double base_term(const Views& x) const;

  /// k x d matrix whose row i is the gradient of f_v(theta; x_v, i) in theta.
  /// The modified hinge uses the flat-side subgradient (0 at the kink).
  Mat grad_loss_vector(const Vec& x_v, int v) const;

  /// Gradient of A(theta; x) in theta.
  Vec grad_base(const Views& x) const;

  /// k x d feature matrix phi_v(x_v, .) for the linear kinds.
  Mat features(const Vec& x_v, int v) const;

  double loss(const Views& x, int y) const;

  /// Softmax class probabilities from the summed per-view scores.
  Vec class_probabilities(const Views& x) const;

  /// Batched helpers (GEMM fast path for the class-block layout, per-sample
  /// fallback otherwise). total_scores is m x k with row i = sum_v s_v(x_i).
  Mat total_scores(const ViewArrays& samples) const;
  double mean_base(const ViewArrays& samples) const;
  Vec mean_grad_base(const ViewArrays& samples) const;

  /// Sums over samples of sum_{v,j} f_v(x_v, j)^2 and sum_{i,v}
  /// ||grad f_v(x_v, i)||^2 (the tau and B scale sums).
  std::pair<double, double> scale_sums(const ViewArrays& samples) const;

  nlohmann::json to_json() const;
  static ViewLossModel from_json(const nlohmann::json& j);

 private:
  ModelKind kind_ = ModelKind::Logistic;
  int k_ = 0;
  int d_ = 0;
  Vec theta_;
  std::array<ViewSpec, 3> views_;
  bool serializable_ = false;

  void check_view(const Vec& x_v, int v) const;
  Vec scores_for(const Vec& x_v, int v) const;  // theta' phi or scorer output
};

}  // namespace unrisk
