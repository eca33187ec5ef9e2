#pragma once

#include "unrisk/common.hpp"
#include "unrisk/models.hpp"
#include "unrisk/views.hpp"

#include <filesystem>
#include <functional>
#include <optional>

namespace unrisk {

/// First, pairwise and (optionally dense) third-order cross moments of the
/// per-view loss vectors. pair(v, v') is stored once per unordered pair and
/// exposed transposed for the reversed order.
struct MomentSet {
  std::size_t m = 0;
  std::array<int, 3> dim = {0, 0, 0};
  std::array<Vec, 3> first;
  Mat pair01, pair02, pair12;
  std::optional<Tensor3> triple;  // dense D1 x D2 x D3, only when max dim <= cap

  const Mat& pair_ref(int v, int w) const;
  Mat pair(int v, int w) const;  // transposes when v > w

  void save(const std::filesystem::path& path) const;
  static MomentSet load(const std::filesystem::path& path);
};

/// Loss scale tau and feature scale B (the sample-complexity scale terms).
struct ScaleConstants {
  double tau = 0.0;
  double B = 0.0;
};

/// Streaming access to per-sample loss-vector triples (h_1, h_2, h_3). The
/// visitor order is by sample index; implementations must be deterministic.
class TripleSource {
 public:
  virtual ~TripleSource() = default;
  virtual std::size_t size() const = 0;
  virtual int dim(int v) const = 0;
  virtual void visit(std::size_t begin, std::size_t end,
                     const std::function<void(std::size_t, const Vec&, const Vec&, const Vec&)>& fn) const = 0;
  void visit_all(const std::function<void(std::size_t, const Vec&, const Vec&, const Vec&)>& fn) const {
    visit(0, size(), fn);
  }
};

/// h_v = model.loss_vector(x_v, v) per sample.
class ModelTripleSource final : public TripleSource {
 public:
  ModelTripleSource(const ViewArrays& samples, const ViewLossModel& model);
  std::size_t size() const override { return samples_.size(); }
  int dim(int) const override;
  void visit(std::size_t begin, std::size_t end,
             const std::function<void(std::size_t, const Vec&, const Vec&, const Vec&)>& fn) const override;

 private:
  const ViewArrays& samples_;
  const ViewLossModel& model_;
};

/// Extended features h' = [h_v at theta0; (tau/B) * grad block at theta_query]
/// per sample; realizes the stacked layout behind the gradient moments.
class ExtendedTripleSource final : public TripleSource {
 public:
  ExtendedTripleSource(const ViewArrays& samples, const ViewLossModel& model_at_theta0,
                       const Vec& theta_query, const ScaleConstants& scale);
  std::size_t size() const override { return samples_.size(); }
  int dim(int) const override;
  void visit(std::size_t begin, std::size_t end,
             const std::function<void(std::size_t, const Vec&, const Vec&, const Vec&)>& fn) const override;

 private:
  const ViewArrays& samples_;
  ViewLossModel model0_;
  ViewLossModel model_query_;
  double ratio_;  // tau / B
};

/// Appends a constant coordinate 1 to every view's loss vector (the affine
/// lift). Softmax-trained models carry an exact per-view zero-sum constraint
/// on their scores, which drops the conditional-mean rank to k-1; the lifted
/// columns are affinely independent and restore full rank.
class AugmentedTripleSource final : public TripleSource {
 public:
  explicit AugmentedTripleSource(const TripleSource& inner) : inner_(inner) {}
  std::size_t size() const override { return inner_.size(); }
  int dim(int v) const override { return inner_.dim(v) + 1; }
  void visit(std::size_t begin, std::size_t end,
             const std::function<void(std::size_t, const Vec&, const Vec&, const Vec&)>& fn) const override;

 private:
  const TripleSource& inner_;
};

/// Pre-materialized loss-vector rows (one matrix per view, row = sample).
class MatrixTripleSource final : public TripleSource {
 public:
  explicit MatrixTripleSource(std::array<Mat, 3> rows);
  std::size_t size() const override { return static_cast<std::size_t>(rows_[0].rows()); }
  int dim(int v) const override { return static_cast<int>(rows_[v].cols()); }
  void visit(std::size_t begin, std::size_t end,
             const std::function<void(std::size_t, const Vec&, const Vec&, const Vec&)>& fn) const override;
  const Mat& rows(int v) const { return rows_[v]; }

 private:
  std::array<Mat, 3> rows_;
};

/// Worker-local partial sums held in extended precision so that merges are
/// order-insensitive well below the 1e-12 contract.
class MomentAccumulator {
 public:
  MomentAccumulator(std::array<int, 3> dims, bool dense_triple);
  void add(const Vec& h1, const Vec& h2, const Vec& h3);
  /// Block update: row i of each matrix is one sample (level-3 BLAS path).
  void add_rows(const Mat& h1, const Mat& h2, const Mat& h3);
  void merge(const MomentAccumulator& other);
  MomentSet finalize() const;
  std::size_t count() const { return m_; }

 private:
  std::array<int, 3> dim_;
  bool dense_;
  std::size_t m_ = 0;
  std::array<std::vector<long double>, 3> first_;
  std::vector<long double> p01_, p02_, p12_, triple_;

  void add_pair_block(const Mat& partial, std::vector<long double>& buf);
};

/// Single streaming pass over the source; dense_cap bounds the largest view
/// dimension for which the raw third-order tensor is materialized. n_workers
/// splits the pass by sample index; partials merge in index order.
MomentSet accumulate_moments(const TripleSource& source, int dense_cap = 64, int n_workers = 1);
MomentSet accumulate_moments(const ViewArrays& samples, const ViewLossModel& model,
                             int dense_cap = 64, int n_workers = 1);

/// Extended feature vector for one view input; first k coordinates are the
/// loss vector at theta0, the remaining k*d hold (tau/B) * d f_v / d theta_r at
/// theta_query in layout i + k*r. d = 0 returns the loss vector unchanged.
Vec extended_feature(const ViewLossModel& model, const Vec& theta0, const Vec& theta_query,
                     const Vec& x_v, int v, const ScaleConstants& scale);

ScaleConstants estimate_scale_constants(const ViewArrays& samples, const ViewLossModel& model,
                                        const Vec& theta0);

}  // namespace unrisk
