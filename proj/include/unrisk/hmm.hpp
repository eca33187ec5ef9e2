#pragma once

#include "unrisk/common.hpp"
#include "unrisk/data.hpp"
#include "unrisk/decomposition.hpp"

#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <vector>

namespace unrisk {

/// Chain model with positive transition/emission potentials:
/// p(y_1:T | x_1:T) proportional to prod_t f(y_{t-1}, y_t) * prod_t g(y_t, x_t),
/// evaluated under the structured log loss. Potentials are stored in logs.
struct HmmModel {
  int k = 0;
  Mat log_transition;  // k x k, log f(i, j)
  Vec log_initial;     // length k; zero vector reproduces the bare product form
  std::function<Vec(const Vec&)> log_emission;  // obs_t -> (log g(j, x_t))_j

  static HmmModel tabular(const Mat& transition, const Mat& emission_table, Vec initial = Vec());
  static HmmModel gaussian(const Mat& transition, const Mat& means, double sigma, Vec initial = Vec());
  static HmmModel from_generator(const HmmGeneratorSpec& spec);

  Vec log_emission_at(const Vec& obs_t) const;
};

/// All message families in log space. Rows are positions (0-based), columns
/// are states. Backward messages are normalized to max 0; forward families are
/// normalized to probability.
struct MessageTable {
  Mat log_filtered;    // log p(y_t | x_{1:t})
  Mat log_predictive;  // log p(y_t | x_{1:t-1}); row 0 is the normalized prior
  Mat log_backward;    // log beta-tilde
  Mat log_posterior;   // log p(y_t | x_{1:T})
  std::vector<Mat> log_pairwise;  // entry t-1 holds log p(y_{t-1}, y_t | x), t = 2..T (1-based)
  Mat log_emissions;   // cached log g(j, x_t)

  int T() const { return static_cast<int>(log_filtered.rows()); }
};

MessageTable forward_backward(const HmmModel& hmm, const Mat& obs);

enum class LossKind { Pair, Unary };

/// Per-position view losses. Positions t are 1-based; pair losses live on
/// 3 <= t <= T-1 with label space k^2 flattened as (i, j) -> i*k + j, unary
/// losses on 2 <= t <= T-1. A - sum_v f_v reproduces the exact local log loss.
struct LocalLossViews {
  std::array<Vec, 3> f;
  double A = 0.0;
  int label_count = 0;
};

LocalLossViews local_loss_views(const HmmModel& hmm, const Mat& obs, int t, LossKind kind);
LocalLossViews local_loss_views(const HmmModel& hmm, const MessageTable& msgs, int t, LossKind kind);

/// One estimated expectation E[l_t] or E[l'_t].
struct PositionTerm {
  int t = 0;
  double value = 0.0;
  double A_mean = 0.0;
  double lambda = 0.0;   // min_v sigma_k of the per-position estimate
  bool degenerate = false;  // label-independent losses, estimated directly
};

struct HmmRiskResult {
  double inner_risk = 0.0;  // estimate of -E[log p(y_{2:T-1} | x_{1:T})]
  std::vector<PositionTerm> pair_terms;   // t = 3..T-1
  std::vector<PositionTerm> unary_terms;  // t = 3..T-2
  nlohmann::json to_json() const;
};

/// Per-position risk estimation of the structured log loss. Each admissible
/// unary position runs the multiclass pipeline on its view losses; pair
/// positions assemble their k^2-class estimate from the two adjacent unary
/// decompositions plus a bilinear inversion for the pair prior (the prefix
/// and suffix views are blind to half of a pair label, so the raw k^2 moment
/// problem is rank-deficient by construction).
HmmRiskResult hmm_risk(const HmmModel& hmm, const std::vector<Mat>& sequences,
                       const DecompositionConfig& config = {});

/// Labeled oracle: mean of -log p(y_{2:T-1} | x) over the dataset via the
/// chain identity on exact posteriors.
double hmm_labeled_inner_risk(const HmmModel& hmm, const SequenceDataset& data);

}  // namespace unrisk
