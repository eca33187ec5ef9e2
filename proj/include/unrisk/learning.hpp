#pragma once

#include "unrisk/decomposition.hpp"
#include "unrisk/models.hpp"
#include "unrisk/views.hpp"

#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <optional>

namespace unrisk {

/// Seed-model alignment: the permutation recovered at theta0 and the gap
/// between the best and second-best permutation objectives.
struct SeedContext {
  Vec theta0;
  std::vector<int> sigma0;
  double gap = 0.0;
  bool gap_warning = false;  // gap below the configured threshold
  PlugInEstimate at_seed;
};

SeedContext seed_alignment(const ViewArrays& samples, const ViewLossModel& model,
                           const Vec& theta0, const DecompositionConfig& config = {},
                           double gap_warn_threshold = 1e-3);

/// Conditional gradient matrices G_v (layout (i + k*r, j)) and the mean
/// feature estimate phi_hat, jointly recovered with M_v(theta0) so that all
/// share the seed-resolved column order.
struct GradientMoments {
  std::array<Mat, 3> G;        // d*k x k
  std::array<Mat, 3> M_seed;   // k x k, conditional risk matrices at theta0
  Vec pi;
  Vec phi_hat;                 // length d
  std::vector<int> sigma;      // permutation used for the alignment
  PlugInEstimate raw;          // unaligned extended estimate with diagnostics
};

GradientMoments estimate_mean_features(const ViewArrays& samples, const ViewLossModel& model,
                                       const Vec& theta0, const Vec& theta_query,
                                       const DecompositionConfig& config = {});

struct LearnConfig {
  double rho = 10.0;   // l2-ball radius
  double eta = 0.1;    // dual-averaging step size
  int steps = 20;      // T
  std::size_t m = 0;   // per-step sample budget; 0 = use everything
  std::uint64_t seed = 0;
  bool constrain_general = true;     // project the closed-form iterate onto the ball
  bool reuse_gradient_moments = false;  // estimate the joint moments once (valid
                                        // when gradients do not depend on theta)
  double solver_tol = 1e-6;   // first-order tolerance of the constrained solver
  int solver_max_iter = 20000;

  nlohmann::json to_json() const;
  static LearnConfig from_json(const nlohmann::json& j);
};

struct StepLog {
  int t = 0;
  double grad_norm = 0.0;
  bool skipped = false;
  double estimated_risk = std::numeric_limits<double>::quiet_NaN();
};

struct LearnResult {
  Vec theta;
  bool converged = true;
  std::vector<StepLog> log;
};

/// min_{||theta|| <= rho} mean A(theta; x) - theta' target by projected
/// gradient descent with backtracking. Returns the iterate and whether the
/// first-order tolerance was met.
LearnResult solve_constrained_linear(const ViewArrays& samples, const ViewLossModel& model,
                                     const Vec& target, double rho, double tol = 1e-6,
                                     int max_iter = 20000);

/// Quasi-linear unsupervised learning for the logistic kind: estimate phi_hat
/// once, then solve the convex surrogate over the l2 ball.
LearnResult learn_logistic(const ViewArrays& samples, const ViewLossModel& model,
                           const Vec& theta0, const LearnConfig& lc = {},
                           const DecompositionConfig& dc = {});

/// Gradient provider override for tests and labeled-oracle comparisons.
using GradientFn = std::function<Vec(const Vec& theta, int step)>;

/// Dual-averaging loop: z starts at zero, theta_t = theta0 + eta * z (projected
/// when configured), gradients come from the jointly estimated (M(theta0),
/// G(theta_t)), and the iterate average is returned. A failed per-step
/// decomposition reuses the previous gradient and flags the step.
LearnResult learn_general(const ViewArrays& samples, const ViewLossModel& model,
                          const Vec& theta0, const LearnConfig& lc = {},
                          const DecompositionConfig& dc = {},
                          const GradientFn& gradient_override = nullptr);

}  // namespace unrisk
