#pragma once

#include "unrisk/common.hpp"
#include "unrisk/moments.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>

namespace unrisk {

struct DecompositionConfig {
  int restarts = 25;        // tensor power method random restarts per factor
  int iterations = 100;     // power iterations per restart
  bool refine = true;
  int refine_max_iter = 2000;
  int splits = 1;           // independent sample splits for amplification
  std::uint64_t seed = 0;
  double rank_tol = 1e-10;  // relative singular-value cutoff
  int dense_cap = 64;       // largest view dimension with a materialized triple
  std::size_t min_samples = 10;
  std::optional<double> amplify_eps;  // default: median pairwise distance
  bool augment_constant = false;  // affine lift of the loss vectors (needed for
                                  // softmax-trained models, whose scores carry
                                  // an exact zero-sum constraint)

  nlohmann::json to_json() const;
  static DecompositionConfig from_json(const nlohmann::json& j);
};

/// Recovered (M_1, M_2, M_3, pi) sharing one column order, with the
/// conditioning diagnostics from the sample-complexity bound.
struct PlugInEstimate {
  int k = 0;
  std::array<Mat, 3> M;  // D_v x k
  Vec pi;                // simplex-projected appendix estimate
  Vec pi_tensor;         // lambda_j^{-2} from the eigenvalues, unprojected
  double lambda_min = 0.0;                  // min_v sigma_k(M_v)
  std::array<double, 3> kappa = {0, 0, 0};  // sigma_1 / sigma_k per view
  double pi_min = 0.0;
  double tau = std::numeric_limits<double>::quiet_NaN();  // loss scale when samples were seen
  double residual = 0.0;  // weighted moment-fit value at the returned parameters
  bool refine_warning = false;

  nlohmann::json to_json() const;
};

struct TensorEigenpairs {
  Vec values;   // k positive eigenvalues, extraction order
  Mat vectors;  // k x k, column j is the unit eigenvector for values[j]
};

/// Output of view symmetrization: cross-view correctors, the whitening map W
/// with W' Pairs3 W = I_k, and the whitened symmetric k^3 tensor.
struct WhitenedSystem {
  Mat C1, C2;  // D3 x D1, D3 x D2
  Mat W;       // D3 x k
  Mat pairs3;  // symmetrized D3 x D3 second moment of the corrected views
  Tensor3 T;   // k x k x k
};

/// Builds the whitened system from pair moments; the whitened triple comes
/// from the dense tensor when present, otherwise from a second streaming pass
/// over `second_pass` (never materializing any D^3 object).
WhitenedSystem symmetrize_and_whiten(const MomentSet& moments, int k,
                                     const TripleSource* second_pass,
                                     const DecompositionConfig& config = {});

/// Robust tensor power method with deflation: L restarts, N iterations each,
/// keeping the restart with the largest T(u,u,u). Eigenvector signs are fixed
/// so that T(v,v,v) > 0. Deterministic given the seed.
TensorEigenpairs tensor_power_method(const Tensor3& T, int restarts, int iterations,
                                     std::uint64_t seed);

/// Back-projects eigenpairs to M_3, transfers to the other views through the
/// pair moments, and estimates pi by the appendix inversion formula.
PlugInEstimate recover_parameters(const TensorEigenpairs& pairs, const Mat& W,
                                  const MomentSet& moments,
                                  const DecompositionConfig& config = {});

struct RefineWeights {
  double w1, w2, w3;
  static RefineWeights defaults(int k);
};

/// Locally minimizes the weighted moment-fit objective by gradient descent
/// with backtracking (pi parametrized on the simplex through softmax). The
/// objective never increases across accepted steps.
PlugInEstimate refine(const PlugInEstimate& start, const MomentSet& moments,
                      const RefineWeights& weights, int max_iterations);

double moment_fit_objective(const std::array<Mat, 3>& M, const Vec& pi,
                            const MomentSet& moments, const RefineWeights& weights);

/// Permutation-aligned distance: Frobenius norm over the stacked M difference
/// plus the infinity norm of the pi difference.
double estimate_distance(const PlugInEstimate& a, const PlugInEstimate& b);

/// Discards any estimate farther than 2*eps from at least half of the others
/// and returns the first survivor in input order. Input must hold >= 3
/// estimates; throws AmplificationError when nothing survives.
std::size_t amplify_index(const Mat& distances, double eps);
PlugInEstimate amplify(const std::vector<PlugInEstimate>& estimates, double eps);
double amplify(const std::vector<double>& estimates, double eps);

/// Full pipeline from a loss-vector source: accumulate, whiten, power method,
/// recover, optional refine.
PlugInEstimate decompose_source(const TripleSource& source, int k,
                                const DecompositionConfig& config);

/// Pipeline from pre-computed moments (exact-moment injection path). tau is
/// left NaN because no samples are seen.
PlugInEstimate decompose_from_moments(const MomentSet& moments, int k,
                                      const DecompositionConfig& config,
                                      const TripleSource* second_pass = nullptr);

/// Pipeline from samples, with optional amplification over config.splits
/// disjoint sample splits.
PlugInEstimate decompose(const ViewArrays& samples, const ViewLossModel& model,
                         const DecompositionConfig& config);

}  // namespace unrisk
