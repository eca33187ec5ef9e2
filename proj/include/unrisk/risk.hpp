#pragma once

#include "unrisk/decomposition.hpp"
#include "unrisk/matching.hpp"
#include "unrisk/models.hpp"
#include "unrisk/views.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>

namespace unrisk {

/// Mean base term and mean predictive entropy over a sample set.
double mean_base_term(const ViewArrays& samples, const ViewLossModel& model);
double mean_predictive_entropy(const ViewArrays& samples, const ViewLossModel& model);

/// A_mean - sum_j pi[sigma[j]] * sum_v M_v(j, sigma[j]). Only the top k rows
/// of each M_v participate.
double risk_from_components(double A_mean, const std::array<Mat, 3>& M, const Vec& pi,
                            const std::vector<int>& sigma);

/// Assembled estimate of the optimistic risk with everything needed to
/// re-derive it.
struct RiskEstimate {
  double value = 0.0;
  std::vector<int> sigma;
  double A_mean = 0.0;
  Vec per_class;  // pi[sigma[j]] * sum_v M_v(j, sigma[j]) per j
  PlugInEstimate plugin;
  std::optional<double> gap;
  std::optional<double> entropy_baseline;
  std::optional<double> validation_baseline;

  nlohmann::json to_json() const;
};

/// Algorithm steps 1-5: moments, decomposition, matching, assembly. The
/// predictive-entropy baseline is computed alongside; the validation baseline
/// is a caller-supplied comparator.
RiskEstimate estimate_risk(const ViewArrays& samples, const ViewLossModel& model,
                           const DecompositionConfig& config = {});

/// Product form for exponential losses: sum_j pi[sigma[j]] * prod_v
/// M_v(j, sigma[j]). Negative conditional means violate the positive-loss
/// model; the flag reports them.
double exponential_risk(const std::array<Mat, 3>& M, const Vec& pi,
                        const std::vector<int>& sigma, bool* model_violation = nullptr);

/// Sign convention for the mediated correction term. The two differ only in
/// the sign of the correction; the degenerate k' = k case reconciles
/// PlusCorrection against the additive assembly, which MinusCorrection
/// matches directly under L = A - sum_v f_v.
enum class MediatedSign { PlusCorrection, MinusCorrection };

/// Mediated-label risk over k' mediator values: A_mean +/- sum_j p_z[j] *
/// sum_v Mext_v(r[j], j) with r mapping the k' mediator values onto the k
/// labels (it must be onto, and k' >= k).
double mediated_risk(double A_mean, const std::array<Mat, 3>& Mext, const Vec& p_z,
                     const std::vector<int>& label_of_mediator, int k,
                     MediatedSign sign = MediatedSign::PlusCorrection);

/// Column order for mediated estimates when no correspondence is supplied:
/// maximizes the diagonal mass of the first k rows under the mediator-to-label
/// map.
std::vector<int> align_mediator_columns(const std::array<Mat, 3>& Mext,
                                        const std::vector<int>& label_of_mediator);

}  // namespace unrisk
