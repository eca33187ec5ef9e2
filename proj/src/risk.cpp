#include "unrisk/risk.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace unrisk {

double mean_base_term(const ViewArrays& samples, const ViewLossModel& model) {
  if (samples.size() == 0) throw InputError("empty sample set");
  return model.mean_base(samples);
}

double mean_predictive_entropy(const ViewArrays& samples, const ViewLossModel& model) {
  const std::size_t m = samples.size();
  if (m == 0) throw InputError("empty sample set");
  const Mat total = model.total_scores(samples);
  long double acc = 0.0L;
  for (Eigen::Index i = 0; i < total.rows(); ++i) {
    const double lse = log_sum_exp(total.row(i).transpose());
    double h = 0.0;
    for (Eigen::Index j = 0; j < total.cols(); ++j) {
      const double p = std::exp(total(i, j) - lse);
      if (p > 0.0) h -= p * std::log(p);
    }
    acc += h;
  }
  return static_cast<double>(acc / m);
}

double risk_from_components(double A_mean, const std::array<Mat, 3>& M, const Vec& pi,
                            const std::vector<int>& sigma) {
  const int k = static_cast<int>(pi.size());
  if (static_cast<int>(sigma.size()) != k || !is_permutation(sigma))
    throw InputError("risk_from_components: sigma is not a bijection on {0..k-1}");
  for (const Mat& mv : M)
    if (mv.rows() < k || mv.cols() != k)
      throw InputError("risk_from_components: M_v must have >= k rows and k columns");
  double corr = 0.0;
  for (int j = 0; j < k; ++j) {
    double s = 0.0;
    for (int v = 0; v < 3; ++v) s += M[v](j, sigma[j]);
    corr += pi[sigma[j]] * s;
  }
  return A_mean - corr;
}

nlohmann::json RiskEstimate::to_json() const {
  nlohmann::json j;
  j["value"] = value;
  j["sigma"] = sigma;
  j["A_mean"] = A_mean;
  j["per_class"] = std::vector<double>(per_class.data(), per_class.data() + per_class.size());
  j["diagnostics"] = plugin.to_json();
  nlohmann::json baselines;
  if (entropy_baseline) baselines["predictive_entropy"] = *entropy_baseline;
  if (validation_baseline) baselines["validation_risk"] = *validation_baseline;
  j["baselines"] = baselines;
  if (gap) j["gap"] = *gap;
  return j;
}

RiskEstimate estimate_risk(const ViewArrays& samples, const ViewLossModel& model,
                           const DecompositionConfig& config) {
  RiskEstimate out;
  out.plugin = decompose(samples, model, config);
  const Permutation perm = best_permutation(out.plugin.M, out.plugin.pi);
  out.sigma = perm.sigma;
  out.A_mean = mean_base_term(samples, model);
  out.value = risk_from_components(out.A_mean, out.plugin.M, out.plugin.pi, out.sigma);
  const int k = out.plugin.k;
  out.per_class = Vec(k);
  for (int j = 0; j < k; ++j) {
    double s = 0.0;
    for (int v = 0; v < 3; ++v) s += out.plugin.M[v](j, out.sigma[j]);
    out.per_class[j] = out.plugin.pi[out.sigma[j]] * s;
  }
  if (k <= 10) out.gap = permutation_gap(out.plugin.M, out.plugin.pi);
  out.entropy_baseline = mean_predictive_entropy(samples, model);
  return out;
}

double exponential_risk(const std::array<Mat, 3>& M, const Vec& pi,
                        const std::vector<int>& sigma, bool* model_violation) {
  const int k = static_cast<int>(pi.size());
  if (static_cast<int>(sigma.size()) != k || !is_permutation(sigma))
    throw InputError("exponential_risk: sigma is not a bijection");
  bool negative = false;
  double total = 0.0;
  for (int j = 0; j < k; ++j) {
    double prod = 1.0;
    for (int v = 0; v < 3; ++v) {
      const double entry = M[v](j, sigma[j]);
      if (entry < 0.0) negative = true;
      prod *= entry;
    }
    total += pi[sigma[j]] * prod;
  }
  if (model_violation) *model_violation = negative;
  return total;
}

double mediated_risk(double A_mean, const std::array<Mat, 3>& Mext, const Vec& p_z,
                     const std::vector<int>& label_of_mediator, int k, MediatedSign sign) {
  const int kp = static_cast<int>(p_z.size());
  if (static_cast<int>(label_of_mediator.size()) != kp)
    throw InputError("mediated_risk: mediator map has wrong length");
  if (kp < k) throw InputError("mediated_risk: fewer mediator values than labels");
  std::vector<bool> hit(k, false);
  for (int y : label_of_mediator) {
    if (y < 0 || y >= k) throw InputError("mediated_risk: label out of range");
    hit[y] = true;
  }
  for (bool h : hit)
    if (!h) throw InputError("mediated_risk: mediator map is not onto the labels");
  for (const Mat& mv : Mext)
    if (mv.rows() < k || mv.cols() != kp)
      throw InputError("mediated_risk: Mext_v must have >= k rows and k' columns");

  double corr = 0.0;
  for (int j = 0; j < kp; ++j) {
    double s = 0.0;
    for (int v = 0; v < 3; ++v) s += Mext[v](label_of_mediator[j], j);
    corr += p_z[j] * s;
  }
  return sign == MediatedSign::PlusCorrection ? A_mean + corr : A_mean - corr;
}

std::vector<int> align_mediator_columns(const std::array<Mat, 3>& Mext,
                                        const std::vector<int>& label_of_mediator) {
  const int kp = static_cast<int>(label_of_mediator.size());
  // X(c, j): mass on the loss row of mediator slot j if column c is placed there.
  Mat X(kp, kp);
  for (int c = 0; c < kp; ++c)
    for (int j = 0; j < kp; ++j) {
      double s = 0.0;
      for (int v = 0; v < 3; ++v) s += Mext[v](label_of_mediator[j], c);
      X(c, j) = s;
    }
  return best_assignment(X).sigma;
}

}  // namespace unrisk
