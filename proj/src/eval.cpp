#include "unrisk/eval.hpp"

namespace unrisk {

double labeled_risk(const MultiViewDataset& data, const ViewLossModel& model) {
  if (!data.labeled()) throw InputError("labeled_risk: dataset has no labels");
  const std::size_t m = data.views.size();
  long double acc = 0.0L;
  for (std::size_t i = 0; i < m; ++i) acc += model.loss(data.views.sample(i), data.labels[i]);
  return static_cast<double>(acc / m);
}

LabeledPlugin labeled_conditional_means(const TripleSource& source, const std::vector<int>& labels,
                                        int k) {
  const std::size_t m = source.size();
  if (labels.size() != m) throw InputError("labeled oracle: labels missing or misaligned");
  LabeledPlugin out;
  std::vector<std::size_t> counts(k, 0);
  for (int v = 0; v < 3; ++v) out.M[v] = Mat::Zero(source.dim(v), k);
  source.visit_all([&](std::size_t i, const Vec& h1, const Vec& h2, const Vec& h3) {
    const int y = labels[i];
    if (y < 0 || y >= k) throw InputError("labeled oracle: label out of range");
    ++counts[y];
    out.M[0].col(y) += h1;
    out.M[1].col(y) += h2;
    out.M[2].col(y) += h3;
  });
  out.pi = Vec(k);
  for (int j = 0; j < k; ++j) {
    out.pi[j] = static_cast<double>(counts[j]) / static_cast<double>(m);
    if (counts[j] > 0)
      for (int v = 0; v < 3; ++v) out.M[v].col(j) /= static_cast<double>(counts[j]);
  }
  return out;
}

LabeledPlugin labeled_moment_matrices(const MultiViewDataset& data, const ViewLossModel& model) {
  if (!data.labeled()) throw InputError("labeled oracle: dataset has no labels");
  ModelTripleSource src(data.views, model);
  return labeled_conditional_means(src, data.labels, model.k());
}

Vec labeled_mean_features(const MultiViewDataset& data, const ViewLossModel& model) {
  if (!data.labeled()) throw InputError("labeled oracle: dataset has no labels");
  const std::size_t m = data.views.size();
  Vec acc = Vec::Zero(model.d());
  for (std::size_t i = 0; i < m; ++i) {
    const Views x = data.views.sample(i);
    const int y = data.labels[i];
    for (int v = 0; v < 3; ++v) acc += model.features(x[v], v).row(y).transpose();
  }
  return acc / static_cast<double>(m);
}

LearnResult train_logistic_supervised(const MultiViewDataset& data, const ViewLossModel& model,
                                      double rho, double tol, int max_iter) {
  if (model.kind() != ModelKind::Logistic)
    throw InputError("supervised trainer: logistic kind required");
  const Vec phi_bar = labeled_mean_features(data, model);
  return solve_constrained_linear(data.views, model, phi_bar, rho, tol, max_iter);
}

}  // namespace unrisk
