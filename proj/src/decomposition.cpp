#include "unrisk/decomposition.hpp"

#include "unrisk/matching.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace unrisk {

nlohmann::json DecompositionConfig::to_json() const {
  nlohmann::json j;
  j["restarts"] = restarts;
  j["iterations"] = iterations;
  j["refine"] = refine;
  j["refine_max_iter"] = refine_max_iter;
  j["splits"] = splits;
  j["seed"] = seed;
  j["rank_tol"] = rank_tol;
  j["dense_cap"] = dense_cap;
  j["min_samples"] = min_samples;
  j["augment_constant"] = augment_constant;
  if (amplify_eps) j["amplify_eps"] = *amplify_eps;
  return j;
}

DecompositionConfig DecompositionConfig::from_json(const nlohmann::json& j) {
  DecompositionConfig c;
  c.restarts = j.value("restarts", c.restarts);
  c.iterations = j.value("iterations", c.iterations);
  c.refine = j.value("refine", c.refine);
  c.refine_max_iter = j.value("refine_max_iter", c.refine_max_iter);
  c.splits = j.value("splits", c.splits);
  c.seed = j.value("seed", c.seed);
  c.rank_tol = j.value("rank_tol", c.rank_tol);
  c.dense_cap = j.value("dense_cap", c.dense_cap);
  c.min_samples = j.value("min_samples", c.min_samples);
  c.augment_constant = j.value("augment_constant", c.augment_constant);
  if (j.contains("amplify_eps")) c.amplify_eps = j.at("amplify_eps").get<double>();
  return c;
}

nlohmann::json PlugInEstimate::to_json() const {
  nlohmann::json j;
  j["k"] = k;
  for (int v = 0; v < 3; ++v) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < M[v].rows(); ++i) {
      std::vector<double> row(M[v].cols());
      for (Eigen::Index c = 0; c < M[v].cols(); ++c) row[c] = M[v](i, c);
      rows.push_back(row);
    }
    j["M"].push_back(rows);
  }
  j["pi"] = std::vector<double>(pi.data(), pi.data() + pi.size());
  j["pi_tensor"] = std::vector<double>(pi_tensor.data(), pi_tensor.data() + pi_tensor.size());
  j["lambda_min"] = lambda_min;
  j["kappa"] = kappa;
  j["pi_min"] = pi_min;
  if (std::isfinite(tau)) j["tau"] = tau;
  j["residual"] = residual;
  j["refine_warning"] = refine_warning;
  return j;
}

// ---------------------------------------------------------------------------
// Whitening
// ---------------------------------------------------------------------------

WhitenedSystem symmetrize_and_whiten(const MomentSet& moments, int k,
                                     const TripleSource* second_pass,
                                     const DecompositionConfig& config) {
  if (k < 2) throw InputError("symmetrize_and_whiten: k must be >= 2");
  const Mat& p01 = moments.pair_ref(0, 1);

  double sk = 0.0;
  const Mat p01_pinv = pseudo_inverse(p01, config.rank_tol, &sk);
  {
    Eigen::BDCSVD<Mat> svd(p01);
    const Vec& s = svd.singularValues();
    if (s.size() < k || !(s[k - 1] > config.rank_tol * s[0]))
      throw ConditioningError("whiten: pair moment of views 1,2 is rank-deficient",
                              s.size() >= k ? s[k - 1] : 0.0);
  }

  WhitenedSystem sys;
  // C1 maps view-1 loss vectors into view-3 coordinates, C2 likewise for view
  // 2. The pair moments have population rank k, so the pseudo-inverses are
  // rank-k truncated; keeping sample-noise directions would amplify them.
  sys.C1 = moments.pair(2, 1) * pseudo_inverse(moments.pair(0, 1), config.rank_tol, nullptr, k);
  sys.C2 = moments.pair(2, 0) * pseudo_inverse(moments.pair(1, 0), config.rank_tol, nullptr, k);

  const Mat cross = sys.C1 * moments.pair_ref(0, 1) * sys.C2.transpose();
  sys.pairs3 = 0.5 * (cross + cross.transpose());

  Eigen::SelfAdjointEigenSolver<Mat> eig(sys.pairs3);
  if (eig.info() != Eigen::Success) throw NumericError("whiten: eigendecomposition failed");
  const Vec evals = eig.eigenvalues();  // ascending
  const int d3 = static_cast<int>(sys.pairs3.rows());
  if (d3 < k)
    throw ConditioningError("whiten: corrected second moment smaller than k", 0.0);
  const double top = evals[d3 - 1];
  const double kth = evals[d3 - k];
  if (!(kth > 0.0) || !(kth > config.rank_tol * top))
    throw ConditioningError("whiten: corrected second moment is rank-deficient", std::max(kth, 0.0));

  sys.W = Mat(d3, k);
  for (int j = 0; j < k; ++j) {
    const int src = d3 - 1 - j;  // descending order
    sys.W.col(j) = eig.eigenvectors().col(src) / std::sqrt(evals[src]);
  }

  const Mat a1 = sys.W.transpose() * sys.C1;  // k x D1
  const Mat a2 = sys.W.transpose() * sys.C2;  // k x D2
  const Mat a3 = sys.W.transpose();           // k x D3

  if (moments.triple) {
    sys.T = moments.triple->multilinear(a1, a2, a3).symmetrized();
  } else {
    if (!second_pass)
      throw InputError("whiten: no dense triple and no sample source for the second pass");
    std::vector<long double> acc(static_cast<std::size_t>(k) * k * k, 0.0L);
    std::size_t n = 0;
    second_pass->visit_all([&](std::size_t, const Vec& h1, const Vec& h2, const Vec& h3) {
      const Vec u = a1 * h1;
      const Vec v = a2 * h2;
      const Vec w = a3 * h3;
      for (int i = 0; i < k; ++i) {
        const long double ui = u[i];
        for (int j = 0; j < k; ++j) {
          const long double uv = ui * v[j];
          long double* row = acc.data() + (static_cast<std::size_t>(i) * k + j) * k;
          for (int l = 0; l < k; ++l) row[l] += uv * w[l];
        }
      }
      ++n;
    });
    if (n == 0) throw InputError("whiten: empty second pass");
    Tensor3 t(k, k, k);
    for (std::size_t i = 0; i < acc.size(); ++i)
      t.raw()[i] = static_cast<double>(acc[i] / static_cast<long double>(n));
    sys.T = t.symmetrized();
  }
  return sys;
}

// ---------------------------------------------------------------------------
// Tensor power method
// ---------------------------------------------------------------------------

TensorEigenpairs tensor_power_method(const Tensor3& T, int restarts, int iterations,
                                     std::uint64_t seed) {
  if (!T.cube()) throw InputError("tensor_power_method: cubic tensor required");
  const int k = T.dim(0);
  const double fro = T.frobenius_norm();
  if (T.max_symmetry_violation() > 1e-8 * (1.0 + fro))
    throw InputError("tensor_power_method: tensor is not symmetric");
  if (restarts < 1 || iterations < 1)
    throw InputError("tensor_power_method: restarts and iterations must be positive");

  Tensor3 deflated = T;
  TensorEigenpairs out;
  out.values = Vec(k);
  out.vectors = Mat(k, k);
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int j = 0; j < k; ++j) {
    Vec best_u;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
      Vec u(k);
      for (int i = 0; i < k; ++i) u[i] = gauss(rng);
      double norm = u.norm();
      if (norm == 0.0) continue;
      u /= norm;
      for (int it = 0; it < iterations; ++it) {
        Vec next = deflated.contract23(u, u);
        const double nn = next.norm();
        if (nn < 1e-300) break;
        u = next / nn;
      }
      const double val = deflated.value(u);
      if (val > best_val) {
        best_val = val;
        best_u = u;
      }
    }
    if (best_u.size() == 0 || !(best_val > 1e-12 * (1.0 + fro)))
      throw NumericError("tensor_power_method: no positive eigenvalue at factor " +
                         std::to_string(j) + " (model violation or noise dominance)");
    // polish the winning restart
    for (int it = 0; it < iterations; ++it) {
      Vec next = deflated.contract23(best_u, best_u);
      const double nn = next.norm();
      if (nn < 1e-300) break;
      best_u = next / nn;
    }
    double lambda = deflated.value(best_u);
    if (lambda < 0.0) {  // sign fix: T(v,v,v) must be positive
      best_u = -best_u;
      lambda = -lambda;
    }
    if (!(lambda > 1e-12 * (1.0 + fro)))
      throw NumericError("tensor_power_method: non-positive eigenvalue after deflation");
    out.values[j] = lambda;
    out.vectors.col(j) = best_u;
    deflated.add_rank_one(-lambda, best_u, best_u, best_u);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parameter recovery
// ---------------------------------------------------------------------------

namespace {

void fill_diagnostics(PlugInEstimate& est, const DecompositionConfig& config) {
  const int k = est.k;
  est.lambda_min = std::numeric_limits<double>::infinity();
  for (int v = 0; v < 3; ++v) {
    Eigen::BDCSVD<Mat> svd(est.M[v]);
    const Vec& s = svd.singularValues();
    const double sk = s.size() >= k ? s[k - 1] : 0.0;
    est.lambda_min = std::min(est.lambda_min, sk);
    est.kappa[v] = sk > 0.0 ? s[0] / sk : std::numeric_limits<double>::infinity();
  }
  est.pi_min = est.pi.minCoeff();
  (void)config;
}

}  // namespace

PlugInEstimate recover_parameters(const TensorEigenpairs& pairs, const Mat& W,
                                  const MomentSet& moments,
                                  const DecompositionConfig& config) {
  const int k = static_cast<int>(pairs.values.size());
  if (k < 1) throw InputError("recover_parameters: no eigenpairs");
  for (int j = 0; j < k; ++j)
    if (!(pairs.values[j] > 0.0))
      throw InputError("recover_parameters: eigenvalues must be positive");

  PlugInEstimate est;
  est.k = k;

  const Mat wt_pinv = pseudo_inverse(W.transpose(), config.rank_tol);  // D3 x k
  Mat m3(W.rows(), k);
  for (int j = 0; j < k; ++j) m3.col(j) = pairs.values[j] * (wt_pinv * pairs.vectors.col(j));

  est.pi_tensor = Vec(k);
  for (int j = 0; j < k; ++j) est.pi_tensor[j] = 1.0 / (pairs.values[j] * pairs.values[j]);

  {
    Eigen::BDCSVD<Mat> svd(m3);
    const Vec& s = svd.singularValues();
    if (s.size() < k || !(s[k - 1] > config.rank_tol * s[0]))
      throw ConditioningError("recover_parameters: M_3 is numerically singular",
                              s.size() >= k ? s[k - 1] : 0.0);
  }

  const Mat z = est.pi_tensor.asDiagonal() * m3.transpose();  // k x D3
  const Mat z_pinv = pseudo_inverse(z, config.rank_tol);      // D3 x k
  est.M[0] = moments.pair_ref(0, 2) * z_pinv;
  est.M[1] = moments.pair_ref(1, 2) * z_pinv;
  est.M[2] = m3;

  est.pi = clip_to_simplex(pseudo_inverse(est.M[0], config.rank_tol) * moments.first[0]);

  fill_diagnostics(est, config);
  est.residual = moment_fit_objective(est.M, est.pi, moments, RefineWeights::defaults(k));
  return est;
}

// ---------------------------------------------------------------------------
// Weighted moment-fit refinement
// ---------------------------------------------------------------------------

RefineWeights RefineWeights::defaults(int k) {
  const double kk = static_cast<double>(k);
  return {1.0 / kk, 1.0 / (kk * kk), 1.0 / (kk * kk * kk)};
}

double moment_fit_objective(const std::array<Mat, 3>& M, const Vec& pi,
                            const MomentSet& moments, const RefineWeights& weights) {
  double j = 0.0;
  for (int v = 0; v < 3; ++v) j += weights.w1 * (moments.first[v] - M[v] * pi).squaredNorm();
  const Mat d = pi.asDiagonal();
  j += weights.w2 * (moments.pair_ref(0, 1) - M[0] * d * M[1].transpose()).squaredNorm();
  j += weights.w2 * (moments.pair_ref(0, 2) - M[0] * d * M[2].transpose()).squaredNorm();
  j += weights.w2 * (moments.pair_ref(1, 2) - M[1] * d * M[2].transpose()).squaredNorm();
  if (moments.triple && weights.w3 != 0.0) {
    Tensor3 g = *moments.triple;
    for (int c = 0; c < pi.size(); ++c)
      g.add_rank_one(-pi[c], M[0].col(c), M[1].col(c), M[2].col(c));
    const double f = g.frobenius_norm();
    j += weights.w3 * f * f;
  }
  return j;
}

namespace {

struct RefineState {
  std::array<Mat, 3> M;
  Vec z;  // pi = softmax(z)

  Vec pi() const {
    const double lse = log_sum_exp(z);
    return (z.array() - lse).exp();
  }
};

struct RefineGrad {
  std::array<Mat, 3> dM;
  Vec dz;

  double squared_norm() const {
    double s = dz.squaredNorm();
    for (const Mat& g : dM) s += g.squaredNorm();
    return s;
  }
};

RefineGrad gradient(const RefineState& st, const MomentSet& mom, const RefineWeights& w) {
  const Vec pi = st.pi();
  const int k = static_cast<int>(pi.size());
  RefineGrad g;
  Vec dpi = Vec::Zero(k);
  for (int v = 0; v < 3; ++v) g.dM[v] = Mat::Zero(st.M[v].rows(), k);

  // first-moment residuals
  for (int v = 0; v < 3; ++v) {
    const Vec r = mom.first[v] - st.M[v] * pi;
    g.dM[v] += -2.0 * w.w1 * r * pi.transpose();
    dpi += -2.0 * w.w1 * st.M[v].transpose() * r;
  }
  // pairwise residuals
  const Mat d = pi.asDiagonal();
  auto pair_term = [&](int a, int b) {
    const Mat e = mom.pair_ref(a, b) - st.M[a] * d * st.M[b].transpose();
    g.dM[a] += -2.0 * w.w2 * e * st.M[b] * d;
    g.dM[b] += -2.0 * w.w2 * e.transpose() * st.M[a] * d;
    for (int c = 0; c < k; ++c)
      dpi[c] += -2.0 * w.w2 * st.M[a].col(c).dot(e * st.M[b].col(c));
  };
  pair_term(0, 1);
  pair_term(0, 2);
  pair_term(1, 2);
  // triple residual (dense only)
  if (mom.triple && w.w3 != 0.0) {
    Tensor3 e = *mom.triple;
    for (int c = 0; c < k; ++c)
      e.add_rank_one(-pi[c], st.M[0].col(c), st.M[1].col(c), st.M[2].col(c));
    const int d1 = e.dim(0), d2 = e.dim(1), d3 = e.dim(2);
    for (int c = 0; c < k; ++c) {
      const Vec m1 = st.M[0].col(c), m2 = st.M[1].col(c), m3 = st.M[2].col(c);
      Vec g1 = Vec::Zero(d1), g2 = Vec::Zero(d2), g3 = Vec::Zero(d3);
      double full = 0.0;
      for (int i = 0; i < d1; ++i)
        for (int j = 0; j < d2; ++j) {
          const double m12 = m1[i] * m2[j];
          for (int l = 0; l < d3; ++l) {
            const double ev = e(i, j, l);
            g1[i] += ev * m2[j] * m3[l];
            g2[j] += ev * m1[i] * m3[l];
            g3[l] += ev * m12;
            full += ev * m12 * m3[l];
          }
        }
      g.dM[0].col(c) += -2.0 * w.w3 * pi[c] * g1;
      g.dM[1].col(c) += -2.0 * w.w3 * pi[c] * g2;
      g.dM[2].col(c) += -2.0 * w.w3 * pi[c] * g3;
      dpi[c] += -2.0 * w.w3 * full;
    }
  }
  // softmax chain rule
  g.dz = pi.asDiagonal() * dpi - pi * (pi.dot(dpi));
  return g;
}

}  // namespace

PlugInEstimate refine(const PlugInEstimate& start, const MomentSet& moments,
                      const RefineWeights& weights, int max_iterations) {
  if (start.k < 1) throw InputError("refine: empty estimate");
  RefineState st;
  st.M = start.M;
  st.z = start.pi.cwiseMax(1e-12).array().log();

  auto objective = [&](const RefineState& s) {
    return moment_fit_objective(s.M, s.pi(), moments, weights);
  };

  double j_cur = objective(st);
  const double j0 = j_cur;
  RefineState best = st;
  double j_best = j_cur;

  RefineGrad g = gradient(st, moments, weights);
  double step = 1.0 / (1.0 + std::sqrt(g.squared_norm()));
  bool warning = false;
  int it = 0;
  constexpr double kArmijo = 1e-4;

  RefineGrad g_prev;
  RefineState st_prev;
  bool have_prev = false;
  double j_window = j_cur;  // stall detection over a window of iterations
  constexpr int kWindow = 25;

  for (; it < max_iterations; ++it) {
    const double gnorm2 = g.squared_norm();
    if (gnorm2 <= 1e-28 * (1.0 + j_cur) || j_cur <= 1e-30 * (1.0 + j0)) break;
    if (it > 0 && it % kWindow == 0) {
      if (j_window - j_cur <= 1e-3 * j_window) break;  // < 0.1% progress per window
      j_window = j_cur;
    }

    // Barzilai-Borwein initial step from the previous accepted move.
    if (have_prev) {
      double sy = 0.0, ss = 0.0;
      for (int v = 0; v < 3; ++v) {
        const Mat s_v = st.M[v] - st_prev.M[v];
        const Mat y_v = g.dM[v] - g_prev.dM[v];
        sy += (s_v.array() * y_v.array()).sum();
        ss += s_v.squaredNorm();
      }
      const Vec s_z = st.z - st_prev.z;
      const Vec y_z = g.dz - g_prev.dz;
      sy += s_z.dot(y_z);
      ss += s_z.squaredNorm();
      if (sy > 1e-300 && ss > 0.0) step = ss / sy;
      step = std::clamp(step, 1e-16, 1e8);
    }

    // backtracking line search (halving) with Armijo acceptance
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      RefineState trial = st;
      for (int v = 0; v < 3; ++v) trial.M[v] -= step * g.dM[v];
      trial.z -= step * g.dz;
      const double j_trial = objective(trial);
      if (j_trial <= j_cur - kArmijo * step * gnorm2) {
        st_prev = st;
        g_prev = g;
        have_prev = true;
        st = trial;
        j_cur = j_trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // step underflow: converged as far as doubles go
    if (j_cur < j_best) {
      j_best = j_cur;
      best = st;
    }
    g = gradient(st, moments, weights);
  }

  if (it >= max_iterations && j_best > 1e-12 * (1.0 + j0)) warning = true;

  PlugInEstimate out = start;
  out.M = best.M;
  out.pi = clip_to_simplex(best.pi());
  out.residual = j_best;
  out.refine_warning = warning;
  fill_diagnostics(out, {});
  return out;
}

// ---------------------------------------------------------------------------
// Amplification
// ---------------------------------------------------------------------------

double estimate_distance(const PlugInEstimate& a, const PlugInEstimate& b) {
  if (a.k != b.k) throw InputError("estimate_distance: class counts differ");
  const int k = a.k;
  Mat cost(k, k);
  for (int j = 0; j < k; ++j)
    for (int l = 0; l < k; ++l) {
      double c = 0.0;
      for (int v = 0; v < 3; ++v) c += (a.M[v].col(j) - b.M[v].col(l)).squaredNorm();
      c += (a.pi[j] - b.pi[l]) * (a.pi[j] - b.pi[l]);
      cost(j, l) = c;
    }
  std::vector<int> row_of;  // row_of[l] = j matched to column l
  hungarian_min(cost, row_of);
  std::vector<int> match(k);  // match[j] = column of b aligned to column j of a
  for (int l = 0; l < k; ++l) match[row_of[l]] = l;

  double fro2 = 0.0, pi_inf = 0.0;
  for (int j = 0; j < k; ++j) {
    for (int v = 0; v < 3; ++v) fro2 += (a.M[v].col(j) - b.M[v].col(match[j])).squaredNorm();
    pi_inf = std::max(pi_inf, std::abs(a.pi[j] - b.pi[match[j]]));
  }
  return std::sqrt(fro2) + pi_inf;
}

std::size_t amplify_index(const Mat& distances, double eps) {
  const int n = static_cast<int>(distances.rows());
  if (n < 3) throw InputError("amplify: need at least 3 estimates");
  const int threshold = (n + 1) / 2;  // ceil(n/2) far-away others disqualify
  for (int i = 0; i < n; ++i) {
    int far = 0;
    for (int j = 0; j < n; ++j)
      if (j != i && distances(i, j) > 2.0 * eps) ++far;
    if (far < threshold) return static_cast<std::size_t>(i);
  }
  throw AmplificationError("amplify: every estimate was rejected");
}

PlugInEstimate amplify(const std::vector<PlugInEstimate>& estimates, double eps) {
  const int n = static_cast<int>(estimates.size());
  if (n < 3) throw InputError("amplify: need at least 3 estimates");
  Mat d = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = estimate_distance(estimates[i], estimates[j]);
  return estimates[amplify_index(d, eps)];
}

double amplify(const std::vector<double>& estimates, double eps) {
  const int n = static_cast<int>(estimates.size());
  if (n < 3) throw InputError("amplify: need at least 3 estimates");
  Mat d = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = std::abs(estimates[i] - estimates[j]);
  return estimates[amplify_index(d, eps)];
}

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

namespace {

PlugInEstimate run_pipeline(const MomentSet& moments, int k, const DecompositionConfig& config,
                            const TripleSource* second_pass) {
  WhitenedSystem sys;
  try {
    sys = symmetrize_and_whiten(moments, k, second_pass, config);
  } catch (const ConditioningError& e) {
    throw ConditioningError(std::string("stage symmetrize_and_whiten: ") + e.what(), e.sigma);
  }
  TensorEigenpairs pairs;
  try {
    pairs = tensor_power_method(sys.T, config.restarts, config.iterations, config.seed);
  } catch (const NumericError& e) {
    throw NumericError(std::string("stage tensor_power_method: ") + e.what());
  }
  PlugInEstimate est;
  try {
    est = recover_parameters(pairs, sys.W, moments, config);
  } catch (const ConditioningError& e) {
    throw ConditioningError(std::string("stage recover_parameters: ") + e.what(), e.sigma);
  }
  if (config.refine)
    est = refine(est, moments, RefineWeights::defaults(k), config.refine_max_iter);
  return est;
}

}  // namespace

PlugInEstimate decompose_source(const TripleSource& source, int k,
                                const DecompositionConfig& config) {
  if (k < 2) throw InputError("decompose: k must be >= 2");
  if (source.size() < config.min_samples)
    throw InputError("decompose: fewer samples than the configured minimum");
  MomentSet moments = accumulate_moments(source, config.dense_cap);
  return run_pipeline(moments, k, config, &source);
}

PlugInEstimate decompose_from_moments(const MomentSet& moments, int k,
                                      const DecompositionConfig& config,
                                      const TripleSource* second_pass) {
  if (k < 2) throw InputError("decompose: k must be >= 2");
  return run_pipeline(moments, k, config, second_pass);
}

PlugInEstimate decompose(const ViewArrays& samples, const ViewLossModel& model,
                         const DecompositionConfig& config) {
  const int k = model.k();
  if (k < 2) throw InputError("decompose: k must be >= 2");
  if (samples.size() < config.min_samples)
    throw InputError("decompose: fewer samples than the configured minimum");

  const ScaleConstants scale = estimate_scale_constants(samples, model, model.theta());

  PlugInEstimate result;
  if (config.splits <= 1) {
    ModelTripleSource src(samples, model);
    if (config.augment_constant) {
      AugmentedTripleSource lifted(src);
      result = decompose_source(lifted, k, config);
    } else {
      result = decompose_source(src, k, config);
    }
  } else {
    const std::size_t m = samples.size();
    const int splits = std::min<int>(config.splits, static_cast<int>(m));
    std::vector<PlugInEstimate> parts;
    parts.reserve(splits);
    std::vector<ViewArrays> chunks;
    chunks.reserve(splits);
    const std::size_t chunk = m / splits;
    for (int s = 0; s < splits; ++s) {
      const std::size_t lo = s * chunk;
      const std::size_t hi = (s + 1 == splits) ? m : lo + chunk;
      chunks.push_back(samples.slice(lo, hi));
      DecompositionConfig sub = config;
      sub.splits = 1;
      sub.seed = mix_seed(config.seed, static_cast<std::uint64_t>(s));
      ModelTripleSource src(chunks.back(), model);
      if (config.augment_constant) {
        AugmentedTripleSource lifted(src);
        parts.push_back(decompose_source(lifted, k, sub));
      } else {
        parts.push_back(decompose_source(src, k, sub));
      }
    }
    double eps;
    if (config.amplify_eps) {
      eps = *config.amplify_eps;
    } else {
      // median pairwise distance: clusters of good estimates survive, isolated
      // outliers are cut
      std::vector<double> dists;
      for (std::size_t i = 0; i < parts.size(); ++i)
        for (std::size_t j = i + 1; j < parts.size(); ++j)
          dists.push_back(estimate_distance(parts[i], parts[j]));
      std::sort(dists.begin(), dists.end());
      eps = dists.empty() ? 0.0 : dists[dists.size() / 2];
    }
    result = amplify(parts, eps);
  }
  result.tau = scale.tau;
  return result;
}

}  // namespace unrisk
