#include "unrisk/hmm.hpp"

#include "unrisk/matching.hpp"
#include "unrisk/moments.hpp"
#include "unrisk/risk.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace unrisk {

namespace {

Vec default_initial(int k, const Vec& given) {
  if (given.size() == 0) return Vec::Zero(k);
  if (given.size() != k) throw InputError("initial potential has wrong length");
  if (given.minCoeff() <= 0.0) throw InputError("initial potential must be strictly positive");
  return given.array().log();
}

void check_positive(const Mat& m, const std::string& what) {
  if (m.minCoeff() <= 0.0) throw NumericError(what + " must be strictly positive");
}

}  // namespace

HmmModel HmmModel::tabular(const Mat& transition, const Mat& emission_table, Vec initial) {
  const int k = static_cast<int>(transition.rows());
  if (transition.cols() != k) throw InputError("transition must be square");
  check_positive(transition, "transition potentials");
  check_positive(emission_table, "emission potentials");
  if (emission_table.rows() != k) throw InputError("emission table must have k rows");
  HmmModel m;
  m.k = k;
  m.log_transition = transition.array().log();
  m.log_initial = default_initial(k, initial);
  Mat log_table = emission_table.array().log();
  const int n_obs = static_cast<int>(emission_table.cols());
  m.log_emission = [log_table, n_obs](const Vec& obs_t) {
    const int o = static_cast<int>(std::llround(obs_t[0]));
    if (o < 0 || o >= n_obs) throw InputError("observation symbol out of range");
    return Vec(log_table.col(o));
  };
  return m;
}

HmmModel HmmModel::gaussian(const Mat& transition, const Mat& means, double sigma, Vec initial) {
  const int k = static_cast<int>(transition.rows());
  if (transition.cols() != k) throw InputError("transition must be square");
  check_positive(transition, "transition potentials");
  if (means.rows() != k) throw InputError("emission means must have k rows");
  if (!(sigma > 0.0)) throw InputError("emission sigma must be positive");
  HmmModel m;
  m.k = k;
  m.log_transition = transition.array().log();
  m.log_initial = default_initial(k, initial);
  const Mat mu = means;
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  const double log_norm = -0.5 * means.cols() * std::log(2.0 * M_PI * sigma * sigma);
  m.log_emission = [mu, inv2s2, log_norm, k](const Vec& obs_t) {
    Vec out(k);
    for (int j = 0; j < k; ++j)
      out[j] = log_norm - (obs_t - mu.row(j).transpose()).squaredNorm() * inv2s2;
    return out;
  };
  return m;
}

HmmModel HmmModel::from_generator(const HmmGeneratorSpec& spec) {
  Vec init = spec.initial;
  if (spec.emission == EmissionType::Finite)
    return tabular(spec.transition, spec.emission_table, init);
  return gaussian(spec.transition, spec.emission_means, spec.emission_sigma, init);
}

Vec HmmModel::log_emission_at(const Vec& obs_t) const {
  Vec lg = log_emission(obs_t);
  if (lg.size() != k) throw InputError("emission returned wrong length");
  if (!lg.allFinite())
    throw NumericError("zero or non-finite emission potential (no numerical support)");
  return lg;
}

// ---------------------------------------------------------------------------
// Forward-backward in log space
// ---------------------------------------------------------------------------

MessageTable forward_backward(const HmmModel& hmm, const Mat& obs) {
  const int T = static_cast<int>(obs.rows());
  const int k = hmm.k;
  if (T < 1) throw InputError("forward_backward: T must be >= 1");
  if (!hmm.log_transition.allFinite())
    throw NumericError("zero or non-finite transition potential (no numerical support)");

  MessageTable tab;
  tab.log_emissions = Mat(T, k);
  for (int t = 0; t < T; ++t)
    tab.log_emissions.row(t) = hmm.log_emission_at(obs.row(t).transpose()).transpose();

  tab.log_predictive = Mat(T, k);
  tab.log_filtered = Mat(T, k);
  // prior at t = 0 (normalized initial potential)
  {
    Vec lp = hmm.log_initial;
    lp.array() -= log_sum_exp(lp);
    tab.log_predictive.row(0) = lp.transpose();
  }
  for (int t = 0; t < T; ++t) {
    if (t > 0) {
      Vec lp(k);
      for (int j = 0; j < k; ++j) {
        Vec terms = tab.log_filtered.row(t - 1).transpose() + hmm.log_transition.col(j);
        lp[j] = log_sum_exp(terms);
      }
      lp.array() -= log_sum_exp(lp);
      tab.log_predictive.row(t) = lp.transpose();
    }
    Vec la = tab.log_predictive.row(t).transpose() + tab.log_emissions.row(t).transpose();
    la.array() -= log_sum_exp(la);
    tab.log_filtered.row(t) = la.transpose();
  }

  tab.log_backward = Mat::Zero(T, k);
  for (int t = T - 2; t >= 0; --t) {
    Vec lb(k);
    for (int j = 0; j < k; ++j) {
      Vec terms = hmm.log_transition.row(j).transpose() +
                  tab.log_emissions.row(t + 1).transpose() +
                  tab.log_backward.row(t + 1).transpose();
      lb[j] = log_sum_exp(terms);
    }
    lb.array() -= lb.maxCoeff();  // max entry 1 in linear space
    tab.log_backward.row(t) = lb.transpose();
  }

  tab.log_posterior = Mat(T, k);
  for (int t = 0; t < T; ++t) {
    Vec lp = tab.log_filtered.row(t).transpose() + tab.log_backward.row(t).transpose();
    lp.array() -= log_sum_exp(lp);
    tab.log_posterior.row(t) = lp.transpose();
  }

  tab.log_pairwise.resize(T >= 2 ? T - 1 : 0);
  for (int t = 1; t < T; ++t) {
    Mat lxi(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        lxi(i, j) = tab.log_filtered(t - 1, i) + hmm.log_transition(i, j) +
                    tab.log_emissions(t, j) + tab.log_backward(t, j);
    Eigen::Map<Vec> flat(lxi.data(), k * k);
    flat.array() -= log_sum_exp(flat);
    tab.log_pairwise[t - 1] = lxi;
  }
  return tab;
}

// ---------------------------------------------------------------------------
// Per-position view losses
// ---------------------------------------------------------------------------

LocalLossViews local_loss_views(const HmmModel& hmm, const MessageTable& msgs, int t,
                                LossKind kind) {
  const int T = msgs.T();
  const int k = hmm.k;
  LocalLossViews out;
  if (kind == LossKind::Unary) {
    if (t < 2 || t > T - 1)
      throw InputError("unary position t must satisfy 2 <= t <= T-1 (got t=" +
                       std::to_string(t) + ")");
    const int tt = t - 1;  // 0-based
    out.label_count = k;
    out.f[0] = msgs.log_predictive.row(tt).transpose();
    out.f[1] = msgs.log_emissions.row(tt).transpose();
    out.f[2] = msgs.log_backward.row(tt).transpose();
  } else {
    if (t < 3 || t > T - 1)
      throw InputError("pair position t must satisfy 3 <= t <= T-1 (got t=" +
                       std::to_string(t) + ")");
    const int tt = t - 1;
    out.label_count = k * k;
    for (int v = 0; v < 3; ++v) out.f[v] = Vec(k * k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        const int c = i * k + j;
        out.f[0][c] = msgs.log_predictive(tt - 1, i);
        out.f[1][c] = msgs.log_emissions(tt - 1, i) + hmm.log_transition(i, j) +
                      msgs.log_emissions(tt, j);
        out.f[2][c] = msgs.log_backward(tt, j);
      }
  }
  Vec total = out.f[0] + out.f[1] + out.f[2];
  out.A = log_sum_exp(total);
  return out;
}

LocalLossViews local_loss_views(const HmmModel& hmm, const Mat& obs, int t, LossKind kind) {
  return local_loss_views(hmm, forward_backward(hmm, obs), t, kind);
}

// ---------------------------------------------------------------------------
// Per-position risk estimation
// ---------------------------------------------------------------------------

namespace {

constexpr double kDegenerateSpread = 1e-9;

bool view_label_independent(const Mat& rows) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double spread = rows.row(i).maxCoeff() - rows.row(i).minCoeff();
    if (spread > kDegenerateSpread) return false;
  }
  return true;
}

struct UnaryFit {
  // conditional mean matrices aligned to the model's labels, N_v(:, i) =
  // E[h_v | y_s = i], and the aligned prior rho
  std::array<Mat, 3> N;
  Vec rho;
  double lambda = 0.0;
  bool degenerate = false;
};

// Decompose one unary position; on label-independent losses fall back to the
// direct mean (any column order is equivalent there).
UnaryFit fit_unary(const std::array<Mat, 3>& rows, int k, const DecompositionConfig& config,
                   int position) {
  UnaryFit fit;
  const bool deg = view_label_independent(rows[0]) && view_label_independent(rows[1]) &&
                   view_label_independent(rows[2]);
  if (deg) {
    fit.degenerate = true;
    fit.rho = Vec::Constant(k, 1.0 / k);
    for (int v = 0; v < 3; ++v) {
      const Vec mean = rows[v].colwise().mean().transpose();
      fit.N[v] = mean.replicate(1, k);
    }
    return fit;
  }
  try {
    MatrixTripleSource src({rows[0], rows[1], rows[2]});
    const PlugInEstimate est = decompose_source(src, k, config);
    const Permutation perm = best_permutation(est.M, est.pi);
    fit.lambda = est.lambda_min;
    fit.rho = Vec(k);
    for (int v = 0; v < 3; ++v) fit.N[v] = Mat(k, k);
    for (int i = 0; i < k; ++i) {
      fit.rho[i] = est.pi[perm.sigma[i]];
      for (int v = 0; v < 3; ++v) fit.N[v].col(i) = est.M[v].col(perm.sigma[i]);
    }
    fit.rho = clip_to_simplex(fit.rho);
    return fit;
  } catch (const ConditioningError& e) {
    throw ConditioningError("position t=" + std::to_string(position) + ": " + e.what(), e.sigma);
  } catch (const NumericError& e) {
    throw NumericError("position t=" + std::to_string(position) + ": " + e.what());
  }
}

}  // namespace

HmmRiskResult hmm_risk(const HmmModel& hmm, const std::vector<Mat>& sequences,
                       const DecompositionConfig& config) {
  const std::size_t m = sequences.size();
  if (m == 0) throw InputError("hmm_risk: no sequences");
  if (m < config.min_samples) throw InputError("hmm_risk: fewer sequences than the configured minimum");
  const int T = static_cast<int>(sequences[0].rows());
  const int k = hmm.k;
  if (T < 4)
    throw InputError("hmm_risk: T must be >= 4 (no admissible pair position at T=" +
                     std::to_string(T) + ")");
  for (const Mat& s : sequences)
    if (static_cast<int>(s.rows()) != T) throw InputError("hmm_risk: ragged sequence lengths");

  // one inference pass per sequence; materialize per-position loss rows
  const int n_unary = T - 2;  // s = 2..T-1 (1-based)
  std::vector<std::array<Mat, 3>> unary_rows(n_unary);
  std::vector<Vec> unary_A(n_unary, Vec(m));
  for (int u = 0; u < n_unary; ++u)
    for (int v = 0; v < 3; ++v) unary_rows[u][v] = Mat(m, k);

  const int n_pair = T - 3;  // t = 3..T-1
  std::vector<std::array<Mat, 3>> pair_rows(n_pair);
  std::vector<Vec> pair_A(n_pair, Vec(m));
  for (int p = 0; p < n_pair; ++p)
    for (int v = 0; v < 3; ++v) pair_rows[p][v] = Mat(m, k * k);

  for (std::size_t i = 0; i < m; ++i) {
    const MessageTable msgs = forward_backward(hmm, sequences[i]);
    for (int s = 2; s <= T - 1; ++s) {
      const LocalLossViews lv = local_loss_views(hmm, msgs, s, LossKind::Unary);
      const int u = s - 2;
      for (int v = 0; v < 3; ++v) unary_rows[u][v].row(i) = lv.f[v].transpose();
      unary_A[u][i] = lv.A;
    }
    for (int t = 3; t <= T - 1; ++t) {
      const LocalLossViews lv = local_loss_views(hmm, msgs, t, LossKind::Pair);
      const int p = t - 3;
      for (int v = 0; v < 3; ++v) pair_rows[p][v].row(i) = lv.f[v].transpose();
      pair_A[p][i] = lv.A;
    }
  }

  // unary decompositions at every admissible position (pair assembly needs
  // the boundary ones even though only t = 3..T-2 enter the sum)
  std::vector<UnaryFit> fits(n_unary);
  for (int s = 2; s <= T - 1; ++s) {
    DecompositionConfig sub = config;
    sub.seed = mix_seed(config.seed, 0x75ULL + s);
    sub.min_samples = 1;
    fits[s - 2] = fit_unary(unary_rows[s - 2], k, sub, s);
  }

  HmmRiskResult out;
  double total = 0.0;

  for (int s = 3; s <= T - 2; ++s) {
    const UnaryFit& fit = fits[s - 2];
    PositionTerm term;
    term.t = s;
    term.A_mean = unary_A[s - 2].mean();
    term.lambda = fit.lambda;
    term.degenerate = fit.degenerate;
    double corr = 0.0;
    for (int i = 0; i < k; ++i)
      for (int v = 0; v < 3; ++v) corr += fit.rho[i] * fit.N[v](i, i);
    term.value = term.A_mean - corr;
    total -= term.value;
    out.unary_terms.push_back(term);
  }

  for (int t = 3; t <= T - 1; ++t) {
    const int p = t - 3;
    PositionTerm term;
    term.t = t;
    term.A_mean = pair_A[p].mean();

    const bool deg = view_label_independent(pair_rows[p][0]) &&
                     view_label_independent(pair_rows[p][1]) &&
                     view_label_independent(pair_rows[p][2]);
    if (deg) {
      term.degenerate = true;
      double corr = 0.0;
      for (int v = 0; v < 3; ++v) corr += pair_rows[p][v].mean();
      term.value = term.A_mean - corr;
    } else {
      const UnaryFit& left = fits[t - 1 - 2];   // position t-1
      const UnaryFit& right = fits[t - 2];      // position t
      term.lambda = std::min(left.lambda, right.lambda);

      // pair prior from the bilinear inversion of the prefix/suffix cross moment
      Mat stacked_a(m, 2 * k), stacked_b(m, 2 * k);
      stacked_a << unary_rows[t - 1 - 2][0], unary_rows[t - 1 - 2][1];
      stacked_b << unary_rows[t - 2][1], unary_rows[t - 2][2];
      const Mat cross = (stacked_a.transpose() * stacked_b) / static_cast<double>(m);
      Mat na(2 * k, k), nb(2 * k, k);
      na << left.N[0], left.N[1];
      nb << right.N[1], right.N[2];
      Mat pair_prior = pseudo_inverse(na, config.rank_tol) * cross *
                       pseudo_inverse(nb, config.rank_tol).transpose();
      Eigen::Map<Vec> prior_flat(pair_prior.data(), k * k);
      Vec pi_pair;
      try {
        pi_pair = clip_to_simplex(prior_flat);
      } catch (const NumericError& e) {
        throw NumericError("position t=" + std::to_string(t) + ": pair prior inversion: " +
                           e.what());
      }
      // NOTE: Eigen::Map over a Mat is column-major; pair_prior(i, j) sits at
      // index i + k*j, so pi_pair is flattened with c = i + k*j. The assembled
      // matrices below must use the same flattening.
      std::array<Mat, 3> mp;
      for (int v = 0; v < 3; ++v) mp[v] = Mat(k * k, k * k);
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
          const int row = a + k * b;  // (y_{t-1} = a, y_t = b)
          for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
              const int col = i + k * j;
              mp[0](row, col) = left.N[0](a, i);
              mp[1](row, col) = left.N[1](a, i) + hmm.log_transition(a, b) + right.N[1](b, j);
              mp[2](row, col) = right.N[2](b, j);
            }
        }
      const Permutation perm = best_permutation(mp, pi_pair);
      term.value = risk_from_components(term.A_mean, mp, pi_pair, perm.sigma);
    }
    total += term.value;
    out.pair_terms.push_back(term);
  }

  out.inner_risk = total;
  return out;
}

double hmm_labeled_inner_risk(const HmmModel& hmm, const SequenceDataset& data) {
  if (data.labels.empty()) throw InputError("labeled oracle needs labels");
  const int T = data.T;
  if (T < 4) throw InputError("labeled oracle: T must be >= 4");
  long double acc = 0.0L;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const MessageTable msgs = forward_backward(hmm, data.obs[i]);
    const std::vector<int>& y = data.labels[i];
    double lp = 0.0;
    for (int t = 3; t <= T - 1; ++t) lp += msgs.log_pairwise[t - 2](y[t - 2], y[t - 1]);
    for (int t = 3; t <= T - 2; ++t) lp -= msgs.log_posterior(t - 1, y[t - 1]);
    acc += -lp;
  }
  return static_cast<double>(acc / data.size());
}

nlohmann::json HmmRiskResult::to_json() const {
  nlohmann::json j;
  j["inner_risk"] = inner_risk;
  auto dump = [](const std::vector<PositionTerm>& terms) {
    nlohmann::json arr = nlohmann::json::array();
    for (const PositionTerm& t : terms)
      arr.push_back({{"t", t.t},
                     {"value", t.value},
                     {"A_mean", t.A_mean},
                     {"lambda", t.lambda},
                     {"degenerate", t.degenerate}});
    return arr;
  };
  j["pair_terms"] = dump(pair_terms);
  j["unary_terms"] = dump(unary_terms);
  return j;
}

}  // namespace unrisk
