#pragma once

// Test-only oracles: forward moment construction, brute-force references, and
// finite differences. Nothing here may call into the implementation paths it
// is used to check.

#include "unrisk/common.hpp"
#include "unrisk/hmm.hpp"
#include "unrisk/matching.hpp"
#include "unrisk/models.hpp"
#include "unrisk/moments.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace oracle {

using unrisk::Mat;
using unrisk::Tensor3;
using unrisk::Vec;

// Population moments of a known mixture: first = M pi, pair = M diag(pi) M',
// triple = sum_j pi_j m1_j (x) m2_j (x) m3_j.
inline unrisk::MomentSet exact_moments(const std::array<Mat, 3>& M, const Vec& pi,
                                       bool with_triple = true) {
  unrisk::MomentSet out;
  out.m = 1;  // population
  for (int v = 0; v < 3; ++v) {
    out.dim[v] = static_cast<int>(M[v].rows());
    out.first[v] = M[v] * pi;
  }
  const Mat d = pi.asDiagonal();
  out.pair01 = M[0] * d * M[1].transpose();
  out.pair02 = M[0] * d * M[2].transpose();
  out.pair12 = M[1] * d * M[2].transpose();
  if (with_triple) {
    Tensor3 t(out.dim[0], out.dim[1], out.dim[2]);
    for (int j = 0; j < pi.size(); ++j)
      t.add_rank_one(pi[j], M[0].col(j), M[1].col(j), M[2].col(j));
    out.triple = std::move(t);
  }
  return out;
}

// Smallest max-abs parameter error over all shared column permutations.
inline double aligned_error(const std::array<Mat, 3>& M_hat, const Vec& pi_hat,
                            const std::array<Mat, 3>& M_true, const Vec& pi_true) {
  const int k = static_cast<int>(pi_true.size());
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double err = 0.0;
    for (int j = 0; j < k; ++j) {
      err = std::max(err, std::abs(pi_hat[perm[j]] - pi_true[j]));
      for (int v = 0; v < 3; ++v)
        err = std::max(err, (M_hat[v].col(perm[j]) - M_true[v].col(j)).cwiseAbs().maxCoeff());
    }
    best = std::min(best, err);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Exhaustive maximum assignment with the lexicographic-smallest tie-break.
inline unrisk::Permutation brute_force_assignment(const Mat& X) {
  const int k = static_cast<int>(X.rows());
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  unrisk::Permutation best;
  best.value = -std::numeric_limits<double>::infinity();
  do {
    double val = 0.0;
    for (int j = 0; j < k; ++j) val += X(perm[j], j);
    if (val > best.value + 1e-12) {
      best.value = val;
      best.sigma = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Central finite differences of the view loss vector in theta.
inline Mat fd_loss_gradient(const unrisk::ViewLossModel& model, const Vec& x_v, int v,
                            double step = 1e-5) {
  const int k = model.k();
  const int d = model.d();
  Mat g(k, d);
  for (int r = 0; r < d; ++r) {
    Vec tp = model.theta();
    Vec tm = model.theta();
    tp[r] += step;
    tm[r] -= step;
    const Vec hp = model.with_theta(tp).loss_vector(x_v, v);
    const Vec hm = model.with_theta(tm).loss_vector(x_v, v);
    g.col(r) = (hp - hm) / (2.0 * step);
  }
  return g;
}

// Random ground-truth instances with conditioning floors, by resampling.
inline Mat random_conditioned_matrix(int rows, int k, double sigma_min, unrisk::Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Mat m(rows, k);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < k; ++j) m(i, j) = gauss(rng);
    if (unrisk::kth_singular_value(m, k) >= sigma_min) return m;
  }
  throw std::runtime_error("could not sample a well-conditioned matrix");
}

inline Vec random_simplex(int k, double pi_min, unrisk::Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Vec pi(k);
    for (int j = 0; j < k; ++j) pi[j] = -std::log(unif(rng));
    pi /= pi.sum();
    if (pi.minCoeff() >= pi_min) return pi;
  }
  throw std::runtime_error("could not sample a prior with the requested floor");
}

// Dual-basis logistic parameters for the Gaussian multi-view generator:
// weight vectors satisfy w_{v,i}' mu_{v,j} = scale * delta_ij, so the
// population conditional risk matrices are scale * I (well conditioned by
// construction). Requires every view dimension >= k.
inline Vec dual_basis_theta(const std::array<Mat, 3>& mu, int k, double scale) {
  int d = 0;
  for (int v = 0; v < 3; ++v) d += k * static_cast<int>(mu[v].cols());
  Vec theta = Vec::Zero(d);
  int offset = 0;
  for (int v = 0; v < 3; ++v) {
    const int p = static_cast<int>(mu[v].cols());
    const Mat w = scale * unrisk::pseudo_inverse(mu[v]).transpose();  // k x p
    for (int j = 0; j < k; ++j) theta.segment(offset + j * p, p) = w.row(j).transpose();
    offset += k * p;
  }
  return theta;
}

// Brute-force chain posteriors by enumerating all k^T label paths.
struct EnumeratedPosteriors {
  Mat unary;                  // T x k
  std::vector<Mat> pairwise;  // T-1 of k x k
  double log_partition = 0.0;

  // log p(y_{1:T} | x) for one path
  double log_path_posterior(const std::vector<int>& y, const unrisk::HmmModel& hmm,
                            const Mat& obs) const {
    double lp = hmm.log_initial[y[0]] + hmm.log_emission_at(obs.row(0).transpose())[y[0]];
    for (std::size_t t = 1; t < y.size(); ++t)
      lp += hmm.log_transition(y[t - 1], y[t]) +
            hmm.log_emission_at(obs.row(static_cast<Eigen::Index>(t)).transpose())[y[t]];
    return lp - log_partition;
  }
};

inline EnumeratedPosteriors enumerate_chain(const unrisk::HmmModel& hmm, const Mat& obs) {
  const int T = static_cast<int>(obs.rows());
  const int k = hmm.k;
  std::vector<Vec> lg(T);
  for (int t = 0; t < T; ++t) lg[t] = hmm.log_emission_at(obs.row(t).transpose());

  long total = 1;
  for (int t = 0; t < T; ++t) total *= k;

  std::vector<double> logw(total);
  std::vector<int> y(T);
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int t = 0; t < T; ++t) {
      y[t] = static_cast<int>(rem % k);
      rem /= k;
    }
    double lp = hmm.log_initial[y[0]] + lg[0][y[0]];
    for (int t = 1; t < T; ++t) lp += hmm.log_transition(y[t - 1], y[t]) + lg[t][y[t]];
    logw[idx] = lp;
  }
  const double lse = unrisk::log_sum_exp(Eigen::Map<Vec>(logw.data(), total));

  EnumeratedPosteriors out;
  out.log_partition = lse;
  out.unary = Mat::Zero(T, k);
  out.pairwise.assign(T - 1, Mat::Zero(k, k));
  std::vector<Mat> pw_acc(T - 1, Mat::Zero(k, k));
  Mat un_acc = Mat::Zero(T, k);
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int t = 0; t < T; ++t) {
      y[t] = static_cast<int>(rem % k);
      rem /= k;
    }
    const double w = std::exp(logw[idx] - lse);
    for (int t = 0; t < T; ++t) un_acc(t, y[t]) += w;
    for (int t = 1; t < T; ++t) pw_acc[t - 1](y[t - 1], y[t]) += w;
  }
  out.unary = un_acc;
  out.pairwise = pw_acc;
  return out;
}

}  // namespace oracle
