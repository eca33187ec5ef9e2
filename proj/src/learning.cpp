#include "unrisk/learning.hpp"

#include "unrisk/matching.hpp"
#include "unrisk/moments.hpp"
#include "unrisk/risk.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace unrisk {

nlohmann::json LearnConfig::to_json() const {
  nlohmann::json j;
  j["rho"] = rho;
  j["eta"] = eta;
  j["steps"] = steps;
  j["m"] = m;
  j["seed"] = seed;
  j["constrain_general"] = constrain_general;
  j["reuse_gradient_moments"] = reuse_gradient_moments;
  j["solver_tol"] = solver_tol;
  j["solver_max_iter"] = solver_max_iter;
  return j;
}

LearnConfig LearnConfig::from_json(const nlohmann::json& j) {
  LearnConfig c;
  c.rho = j.value("rho", c.rho);
  c.eta = j.value("eta", c.eta);
  c.steps = j.value("steps", c.steps);
  c.m = j.value("m", c.m);
  c.seed = j.value("seed", c.seed);
  c.constrain_general = j.value("constrain_general", c.constrain_general);
  c.reuse_gradient_moments = j.value("reuse_gradient_moments", c.reuse_gradient_moments);
  c.solver_tol = j.value("solver_tol", c.solver_tol);
  c.solver_max_iter = j.value("solver_max_iter", c.solver_max_iter);
  if (!(c.rho > 0.0) || !(c.eta > 0.0) || c.steps < 0)
    throw InputError("learn config: need rho > 0, eta > 0, steps >= 0");
  return c;
}

SeedContext seed_alignment(const ViewArrays& samples, const ViewLossModel& model,
                           const Vec& theta0, const DecompositionConfig& config,
                           double gap_warn_threshold) {
  SeedContext ctx;
  ctx.theta0 = theta0;
  const ViewLossModel seeded = model.with_theta(theta0);
  ctx.at_seed = decompose(samples, seeded, config);
  const Permutation perm = best_permutation(ctx.at_seed.M, ctx.at_seed.pi);
  ctx.sigma0 = perm.sigma;
  if (ctx.at_seed.k <= 10) {
    ctx.gap = permutation_gap(ctx.at_seed.M, ctx.at_seed.pi);
    ctx.gap_warning = ctx.gap < gap_warn_threshold;
  } else {
    ctx.gap = std::numeric_limits<double>::quiet_NaN();
  }
  return ctx;
}

GradientMoments estimate_mean_features(const ViewArrays& samples, const ViewLossModel& model,
                                       const Vec& theta0, const Vec& theta_query,
                                       const DecompositionConfig& config) {
  const int k = model.k();
  const int d = model.d();
  const ScaleConstants scale = estimate_scale_constants(samples, model, theta0);
  const ViewLossModel seeded = model.with_theta(theta0);
  ExtendedTripleSource src(samples, seeded, theta_query, scale);

  GradientMoments gm;
  try {
    // the pipeline makes two passes; materialize the extended rows once when
    // they fit comfortably in memory (the features are the expensive part)
    const std::size_t bytes = samples.size() * static_cast<std::size_t>(src.dim(0)) * 3 * 8;
    if (bytes <= (1u << 28)) {
      std::array<Mat, 3> rows;
      for (int v = 0; v < 3; ++v) rows[v] = Mat(samples.size(), src.dim(v));
      src.visit_all([&](std::size_t i, const Vec& a, const Vec& b, const Vec& c) {
        rows[0].row(static_cast<Eigen::Index>(i)) = a.transpose();
        rows[1].row(static_cast<Eigen::Index>(i)) = b.transpose();
        rows[2].row(static_cast<Eigen::Index>(i)) = c.transpose();
      });
      MatrixTripleSource materialized({std::move(rows[0]), std::move(rows[1]), std::move(rows[2])});
      gm.raw = decompose_source(materialized, k, config);
    } else {
      gm.raw = decompose_source(src, k, config);
    }
  } catch (const ConditioningError& e) {
    throw ConditioningError("extended-feature decomposition: " + std::string(e.what()), e.sigma);
  }

  // Resolve the shared column permutation through the theta0 block; the seed
  // assumption makes its matching the true alignment, and the gradient block
  // inherits it.
  std::array<Mat, 3> tops;
  for (int v = 0; v < 3; ++v) tops[v] = gm.raw.M[v].topRows(k);
  const Permutation perm = best_permutation(tops, gm.raw.pi);
  gm.sigma = perm.sigma;

  const double back_scale = (d > 0 && scale.tau > 0.0) ? scale.B / scale.tau : 0.0;
  gm.pi = Vec(k);
  for (int v = 0; v < 3; ++v) {
    gm.M_seed[v] = Mat(k, k);
    gm.G[v] = Mat(d * k, k);
  }
  for (int j = 0; j < k; ++j) {
    const int src_col = perm.sigma[j];
    gm.pi[j] = gm.raw.pi[src_col];
    for (int v = 0; v < 3; ++v) {
      gm.M_seed[v].col(j) = gm.raw.M[v].col(src_col).head(k);
      if (d > 0)
        gm.G[v].col(j) = back_scale * gm.raw.M[v].col(src_col).tail(d * k);
    }
  }
  gm.pi = clip_to_simplex(gm.pi);

  gm.phi_hat = Vec::Zero(d);
  for (int r = 0; r < d; ++r)
    for (int j = 0; j < k; ++j)
      for (int v = 0; v < 3; ++v) gm.phi_hat[r] += gm.pi[j] * gm.G[v](j + k * r, j);
  return gm;
}

namespace {

Vec project_ball(const Vec& theta, double rho) {
  const double n = theta.norm();
  return n <= rho ? theta : Vec((rho / n) * theta);
}

}  // namespace

LearnResult solve_constrained_linear(const ViewArrays& samples, const ViewLossModel& model,
                                     const Vec& target, double rho, double tol, int max_iter) {
  if (rho < 0.0) throw InputError("solver: rho must be >= 0");
  const int d = model.d();
  if (target.size() != d) throw InputError("solver: target has wrong length");
  const std::size_t m = samples.size();
  if (m == 0) throw InputError("solver: empty sample set");

  auto objective = [&](const Vec& theta) {
    return model.with_theta(theta).mean_base(samples) - theta.dot(target);
  };
  auto grad = [&](const Vec& theta) {
    return Vec(model.with_theta(theta).mean_grad_base(samples) - target);
  };

  LearnResult result;
  Vec theta = project_ball(Vec::Zero(d), rho);
  if (rho == 0.0) {
    result.theta = theta;
    return result;
  }

  // accelerated projected gradient (Nesterov momentum with function-value
  // restart); backtracking keeps the step valid for the local curvature
  Vec y = theta;
  double f = objective(theta);
  double f_prev = f;
  double step = 1.0;
  double momentum = 1.0;
  result.converged = false;
  for (int it = 0; it < max_iter; ++it) {
    const Vec g = grad(y);
    const double f_y = objective(y);
    Vec trial;
    double f_trial = 0.0;
    bool ok = false;
    for (int half = 0; half < 60; ++half) {
      trial = project_ball(y - step * g, rho);
      const Vec diff = trial - y;
      f_trial = objective(trial);
      if (f_trial <= f_y + g.dot(diff) + diff.squaredNorm() / (2.0 * step)) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) break;
    const double move = (trial - y).norm();
    const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    if (f_trial > f) {
      // restart the momentum when acceleration overshoots
      y = theta;
      momentum = 1.0;
    } else {
      y = trial + ((momentum - 1.0) / momentum_next) * (trial - theta);
      y = project_ball(y, rho);
      theta = trial;
      f_prev = f;
      f = f_trial;
      momentum = momentum_next;
    }
    if (move / step <= tol && f_prev - f <= tol * (1.0 + std::abs(f))) {
      result.converged = true;
      break;
    }
    step *= 1.3;  // gentle growth so the line search stays short
  }
  result.theta = theta;
  return result;
}

LearnResult learn_logistic(const ViewArrays& samples, const ViewLossModel& model,
                           const Vec& theta0, const LearnConfig& lc,
                           const DecompositionConfig& dc) {
  if (model.kind() != ModelKind::Logistic)
    throw InputError("learn_logistic: logistic kind required");
  if (lc.rho < 0.0) throw InputError("learn_logistic: rho must be >= 0");
  const GradientMoments gm = estimate_mean_features(samples, model, theta0, theta0, dc);
  return solve_constrained_linear(samples, model, gm.phi_hat, lc.rho, lc.solver_tol,
                                  lc.solver_max_iter);
}

LearnResult learn_general(const ViewArrays& samples, const ViewLossModel& model,
                          const Vec& theta0, const LearnConfig& lc,
                          const DecompositionConfig& dc, const GradientFn& gradient_override) {
  if (!(lc.eta > 0.0) || lc.steps < 0)
    throw InputError("learn_general: need eta > 0 and steps >= 0");
  const int d = model.d();
  if (theta0.size() != d) throw InputError("learn_general: theta0 has wrong length");
  if (lc.steps == 0) {
    // zero-step run: the seed model passes through untouched
    LearnResult result;
    result.theta = theta0;
    return result;
  }

  LearnResult result;
  Vec z = Vec::Zero(d);
  Vec theta_avg = Vec::Zero(d);  // incremental mean: exact for constant iterates
  Vec prev_grad = Vec::Zero(d);
  bool have_grad = false;
  std::optional<GradientMoments> cached;

  for (int t = 1; t <= lc.steps; ++t) {
    // closed-form argmin of (1/2 eta)||theta - theta0||^2 - theta' z
    Vec theta_t = theta0 + lc.eta * z;
    if (lc.constrain_general && lc.rho > 0.0) theta_t = project_ball(theta_t, lc.rho);

    StepLog log;
    log.t = t;
    Vec g;
    if (gradient_override) {
      g = gradient_override(theta_t, t);
      if (g.size() != d) throw InputError("gradient override returned wrong length");
    } else {
      // per-step sample budget: a seeded subsample when configured
      ViewArrays subset;
      const ViewArrays* use = &samples;
      if (lc.m > 0 && lc.m < samples.size()) {
        Rng rng(mix_seed(lc.seed, static_cast<std::uint64_t>(t)));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::vector<std::size_t> idx(lc.m);
        for (std::size_t i = 0; i < lc.m; ++i)
          idx[i] = static_cast<std::size_t>(unif(rng) * samples.size());
        for (int v = 0; v < 3; ++v) {
          subset.x[v] = Mat(lc.m, samples.dim(v));
          for (std::size_t i = 0; i < lc.m; ++i)
            subset.x[v].row(static_cast<Eigen::Index>(i)) = samples.x[v].row(static_cast<Eigen::Index>(idx[i]));
        }
        use = &subset;
      }
      try {
        const GradientMoments* gm;
        GradientMoments fresh;
        if (lc.reuse_gradient_moments && cached) {
          gm = &*cached;
        } else {
          DecompositionConfig step_dc = dc;
          step_dc.seed = mix_seed(dc.seed, 0x677261ULL + t);
          fresh = estimate_mean_features(*use, model, theta0, theta_t, step_dc);
          if (lc.reuse_gradient_moments) {
            cached = fresh;
            gm = &*cached;
          } else {
            gm = &fresh;
          }
        }
        const ViewLossModel at = model.with_theta(theta_t);
        g = at.mean_grad_base(*use) - gm->phi_hat;
        // current estimated risk via the quasi-linear identity
        log.estimated_risk = at.mean_base(*use) - theta_t.dot(gm->phi_hat);
      } catch (const std::runtime_error&) {
        // robust-gradient contract: a failed step must not poison the run;
        // reuse the previous gradient and record the skip
        log.skipped = true;
        g = have_grad ? prev_grad : Vec::Zero(d);
      }
    }
    prev_grad = g;
    have_grad = true;
    log.grad_norm = g.norm();
    z -= g;
    theta_avg += (theta_t - theta_avg) / static_cast<double>(t);
    result.log.push_back(log);
  }
  result.theta = theta_avg;
  return result;
}

}  // namespace unrisk
