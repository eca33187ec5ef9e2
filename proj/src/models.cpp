#include "unrisk/models.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace unrisk {

std::string kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Logistic: return "logistic";
    case ModelKind::ModifiedHinge: return "modified-hinge";
    case ModelKind::AdditiveScorer: return "additive-scorer";
  }
  throw InputError("unknown model kind");
}

ModelKind kind_from_name(const std::string& name) {
  if (name == "logistic") return ModelKind::Logistic;
  if (name == "modified-hinge") return ModelKind::ModifiedHinge;
  if (name == "additive-scorer") return ModelKind::AdditiveScorer;
  throw InputError("unknown model kind: " + name);
}

namespace {

// Class-block feature matrix: row i has the view input in block i.
Mat block_features(const Vec& x, int k, int d, int offset) {
  const int p = static_cast<int>(x.size());
  Mat out = Mat::Zero(k, d);
  for (int i = 0; i < k; ++i) out.row(i).segment(offset + i * p, p) = x.transpose();
  return out;
}

}  // namespace

ViewLossModel ViewLossModel::logistic(int k, const std::array<int, 3>& view_dims, Vec theta) {
  if (k < 2) throw InputError("logistic: k must be >= 2");
  ViewLossModel m;
  m.kind_ = ModelKind::Logistic;
  m.k_ = k;
  int offset = 0;
  for (int v = 0; v < 3; ++v) {
    if (view_dims[v] < 0) throw InputError("logistic: negative view dimension");
    m.views_[v].input_dim = view_dims[v];
    m.views_[v].block_offset = offset;
    offset += k * view_dims[v];
  }
  m.d_ = offset;
  if (theta.size() != m.d_)
    throw InputError("logistic: theta has length " + std::to_string(theta.size()) +
                     ", expected " + std::to_string(m.d_));
  m.theta_ = std::move(theta);
  m.serializable_ = true;
  return m;
}

ViewLossModel ViewLossModel::modified_hinge(int k, const std::array<int, 3>& view_dims, Vec theta) {
  ViewLossModel m = logistic(k, view_dims, std::move(theta));
  m.kind_ = ModelKind::ModifiedHinge;
  return m;
}

ViewLossModel ViewLossModel::additive_scorer(int k, std::array<std::function<Vec(const Vec&)>, 3> scorers,
                                             int d, Vec theta,
                                             std::array<std::function<Mat(const Vec&)>, 3> grads) {
  if (k < 2) throw InputError("additive_scorer: k must be >= 2");
  ViewLossModel m;
  m.kind_ = ModelKind::AdditiveScorer;
  m.k_ = k;
  m.d_ = d;
  m.theta_ = theta.size() ? std::move(theta) : Vec::Zero(d);
  for (int v = 0; v < 3; ++v) {
    if (!scorers[v]) throw InputError("additive_scorer: missing scorer for view " + std::to_string(v));
    m.views_[v].input_dim = -1;  // unchecked; scorer defines its own domain
    m.views_[v].scores = std::move(scorers[v]);
    m.views_[v].score_grad = std::move(grads[v]);
  }
  return m;
}

ViewLossModel ViewLossModel::with_features(ModelKind kind, int k, int d,
                                           std::array<std::function<Mat(const Vec&)>, 3> feature_maps,
                                           std::array<int, 3> input_dims, Vec theta) {
  if (k < 2) throw InputError("with_features: k must be >= 2");
  if (theta.size() != d) throw InputError("with_features: theta/d mismatch");
  ViewLossModel m;
  m.kind_ = kind;
  m.k_ = k;
  m.d_ = d;
  m.theta_ = std::move(theta);
  for (int v = 0; v < 3; ++v) {
    m.views_[v].input_dim = input_dims[v];
    m.views_[v].custom_features = std::move(feature_maps[v]);
  }
  return m;
}

ViewLossModel ViewLossModel::with_theta(Vec theta) const {
  if (theta.size() != d_) throw InputError("with_theta: wrong parameter length");
  ViewLossModel m = *this;
  m.theta_ = std::move(theta);
  return m;
}

void ViewLossModel::check_view(const Vec& x_v, int v) const {
  if (v < 0 || v > 2) throw InputError("view index must be in {0,1,2}");
  if (views_[v].input_dim >= 0 && x_v.size() != views_[v].input_dim)
    throw InputError("view " + std::to_string(v) + " input has dimension " +
                     std::to_string(x_v.size()) + ", expected " +
                     std::to_string(views_[v].input_dim));
  if (!x_v.allFinite()) throw NumericError("non-finite view input");
}

Mat ViewLossModel::features(const Vec& x_v, int v) const {
  check_view(x_v, v);
  const ViewSpec& spec = views_[v];
  if (spec.custom_features) {
    Mat f = spec.custom_features(x_v);
    if (f.rows() != k_ || f.cols() != d_) throw InputError("custom feature map returned wrong shape");
    return f;
  }
  if (spec.scores) throw InputError("additive-scorer model has no feature matrix");
  return block_features(x_v, k_, d_, spec.block_offset);
}

Vec ViewLossModel::scores_for(const Vec& x_v, int v) const {
  check_view(x_v, v);
  const ViewSpec& spec = views_[v];
  Vec s;
  if (spec.scores) {
    s = spec.scores(x_v);
    if (s.size() != k_) throw InputError("scorer returned wrong length");
  } else if (spec.custom_features) {
    s = spec.custom_features(x_v) * theta_;
  } else {
    // theta' phi_v(x, i) = theta-block(i) . x for the class-block layout
    const int p = spec.input_dim;
    s = Vec::Zero(k_);
    for (int i = 0; i < k_; ++i)
      s[i] = theta_.segment(spec.block_offset + i * p, p).dot(x_v);
  }
  if (!s.allFinite()) throw NumericError("non-finite view scores");
  return s;
}

Vec ViewLossModel::loss_vector(const Vec& x_v, int v) const {
  Vec s = scores_for(x_v, v);
  if (kind_ == ModelKind::ModifiedHinge) {
    // f_v(x, y) = -(1 + max_{j != y} s_j - s_y)_+
    Vec h(k_);
    for (int y = 0; y < k_; ++y) {
      double best_other = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < k_; ++j)
        if (j != y) best_other = std::max(best_other, s[j]);
      h[y] = -std::max(0.0, 1.0 + best_other - s[y]);
    }
    return h;
  }
  return s;
}

double ViewLossModel::base_term(const Views& x) const {
  if (kind_ == ModelKind::ModifiedHinge) return 0.0;
  Vec total = Vec::Zero(k_);
  for (int v = 0; v < 3; ++v) total += scores_for(x[v], v);
  return log_sum_exp(total);
}

Mat ViewLossModel::grad_loss_vector(const Vec& x_v, int v) const {
  if (kind_ == ModelKind::Logistic) return features(x_v, v);
  if (kind_ == ModelKind::AdditiveScorer) {
    const ViewSpec& spec = views_[v];
    if (spec.score_grad) {
      Mat g = spec.score_grad(x_v);
      if (g.rows() != k_ || g.cols() != d_) throw InputError("score gradient has wrong shape");
      return g;
    }
    if (spec.custom_features) return features(x_v, v);
    return Mat::Zero(k_, d_);  // fixed score tables carry no parameters
  }
  // Modified hinge: flat-side subgradient, zero at the kink.
  Mat phi = features(x_v, v);
  Vec s = phi * theta_;
  Mat g = Mat::Zero(k_, d_);
  for (int y = 0; y < k_; ++y) {
    int arg = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < k_; ++j)
      if (j != y && s[j] > best) { best = s[j]; arg = j; }
    const double margin = 1.0 + best - s[y];
    if (margin > 0.0) g.row(y) = phi.row(y) - phi.row(arg);
  }
  return g;
}

Vec ViewLossModel::grad_base(const Views& x) const {
  if (kind_ == ModelKind::ModifiedHinge) return Vec::Zero(d_);
  Vec total = Vec::Zero(k_);
  std::array<Vec, 3> s;
  for (int v = 0; v < 3; ++v) {
    s[v] = scores_for(x[v], v);
    total += s[v];
  }
  const double lse = log_sum_exp(total);
  Vec p = (total.array() - lse).exp();
  Vec g = Vec::Zero(d_);
  for (int v = 0; v < 3; ++v) g += grad_loss_vector(x[v], v).transpose() * p;
  return g;
}

double ViewLossModel::loss(const Views& x, int y) const {
  if (y < 0 || y >= k_) throw InputError("label out of range");
  double f_sum = 0.0;
  for (int v = 0; v < 3; ++v) f_sum += loss_vector(x[v], v)[y];
  return base_term(x) - f_sum;
}

Vec ViewLossModel::class_probabilities(const Views& x) const {
  Vec total = Vec::Zero(k_);
  for (int v = 0; v < 3; ++v) total += loss_vector(x[v], v);
  const double lse = log_sum_exp(total);
  return (total.array() - lse).exp();
}

Mat ViewLossModel::total_scores(const ViewArrays& samples) const {
  const Eigen::Index m = static_cast<Eigen::Index>(samples.size());
  Mat total = Mat::Zero(m, k_);
  for (int v = 0; v < 3; ++v) {
    const ViewSpec& spec = views_[v];
    if (!spec.scores && !spec.custom_features && spec.input_dim > 0) {
      // class-block layout: scores = X_v * W_v' with W_v the k x p_v slice
      const int p = spec.input_dim;
      Mat w(k_, p);
      for (int i = 0; i < k_; ++i)
        w.row(i) = theta_.segment(spec.block_offset + i * p, p).transpose();
      total.noalias() += samples.x[v] * w.transpose();
    } else if (spec.input_dim != 0) {
      for (Eigen::Index i = 0; i < m; ++i)
        total.row(i) += scores_for(samples.x[v].row(i).transpose(), v).transpose();
    }
  }
  if (!total.allFinite()) throw NumericError("non-finite scores in batch evaluation");
  return total;
}

double ViewLossModel::mean_base(const ViewArrays& samples) const {
  if (samples.size() == 0) throw InputError("empty sample set");
  if (kind_ == ModelKind::ModifiedHinge) return 0.0;
  const Mat total = total_scores(samples);
  long double acc = 0.0L;
  for (Eigen::Index i = 0; i < total.rows(); ++i)
    acc += log_sum_exp(total.row(i).transpose());
  return static_cast<double>(acc / total.rows());
}

Vec ViewLossModel::mean_grad_base(const ViewArrays& samples) const {
  const Eigen::Index m = static_cast<Eigen::Index>(samples.size());
  if (m == 0) throw InputError("empty sample set");
  if (kind_ == ModelKind::ModifiedHinge) return Vec::Zero(d_);
  const Mat total = total_scores(samples);
  Mat probs(m, k_);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double lse = log_sum_exp(total.row(i).transpose());
    probs.row(i) = (total.row(i).array() - lse).exp();
  }
  Vec g = Vec::Zero(d_);
  bool all_fast = kind_ == ModelKind::Logistic;
  for (int v = 0; v < 3 && all_fast; ++v)
    all_fast = !views_[v].custom_features && !views_[v].scores;
  if (all_fast) {
    // grad block for (view v, class i) is mean_i p_i(x) * x_v
    for (int v = 0; v < 3; ++v) {
      const ViewSpec& spec = views_[v];
      const int p = spec.input_dim;
      if (p == 0) continue;
      const Mat block = probs.transpose() * samples.x[v] / static_cast<double>(m);  // k x p
      for (int i = 0; i < k_; ++i)
        g.segment(spec.block_offset + i * p, p) = block.row(i).transpose();
    }
    return g;
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const Views x = samples.sample(static_cast<std::size_t>(i));
    for (int v = 0; v < 3; ++v)
      g += grad_loss_vector(x[v], v).transpose() * probs.row(i).transpose();
  }
  return g / static_cast<double>(m);
}

std::pair<double, double> ViewLossModel::scale_sums(const ViewArrays& samples) const {
  const std::size_t m = samples.size();
  bool fast = kind_ == ModelKind::Logistic;
  for (int v = 0; v < 3 && fast; ++v)
    fast = !views_[v].custom_features && !views_[v].scores;
  long double tau2 = 0.0L, b2 = 0.0L;
  if (fast) {
    // per-view scores via GEMM; ||phi_v(x, i)||^2 = ||x_v||^2 per class
    for (int v = 0; v < 3; ++v) {
      const ViewSpec& spec = views_[v];
      const int p = spec.input_dim;
      if (p == 0) continue;
      Mat w(k_, p);
      for (int i = 0; i < k_; ++i)
        w.row(i) = theta_.segment(spec.block_offset + i * p, p).transpose();
      tau2 += static_cast<long double>((samples.x[v] * w.transpose()).squaredNorm());
      b2 += static_cast<long double>(k_) * static_cast<long double>(samples.x[v].squaredNorm());
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      const Views x = samples.sample(i);
      for (int v = 0; v < 3; ++v) {
        tau2 += static_cast<long double>(loss_vector(x[v], v).squaredNorm());
        if (d_ > 0) b2 += static_cast<long double>(grad_loss_vector(x[v], v).squaredNorm());
      }
    }
  }
  return {static_cast<double>(tau2), static_cast<double>(b2)};
}

nlohmann::json ViewLossModel::to_json() const {
  if (!serializable_)
    throw InputError("only class-block feature models serialize to JSON");
  nlohmann::json j;
  j["kind"] = kind_name(kind_);
  j["k"] = k_;
  j["d"] = d_;
  j["view_dims"] = {views_[0].input_dim, views_[1].input_dim, views_[2].input_dim};
  j["theta"] = std::vector<double>(theta_.data(), theta_.data() + theta_.size());
  return j;
}

ViewLossModel ViewLossModel::from_json(const nlohmann::json& j) {
  const ModelKind kind = kind_from_name(j.at("kind").get<std::string>());
  const int k = j.at("k").get<int>();
  const auto dims_vec = j.at("view_dims").get<std::vector<int>>();
  if (dims_vec.size() != 3) throw InputError("model JSON: view_dims must have 3 entries");
  const std::array<int, 3> dims = {dims_vec[0], dims_vec[1], dims_vec[2]};
  const auto theta_vec = j.at("theta").get<std::vector<double>>();
  Vec theta = Eigen::Map<const Vec>(theta_vec.data(), static_cast<Eigen::Index>(theta_vec.size()));
  ViewLossModel m = (kind == ModelKind::ModifiedHinge) ? modified_hinge(k, dims, theta)
                                                       : logistic(k, dims, theta);
  if (kind == ModelKind::AdditiveScorer)
    throw InputError("additive-scorer models are not JSON-serializable");
  if (j.contains("d") && j.at("d").get<int>() != m.d())
    throw InputError("model JSON: d inconsistent with view_dims");
  return m;
}

}  // namespace unrisk
