#include "unrisk/common.hpp"

#include <algorithm>
#include <cmath>

namespace unrisk {

double log_sum_exp(const Eigen::Ref<const Vec>& v) {
  if (v.size() == 0) throw InputError("log_sum_exp: empty input");
  const double hi = v.maxCoeff();
  if (!std::isfinite(hi)) {
    if (hi == -std::numeric_limits<double>::infinity()) return hi;
    throw NumericError("log_sum_exp: non-finite input");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::exp(v[i] - hi);
  return hi + std::log(acc);
}

Mat pseudo_inverse(const Mat& a, double tol_rel, double* sigma_min, int max_rank) {
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double cutoff = s.size() ? tol_rel * s[0] : 0.0;
  Vec inv = Vec::Zero(s.size());
  double smallest_kept = 0.0;
  const Eigen::Index keep =
      max_rank > 0 ? std::min<Eigen::Index>(max_rank, s.size()) : s.size();
  for (Eigen::Index i = 0; i < keep; ++i) {
    if (s[i] > cutoff && s[i] > 0.0) {
      inv[i] = 1.0 / s[i];
      smallest_kept = s[i];
    }
  }
  if (sigma_min) *sigma_min = smallest_kept;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double kth_singular_value(const Mat& a, int k) {
  Eigen::BDCSVD<Mat> svd(a);
  const Vec& s = svd.singularValues();
  if (k < 1 || k > s.size()) throw InputError("kth_singular_value: k out of range");
  return s[k - 1];
}

Vec clip_to_simplex(const Vec& v, double min_mass) {
  Vec out = v.cwiseMax(0.0);
  const double mass = out.sum();
  if (!(mass >= min_mass)) {
    throw NumericError("simplex projection: clipped mass " + std::to_string(mass) +
                       " below " + std::to_string(min_mass));
  }
  return out / mass;
}

bool is_permutation(const std::vector<int>& sigma) {
  const int k = static_cast<int>(sigma.size());
  std::vector<bool> seen(k, false);
  for (int s : sigma) {
    if (s < 0 || s >= k || seen[s]) return false;
    seen[s] = true;
  }
  return true;
}

std::vector<int> identity_permutation(int k) {
  std::vector<int> sigma(k);
  for (int i = 0; i < k; ++i) sigma[i] = i;
  return sigma;
}

std::vector<int> invert_permutation(const std::vector<int>& sigma) {
  std::vector<int> inv(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) inv[sigma[i]] = static_cast<int>(i);
  return inv;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Vec Tensor3::contract23(const Vec& u, const Vec& v) const {
  Vec out = Vec::Zero(n1_);
  for (int i = 0; i < n1_; ++i) {
    double acc = 0.0;
    const double* slab = data_.data() + static_cast<std::size_t>(i) * n2_ * n3_;
    for (int j = 0; j < n2_; ++j) {
      const double uj = u[j];
      if (uj == 0.0) continue;
      const double* row = slab + static_cast<std::size_t>(j) * n3_;
      double inner = 0.0;
      for (int l = 0; l < n3_; ++l) inner += row[l] * v[l];
      acc += uj * inner;
    }
    out[i] = acc;
  }
  return out;
}

double Tensor3::value(const Vec& u) const { return u.dot(contract23(u, u)); }

void Tensor3::add_rank_one(double lambda, const Vec& a, const Vec& b, const Vec& c) {
  for (int i = 0; i < n1_; ++i) {
    const double la = lambda * a[i];
    if (la == 0.0) continue;
    for (int j = 0; j < n2_; ++j) {
      const double lab = la * b[j];
      double* row = data_.data() + (static_cast<std::size_t>(i) * n2_ + j) * n3_;
      for (int l = 0; l < n3_; ++l) row[l] += lab * c[l];
    }
  }
}

Tensor3 Tensor3::symmetrized() const {
  if (!cube()) throw InputError("symmetrized: tensor must be cubic");
  Tensor3 out(n1_, n1_, n1_);
  for (int i = 0; i < n1_; ++i)
    for (int j = 0; j < n1_; ++j)
      for (int l = 0; l < n1_; ++l) {
        out(i, j, l) = ((*this)(i, j, l) + (*this)(i, l, j) + (*this)(j, i, l) +
                        (*this)(j, l, i) + (*this)(l, i, j) + (*this)(l, j, i)) /
                       6.0;
      }
  return out;
}

Tensor3 Tensor3::multilinear(const Mat& a1, const Mat& a2, const Mat& a3) const {
  if (a1.cols() != n1_ || a2.cols() != n2_ || a3.cols() != n3_)
    throw InputError("multilinear: dimension mismatch");
  const int m1 = static_cast<int>(a1.rows());
  const int m2 = static_cast<int>(a2.rows());
  const int m3 = static_cast<int>(a3.rows());
  // mode-3 first: t1_{i j c} = sum_l T_{ijl} A3_{cl}
  std::vector<double> t1(static_cast<std::size_t>(n1_) * n2_ * m3, 0.0);
  for (int i = 0; i < n1_; ++i)
    for (int j = 0; j < n2_; ++j) {
      const double* row = data_.data() + (static_cast<std::size_t>(i) * n2_ + j) * n3_;
      double* out = t1.data() + (static_cast<std::size_t>(i) * n2_ + j) * m3;
      for (int c = 0; c < m3; ++c) {
        double acc = 0.0;
        for (int l = 0; l < n3_; ++l) acc += a3(c, l) * row[l];
        out[c] = acc;
      }
    }
  // mode-2: t2_{i b c} = sum_j t1_{ijc} A2_{bj}
  std::vector<double> t2(static_cast<std::size_t>(n1_) * m2 * m3, 0.0);
  for (int i = 0; i < n1_; ++i)
    for (int b = 0; b < m2; ++b)
      for (int c = 0; c < m3; ++c) {
        double acc = 0.0;
        for (int j = 0; j < n2_; ++j)
          acc += a2(b, j) * t1[(static_cast<std::size_t>(i) * n2_ + j) * m3 + c];
        t2[(static_cast<std::size_t>(i) * m2 + b) * m3 + c] = acc;
      }
  // mode-1: out_{a b c} = sum_i t2_{ibc} A1_{ai}
  Tensor3 out(m1, m2, m3);
  for (int a = 0; a < m1; ++a)
    for (int b = 0; b < m2; ++b)
      for (int c = 0; c < m3; ++c) {
        double acc = 0.0;
        for (int i = 0; i < n1_; ++i)
          acc += a1(a, i) * t2[(static_cast<std::size_t>(i) * m2 + b) * m3 + c];
        out(a, b, c) = acc;
      }
  return out;
}

double Tensor3::frobenius_norm() const {
  double acc = 0.0;
  for (double x : data_) acc += x * x;
  return std::sqrt(acc);
}

double Tensor3::max_symmetry_violation() const {
  if (!cube()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (int i = 0; i < n1_; ++i)
    for (int j = 0; j < n1_; ++j)
      for (int l = 0; l < n1_; ++l) {
        const double t = (*this)(i, j, l);
        worst = std::max(worst, std::abs(t - (*this)(i, l, j)));
        worst = std::max(worst, std::abs(t - (*this)(j, i, l)));
      }
  return worst;
}

Tensor3& Tensor3::operator+=(const Tensor3& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Tensor3& Tensor3::operator*=(double c) {
  for (double& x : data_) x *= c;
  return *this;
}

}  // namespace unrisk
