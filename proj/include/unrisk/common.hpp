#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace unrisk {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A single multi-view sample: one input vector per view.
using Views = std::array<Vec, 3>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Bad arguments or malformed inputs (dimension mismatches, invalid configs).
struct InputError : std::runtime_error {
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite values or numeric breakdown inside a computation.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A matrix that must have rank k numerically does not; carries the offending
/// singular value so callers can report how close the input was.
struct ConditioningError : std::runtime_error {
  double sigma;
  ConditioningError(const std::string& msg, double sigma_k)
      : std::runtime_error(msg + " (sigma_k = " + std::to_string(sigma_k) + ")"),
        sigma(sigma_k) {}
};

/// Every candidate was rejected by the median-distance amplification rule.
struct AmplificationError : std::runtime_error {
  explicit AmplificationError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Numerics
// ---------------------------------------------------------------------------

/// log(sum_i exp(v_i)), stable against overflow. Empty input is an error.
double log_sum_exp(const Eigen::Ref<const Vec>& v);

/// Moore-Penrose pseudo-inverse with singular values below tol_rel * sigma_1
/// treated as zero. Returns the k-th retained singular value through sigma_min
/// when requested. max_rank > 0 truncates to the top max_rank singular values
/// (for matrices whose population rank is known).
Mat pseudo_inverse(const Mat& a, double tol_rel = 1e-10, double* sigma_min = nullptr,
                   int max_rank = 0);

/// k-th largest singular value (1-based index k).
double kth_singular_value(const Mat& a, int k);

/// Clip negatives to zero and renormalize to sum 1. Throws NumericError if the
/// clipped mass is below min_mass (default 0.5), which signals that the input
/// was not close to a distribution.
Vec clip_to_simplex(const Vec& v, double min_mass = 0.5);

bool is_permutation(const std::vector<int>& sigma);
std::vector<int> identity_permutation(int k);
std::vector<int> invert_permutation(const std::vector<int>& sigma);

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

/// splitmix64 step; used to derive independent substreams from (seed, index)
/// so that parallel generation by sample index is order-free.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Dense third-order tensor (small dimensions only)
// ---------------------------------------------------------------------------

class Tensor3 {
 public:
  Tensor3() : n1_(0), n2_(0), n3_(0) {}
  Tensor3(int n1, int n2, int n3)
      : n1_(n1), n2_(n2), n3_(n3),
        data_(static_cast<std::size_t>(n1) * n2 * n3, 0.0) {}

  int dim(int mode) const { return mode == 0 ? n1_ : (mode == 1 ? n2_ : n3_); }
  bool cube() const { return n1_ == n2_ && n2_ == n3_; }

  double& operator()(int i, int j, int l) {
    return data_[(static_cast<std::size_t>(i) * n2_ + j) * n3_ + l];
  }
  double operator()(int i, int j, int l) const {
    return data_[(static_cast<std::size_t>(i) * n2_ + j) * n3_ + l];
  }

  const std::vector<double>& raw() const { return data_; }
  std::vector<double>& raw() { return data_; }

  /// T(I, u, v): vector with entries sum_{j,l} T_{ijl} u_j v_l.
  Vec contract23(const Vec& u, const Vec& v) const;

  /// T(u, u, u).
  double value(const Vec& u) const;

  /// sum_j lambda_j (A1 col_j) x (A2 col_j) x (A3 col_j) added in place.
  void add_rank_one(double lambda, const Vec& a, const Vec& b, const Vec& c);

  /// Average over all six index permutations; requires a cube tensor.
  Tensor3 symmetrized() const;

  /// Multilinear transform: result_{abc} = sum_{ijl} A1_{ai} A2_{bj} A3_{cl} T_{ijl}.
  Tensor3 multilinear(const Mat& a1, const Mat& a2, const Mat& a3) const;

  double frobenius_norm() const;
  double max_symmetry_violation() const;

  Tensor3& operator+=(const Tensor3& o);
  Tensor3& operator-=(const Tensor3& o);
  Tensor3& operator*=(double c);

 private:
  int n1_, n2_, n3_;
  std::vector<double> data_;
};

}  // namespace unrisk
