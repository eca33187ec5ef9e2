#include "unrisk/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace unrisk {

// Potentials form of the Hungarian algorithm, O(k^3). Rows are inserted one
// at a time and matched along shortest augmenting paths in the reduced costs.
double hungarian_min(const Mat& cost, std::vector<int>& row_of) {
  const int n = static_cast<int>(cost.rows());
  if (n == 0 || cost.cols() != n) throw InputError("hungarian: square non-empty matrix required");
  if (!cost.allFinite()) throw NumericError("hungarian: non-finite entries");
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // 1-indexed; p[j] = row currently assigned to column j, column 0 is virtual.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  row_of.assign(n, -1);
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    row_of[j - 1] = p[j] - 1;
    total += cost(p[j] - 1, j - 1);
  }
  return total;
}

namespace {

double max_value_assignment(const Mat& X, std::vector<int>& row_of) {
  const double shift = X.maxCoeff();
  Mat cost = (shift - X.array()).matrix();
  hungarian_min(cost, row_of);
  double total = 0.0;
  for (int j = 0; j < static_cast<int>(row_of.size()); ++j) total += X(row_of[j], j);
  return total;
}

// Best achievable value over assignments of the still-free rows to columns
// j >= first_free_col.
double best_completion(const Mat& X, const std::vector<bool>& row_used, int first_free_col) {
  const int n = static_cast<int>(X.rows());
  std::vector<int> rows;
  for (int i = 0; i < n; ++i)
    if (!row_used[i]) rows.push_back(i);
  const int r = static_cast<int>(rows.size());
  if (r == 0) return 0.0;
  Mat sub(r, r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) sub(a, b) = X(rows[a], first_free_col + b);
  std::vector<int> dummy;
  return max_value_assignment(sub, dummy);
}

}  // namespace

Permutation best_assignment(const Mat& X) {
  const int n = static_cast<int>(X.rows());
  if (n == 0 || X.cols() != n) throw InputError("best_assignment: square non-empty matrix required");
  if (!X.allFinite()) throw NumericError("best_assignment: non-finite entries");

  std::vector<int> row_of;
  const double best = max_value_assignment(X, row_of);
  const double tol = 1e-9 * (1.0 + std::abs(best));

  // Lexicographic tie-break: fix sigma[j] to the smallest row that still
  // admits an optimal completion of the remaining columns.
  std::vector<bool> used(n, false);
  Permutation out;
  out.sigma.assign(n, -1);
  double fixed = 0.0;
  for (int j = 0; j < n; ++j) {
    bool placed = false;
    for (int i = 0; i < n && !placed; ++i) {
      if (used[i]) continue;
      used[i] = true;
      const double completion = (j + 1 < n) ? best_completion(X, used, j + 1) : 0.0;
      if (fixed + X(i, j) + completion >= best - tol) {
        out.sigma[j] = i;
        fixed += X(i, j);
        placed = true;
      } else {
        used[i] = false;
      }
    }
    if (!placed) throw NumericError("best_assignment: refinement lost the optimum");
  }
  out.value = fixed;
  return out;
}

namespace {

Mat matching_matrix(const std::array<Mat, 3>& M, const Vec& pi) {
  const int k = static_cast<int>(pi.size());
  for (const Mat& mv : M)
    if (mv.rows() < k || mv.cols() != k)
      throw InputError("best_permutation: each M_v needs >= k rows and exactly k columns");
  Mat X(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      double s = 0.0;
      for (int v = 0; v < 3; ++v) s += M[v](j, i);
      X(i, j) = pi[i] * s;
    }
  return X;
}

}  // namespace

Permutation best_permutation(const std::array<Mat, 3>& M, const Vec& pi) {
  return best_assignment(matching_matrix(M, pi));
}

double assignment_gap(const Mat& X) {
  const int k = static_cast<int>(X.rows());
  if (k > 10) throw InputError("gap: exact enumeration supported for k <= 10 only");
  if (!X.allFinite()) throw NumericError("gap: non-finite entries");
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -std::numeric_limits<double>::infinity();
  double second = -std::numeric_limits<double>::infinity();
  do {
    double val = 0.0;
    for (int j = 0; j < k; ++j) val += X(perm[j], j);
    if (val > best) {
      second = best;
      best = val;
    } else if (val > second) {
      second = val;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (!std::isfinite(second)) throw InputError("gap: k must be >= 2");
  return best - second;
}

double permutation_gap(const std::array<Mat, 3>& M, const Vec& pi) {
  return assignment_gap(matching_matrix(M, pi));
}

}  // namespace unrisk
