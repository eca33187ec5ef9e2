#pragma once

#include "unrisk/common.hpp"

#include <array>
#include <vector>

namespace unrisk {

/// A bijection on {0..k-1} with the matching objective it achieved.
struct Permutation {
  std::vector<int> sigma;  // sigma[j] = class index assigned to column j
  double value = 0.0;
};

/// Minimum-cost perfect assignment on a square cost matrix, O(k^3).
/// Returns the cost; row_of[j] = row assigned to column j.
double hungarian_min(const Mat& cost, std::vector<int>& row_of);

/// sigma maximizing sum_j X(sigma[j], j); ties resolved toward the
/// lexicographically smallest sigma. Maximization runs as Hungarian
/// minimization on (max(X) - X).
Permutation best_assignment(const Mat& X);

/// Resolves the class-permutation ambiguity for a recovered (M, pi): builds
/// X(i, j) = pi_i * sum_v M_v(j, i) over the top k rows of each M_v and
/// returns the maximizing assignment.
Permutation best_permutation(const std::array<Mat, 3>& M, const Vec& pi);

/// Best-minus-second-best objective over distinct permutations; exact
/// enumeration, supported for k <= 10 only.
double permutation_gap(const std::array<Mat, 3>& M, const Vec& pi);
double assignment_gap(const Mat& X);

}  // namespace unrisk
