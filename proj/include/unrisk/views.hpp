#pragma once

#include "unrisk/common.hpp"

#include <array>

namespace unrisk {

/// Label-free view of a multi-view sample set: one row per sample, one matrix
/// per view. This is the only sample type the estimation entry points accept,
/// so labeled data must be explicitly projected before estimation can see it.
struct ViewArrays {
  std::array<Mat, 3> x;

  std::size_t size() const { return static_cast<std::size_t>(x[0].rows()); }
  int dim(int v) const { return static_cast<int>(x[v].cols()); }

  Views sample(std::size_t i) const {
    return {x[0].row(static_cast<Eigen::Index>(i)).transpose(),
            x[1].row(static_cast<Eigen::Index>(i)).transpose(),
            x[2].row(static_cast<Eigen::Index>(i)).transpose()};
  }

  ViewArrays slice(std::size_t begin, std::size_t end) const {
    ViewArrays out;
    for (int v = 0; v < 3; ++v)
      out.x[v] = x[v].middleRows(static_cast<Eigen::Index>(begin),
                                 static_cast<Eigen::Index>(end - begin));
    return out;
  }
};

}  // namespace unrisk
