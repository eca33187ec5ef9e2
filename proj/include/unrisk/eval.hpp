#pragma once

#include "unrisk/data.hpp"
#include "unrisk/learning.hpp"
#include "unrisk/models.hpp"
#include "unrisk/moments.hpp"

namespace unrisk {

/// Labeled comparators. These read labels by design and live apart from the
/// estimation entry points, which only accept the label-free projection.

/// Mean loss at the true labels.
double labeled_risk(const MultiViewDataset& data, const ViewLossModel& model);

struct LabeledPlugin {
  std::array<Mat, 3> M;
  Vec pi;
};

/// Empirical conditional means of the loss vectors given the true label, and
/// the empirical class frequencies.
LabeledPlugin labeled_moment_matrices(const MultiViewDataset& data, const ViewLossModel& model);

/// Same, over an arbitrary loss-vector source (extended features, HMM rows).
LabeledPlugin labeled_conditional_means(const TripleSource& source, const std::vector<int>& labels,
                                        int k);

/// phi-bar = sum_v mean phi_v(x_v, y) at the true labels.
Vec labeled_mean_features(const MultiViewDataset& data, const ViewLossModel& model);

/// Constrained maximum-likelihood fit of the logistic kind on labeled data;
/// reduces to the linear-surrogate solver at the labeled mean features.
LearnResult train_logistic_supervised(const MultiViewDataset& data, const ViewLossModel& model,
                                      double rho, double tol = 1e-8, int max_iter = 20000);

}  // namespace unrisk
