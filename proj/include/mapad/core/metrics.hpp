#pragma once

#include "mapad/core/dataset.hpp"

#include <Eigen/Dense>

namespace mapad {

/// Area under the ROC curve: probability that a random positive (label 1)
/// outscores a random negative (label 0), ties counted one half.
/// Computed from tie-averaged ranks, O(n log n).
double auc(const Eigen::Ref<const Eigen::VectorXd>& scores,
           const Eigen::Ref<const Eigen::VectorXi>& labels);

double accuracy(const Eigen::Ref<const Eigen::VectorXi>& predicted,
                const Eigen::Ref<const Eigen::VectorXi>& labels);

/// Mean one-vs-rest AUC over classes for an M x T probability matrix.
/// For M == 2 this is the AUC of the class-1 row.
double multiclass_auc(const Eigen::Ref<const Eigen::MatrixXd>& proba,
                      const Eigen::Ref<const Eigen::VectorXi>& labels);

}  // namespace mapad
