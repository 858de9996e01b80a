#pragma once

#include "mapad/core/dataset.hpp"

#include <Eigen/Dense>

#include <span>
#include <utility>

namespace mapad {

/// Per-column affine z-scoring with population standard deviation.
/// Columns with `scaled[d] == false` (binary columns) pass through unchanged:
/// their mean is stored as 0 and their stddev as 1.
struct Standardizer {
  Eigen::VectorXd means;
  Eigen::VectorXd stddevs;
  std::vector<bool> scaled;

  Index dim() const { return means.size(); }

  /// Identity transform over `dim` columns.
  static Standardizer identity(Index dim);

  template <typename Derived>
  Eigen::MatrixXd transform(const Eigen::MatrixBase<Derived>& x) const {
    return ((x.colwise() - means).array().colwise() / stddevs.array()).matrix();
  }

  template <typename Derived>
  Eigen::MatrixXd inverse_transform(const Eigen::MatrixBase<Derived>& z) const {
    return ((z.array().colwise() * stddevs.array()).matrix().colwise() + means);
  }

  /// Deltas are scaled but not shifted.
  template <typename Derived>
  Eigen::VectorXd inverse_delta(const Eigen::MatrixBase<Derived>& dz) const {
    return dz.cwiseProduct(stddevs);
  }
};

/// Fits on the `fit_on` records and returns the transformed dataset.
/// Throws degenerate_column when a continuous column is constant on `fit_on`.
std::pair<Dataset, Standardizer> standardize(const Dataset& data, std::span<const Index> fit_on);

Dataset apply_standardizer(const Dataset& data, const Standardizer& st);

}  // namespace mapad
