#pragma once

#include "mapad/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace mapad {

/// Feature weights on the probability simplex.
class WeightedMetric {
 public:
  explicit WeightedMetric(Eigen::VectorXd weights) : weights_(std::move(weights)) {
    if (weights_.size() == 0) throw Error(ErrorCode::invalid_argument, "empty weight vector");
    if ((weights_.array() < 0.0).any() || !weights_.allFinite())
      throw Error(ErrorCode::invalid_argument, "weights must be finite and non-negative");
    if (std::abs(weights_.sum() - 1.0) > 1e-10)
      throw Error(ErrorCode::invalid_argument,
                  "weights must sum to 1 (got " + std::to_string(weights_.sum()) + ")");
  }

  static WeightedMetric uniform(Eigen::Index dim) {
    return WeightedMetric(Eigen::VectorXd::Constant(dim, 1.0 / static_cast<double>(dim)));
  }

  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::Index dim() const { return weights_.size(); }

 private:
  Eigen::VectorXd weights_;
};

/// sum_d w_d (x_d - y_d)^2 for raw weight vectors; no simplex check.
template <typename DerivedX, typename DerivedY, typename DerivedW>
typename DerivedX::Scalar weighted_sqdist(const Eigen::MatrixBase<DerivedX>& x,
                                          const Eigen::MatrixBase<DerivedY>& y,
                                          const Eigen::MatrixBase<DerivedW>& w) {
  if (x.size() != y.size() || x.size() != w.size())
    throw Error(ErrorCode::dimension, "weighted_sqdist: dimension mismatch (" +
                                          std::to_string(x.size()) + ", " +
                                          std::to_string(y.size()) + ", " +
                                          std::to_string(w.size()) + ")");
  return (w.array() * (x - y).array().square()).sum();
}

template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar weighted_sqdist(const Eigen::MatrixBase<DerivedX>& x,
                                          const Eigen::MatrixBase<DerivedY>& y,
                                          const WeightedMetric& w) {
  return weighted_sqdist(x, y, w.weights());
}

}  // namespace mapad
