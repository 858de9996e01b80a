#pragma once

#include "mapad/core/dataset.hpp"
#include "mapad/core/standardizer.hpp"
#include "mapad/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace mapad::glm {

/// Logistic sigmoid with the branch chosen so that exp never overflows;
/// for very negative z the result is exp(z)/(1+exp(z)), which stays
/// positive down to the denormal range.
template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
Scalar logit(Scalar p) {
  if (!(p > Scalar(0) && p < Scalar(1)))
    throw Error(ErrorCode::domain, "logit: argument must lie in (0, 1)");
  return std::log(p) - std::log1p(-p);
}

enum class Link { logistic };

struct GlmModel {
  Eigen::VectorXd theta;
  double intercept = 0.0;
  Link link = Link::logistic;
  double l2 = 0.0;
  std::optional<Standardizer> standardizer;
  std::vector<std::string> column_names;
  std::vector<ColumnKind> column_kinds;

  Index dim() const { return theta.size(); }
};

/// Probability of class 1.
template <typename Derived>
double glm_predict_proba(const GlmModel& model, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != model.dim())
    throw Error(ErrorCode::dimension, "glm_predict_proba: expected " + std::to_string(model.dim()) +
                                          " features, got " + std::to_string(x.size()));
  return sigmoid(model.theta.dot(x.template cast<double>()) + model.intercept);
}

struct FitOptions {
  int max_iters = 100;
  double grad_tol = 1e-8;
};

struct FitTrace {
  std::vector<double> objective;
  std::vector<double> grad_norm;
};

/// Ridge-penalised logistic regression. Minimises the per-record average
/// negative log-likelihood plus (l2/2)|theta|^2 (intercept unpenalised) by
/// Newton steps with backtracking. Labels must be 0/1.
GlmModel fit_logistic(const Dataset& data, double l2 = 1e-4, const FitOptions& options = {},
                      FitTrace* trace = nullptr);

/// Penalised objective and its gradient with respect to (theta, intercept).
double logistic_objective(const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const Eigen::Ref<const Eigen::VectorXi>& labels,
                          const Eigen::Ref<const Eigen::VectorXd>& theta, double intercept, double l2,
                          Eigen::VectorXd* gradient = nullptr);

}  // namespace mapad::glm
