#include "mapad/glm/logistic.hpp"

#include <cmath>

namespace mapad::glm {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

double logistic_objective(const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const Eigen::Ref<const Eigen::VectorXi>& labels,
                          const Eigen::Ref<const Eigen::VectorXd>& theta, double intercept, double l2,
                          Eigen::VectorXd* gradient) {
  const Index D = X.rows();
  const Index T = X.cols();
  const Eigen::VectorXd z = (X.transpose() * theta).array() + intercept;
  double value = 0.0;
  Eigen::VectorXd residual(T);
  for (Index t = 0; t < T; ++t) {
    const double y = labels(t);
    value += softplus(z(t)) - y * z(t);
    residual(t) = sigmoid(z(t)) - y;
  }
  value = value / static_cast<double>(T) + 0.5 * l2 * theta.squaredNorm();
  if (gradient) {
    gradient->resize(D + 1);
    gradient->head(D) = X * residual / static_cast<double>(T) + l2 * theta;
    (*gradient)(D) = residual.mean();
  }
  return value;
}

GlmModel fit_logistic(const Dataset& data, double l2, const FitOptions& options, FitTrace* trace) {
  if (l2 < 0.0) throw Error(ErrorCode::invalid_argument, "fit_logistic: l2 must be non-negative");
  if ((data.labels.array() < 0).any() || (data.labels.array() > 1).any())
    throw Error(ErrorCode::invalid_argument, "fit_logistic: labels must be 0/1");
  const Index pos = data.labels.sum();
  if (pos == 0 || pos == data.size())
    throw Error(ErrorCode::invalid_argument, "fit_logistic: both classes must be present");

  const Index D = data.dim();
  const Index T = data.size();
  const auto& X = data.features;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(D + 1);  // theta, then intercept

  Eigen::VectorXd grad;
  double value = logistic_objective(X, data.labels, beta.head(D), beta(D), l2, &grad);
  bool converged = false;
  for (int it = 0; it < options.max_iters; ++it) {
    if (trace) {
      trace->objective.push_back(value);
      trace->grad_norm.push_back(grad.norm());
    }
    if (grad.norm() <= options.grad_tol) {
      converged = true;
      break;
    }
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(D + 1, D + 1);
    for (Index t = 0; t < T; ++t) {
      const double p = sigmoid(beta.head(D).dot(X.col(t)) + beta(D));
      Eigen::VectorXd a(D + 1);
      a.head(D) = X.col(t);
      a(D) = 1.0;
      H.selfadjointView<Eigen::Lower>().rankUpdate(a, p * (1.0 - p));
    }
    H = H.selfadjointView<Eigen::Lower>();
    H /= static_cast<double>(T);
    H.diagonal().head(D).array() += l2;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    Eigen::VectorXd step = ldlt.solve(-grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite() || grad.dot(step) >= 0.0) step = -grad;

    double t_step = 1.0;
    Eigen::VectorXd next_grad;
    double next_value = value;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::VectorXd candidate = beta + t_step * step;
      next_value = logistic_objective(X, data.labels, candidate.head(D), candidate(D), l2, &next_grad);
      const bool armijo = next_value <= value + 1e-4 * t_step * grad.dot(step);
      const bool flat = next_value <= value + 1e-15 * std::abs(value) && next_grad.norm() < grad.norm();
      if (armijo || flat) {
        beta = candidate;
        accepted = true;
        break;
      }
      t_step *= 0.5;
    }
    if (!accepted) break;
    value = next_value;
    grad = next_grad;
    if (l2 == 0.0 && beta.head(D).norm() > 1e8) break;
  }
  converged = converged || grad.norm() <= options.grad_tol;
  if (converged && l2 == 0.0) {
    // Scaling a strictly separating (theta, b) lowers the unpenalised loss,
    // so a finite minimiser can never separate the records.
    const Eigen::VectorXd z = (X.transpose() * beta.head(D)).array() + beta(D);
    bool separates = true;
    for (Index t = 0; t < T && separates; ++t)
      separates = data.labels(t) == 1 ? z(t) > 0.0 : z(t) < 0.0;
    converged = !separates;
  }
  if (!converged) {
    std::string msg = "fit_logistic: Newton iterations did not converge (gradient norm " +
                      std::to_string(grad.norm()) + ")";
    if (l2 == 0.0) msg += "; the classes may be perfectly separated, use l2 > 0";
    throw Error(ErrorCode::non_convergence, msg);
  }

  GlmModel model;
  model.theta = beta.head(D);
  model.intercept = beta(D);
  model.l2 = l2;
  model.column_names = data.column_names;
  model.column_kinds = data.column_kinds;
  return model;
}

}  // namespace mapad::glm
