#pragma once

#include "mapad/error.hpp"
#include "mapad/map/lp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace mapad::map {

enum class QpStatus { optimal, infeasible, numeric_failure };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::numeric_failure: return "numeric_failure";
  }
  return "unknown";
}

/// Result of  min |x - x_a|^2  s.t.  A x <= b.
///
/// Certificates refer to the original (unjittered) problem:
///   stationarity  |(x - x_a) + A^T mu / 2|_inf
///   primal        max_i (A_i x - b_i)_+
///   dual          max_i (-mu_i)_+
///   complementary max_i |mu_i (b_i - A_i x)|
/// `kkt_residual` is the larger of stationarity and dual violation.
template <typename Scalar>
struct QpResultT {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  QpStatus status = QpStatus::numeric_failure;
  Vector x_opt;
  Scalar objective = std::numeric_limits<Scalar>::infinity();
  std::vector<Eigen::Index> active_set;
  Vector multipliers;
  Scalar kkt_residual = std::numeric_limits<Scalar>::infinity();
  Scalar stationarity = std::numeric_limits<Scalar>::infinity();
  Scalar primal_violation = std::numeric_limits<Scalar>::infinity();
  Scalar dual_violation = std::numeric_limits<Scalar>::infinity();
  Scalar complementarity = std::numeric_limits<Scalar>::infinity();
  /// Phase-one optimum (negative: strictly feasible interior exists).
  Scalar lp_max_violation = 0;
  Vector farkas;
  int iterations = 0;
  int restarts = 0;
  std::string diagnostics;

  bool certified(Scalar kkt_tol = 1e-7, Scalar feas_tol = 1e-8, Scalar comp_tol = 1e-8) const {
    return status == QpStatus::optimal && kkt_residual <= kkt_tol && primal_violation <= feas_tol &&
           complementarity <= comp_tol;
  }
};

using QpResult = QpResultT<double>;

struct QpOptions {
  double feasibility_tol = 1e-9;
  double jitter = 1e-10;
  int max_restarts = 1;
  std::uint64_t jitter_seed = 0x5eed;
};

namespace detail {

/// Goldfarb-Idnani dual active-set method specialised to the identity
/// Hessian: min 1/2 |x - x_a|^2 s.t. n_j^T x >= c_j with n_j = -A_j, c_j = -b_j.
/// Starts at the unconstrained minimiser and adds violated constraints one at
/// a time, keeping every iterate dual feasible.
template <typename Scalar>
struct DualActiveSet {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Index = Eigen::Index;

  enum class Outcome { optimal, infeasible, stalled };

  const Matrix& A;
  const Vector& b;
  Vector x;
  std::vector<Index> active;
  std::vector<Scalar> u;  // multipliers of `active` for the 1/2-scaled objective
  int iterations = 0;

  DualActiveSet(const Matrix& A_, const Vector& b_, const Vector& x_a) : A(A_), b(b_), x(x_a) {}

  Scalar slack(Index j) const { return b(j) - A.row(j).dot(x); }

  Outcome run(Scalar tol, int max_iters) {
    const Index m = A.rows();
    Vector row_norm(m);
    for (Index j = 0; j < m; ++j) row_norm(j) = std::max(A.row(j).norm(), std::numeric_limits<Scalar>::min());
    const Scalar eps = Scalar(1e3) * std::numeric_limits<Scalar>::epsilon();

    while (true) {
      // Step 1: most violated constraint, measured as a distance.
      Index p = -1;
      Scalar worst = -tol;
      for (Index j = 0; j < m; ++j) {
        if (std::find(active.begin(), active.end(), j) != active.end()) continue;
        const Scalar s = slack(j) / row_norm(j);
        if (s < worst) {
          worst = s;
          p = j;
        }
      }
      if (p < 0) return Outcome::optimal;

      Scalar u_p = 0;
      const Vector n_p = -A.row(p).transpose();
      while (true) {
        if (++iterations > max_iters) return Outcome::stalled;
        const Index q = static_cast<Index>(active.size());
        Vector r = Vector::Zero(q);
        Vector z = n_p;
        if (q > 0) {
          Matrix N(A.cols(), q);
          for (Index i = 0; i < q; ++i) N.col(i) = -A.row(active[static_cast<std::size_t>(i)]).transpose();
          r = N.colPivHouseholderQr().solve(n_p);
          z = n_p - N * r;
        }
        const bool primal_step = z.norm() > eps * n_p.norm();

        Scalar t1 = std::numeric_limits<Scalar>::infinity();
        Index drop = -1;
        for (Index i = 0; i < q; ++i) {
          if (r(i) > eps) {
            const Scalar ratio = u[static_cast<std::size_t>(i)] / r(i);
            if (ratio < t1) {
              t1 = ratio;
              drop = i;
            }
          }
        }
        const Scalar s_p = slack(p);  // n_p^T x - c_p, negative while violated
        const Scalar t2 = primal_step ? -s_p / z.dot(n_p) : std::numeric_limits<Scalar>::infinity();

        if (!primal_step && drop < 0) return Outcome::infeasible;
        const Scalar t = std::min(t1, t2);
        if (primal_step) x += t * z;
        for (Index i = 0; i < q; ++i) u[static_cast<std::size_t>(i)] -= t * r(i);
        u_p += t;

        if (primal_step && t2 <= t1) {
          active.push_back(p);
          u.push_back(u_p);
          break;
        }
        active.erase(active.begin() + drop);
        u.erase(u.begin() + drop);
      }
    }
  }
};

template <typename Scalar>
void certify(QpResultT<Scalar>& res, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
             const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x_a) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Vector& x = res.x_opt;
  const Vector& mu = res.multipliers;
  const Vector slack = b - A * x;
  res.stationarity = A.rows() > 0 ? ((x - x_a) + A.transpose() * mu / Scalar(2)).template lpNorm<Eigen::Infinity>()
                                  : (x - x_a).template lpNorm<Eigen::Infinity>();
  res.primal_violation = A.rows() > 0 ? std::max(Scalar(0), -slack.minCoeff()) : Scalar(0);
  res.dual_violation = A.rows() > 0 ? std::max(Scalar(0), -mu.minCoeff()) : Scalar(0);
  res.complementarity = A.rows() > 0 ? mu.cwiseProduct(slack).cwiseAbs().maxCoeff() : Scalar(0);
  res.kkt_residual = std::max(res.stationarity, res.dual_violation);
  res.objective = (x - x_a).squaredNorm();
}

}  // namespace detail

/// Projection of `x_a` onto the polytope {x : A x <= b}: the unique minimiser
/// of |x - x_a|^2. Emptiness is decided by the phase-one LP; a non-empty set
/// is then solved by the dual active-set method. A stalled or uncertified
/// solve is retried on a jittered copy of b; failures are reported as
/// numeric_failure with diagnostics, never as a silent answer.
template <typename DerivedA, typename DerivedB, typename DerivedX>
QpResultT<typename DerivedA::Scalar> solve_qp(const Eigen::MatrixBase<DerivedA>& A_in,
                                               const Eigen::MatrixBase<DerivedB>& b_in,
                                               const Eigen::MatrixBase<DerivedX>& x_a_in,
                                               const QpOptions& options = {}) {
  using Scalar = typename DerivedA::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Eigen::Index;

  const Matrix A = A_in;
  const Vector b = b_in;
  const Vector x_a = x_a_in;
  if (A.cols() != x_a.size() || A.rows() != b.size())
    throw Error(ErrorCode::dimension, "solve_qp: inconsistent constraint dimensions");

  QpResultT<Scalar> res;
  res.multipliers = Vector::Zero(A.rows());

  const auto lp = phase_one(A, b, Scalar(options.feasibility_tol));
  res.lp_max_violation = lp.max_violation;
  if (!lp.feasible) {
    res.status = QpStatus::infeasible;
    res.farkas = lp.farkas;
    res.x_opt = x_a;
    res.diagnostics = "phase-one violation " + std::to_string(static_cast<double>(lp.max_violation));
    return res;
  }

  std::mt19937_64 rng(options.jitter_seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Scalar tol = Scalar(1e-13);
  auto note = [&](const std::string& m) { res.diagnostics += (res.diagnostics.empty() ? "" : "; ") + m; };
  for (int attempt = 0; attempt <= options.max_restarts; ++attempt) {
    Vector b_try = b;
    if (attempt > 0) {
      // Random tightening: the jittered set lies inside the original one.
      for (Index i = 0; i < b.size(); ++i)
        b_try(i) -= Scalar(options.jitter) * (Scalar(1) + std::abs(b(i))) * Scalar(0.5 * (1.0 + unit(rng)));
    }
    detail::DualActiveSet<Scalar> solver(A, b_try, x_a);
    const auto outcome = solver.run(tol, static_cast<int>(20 * (A.rows() + A.cols()) + 50));
    res.iterations += solver.iterations;
    res.restarts = attempt;
    if (outcome == detail::DualActiveSet<Scalar>::Outcome::optimal) {
      res.x_opt = solver.x;
      res.multipliers.setZero();
      res.active_set = solver.active;
      std::sort(res.active_set.begin(), res.active_set.end());
      for (std::size_t i = 0; i < solver.active.size(); ++i)
        res.multipliers(solver.active[i]) = Scalar(2) * std::max(solver.u[i], Scalar(0));
      detail::certify(res, A, b, x_a);
      res.status = QpStatus::optimal;
      if (res.certified()) return res;
      res.status = QpStatus::numeric_failure;
      std::ostringstream msg;
      msg << "attempt " << attempt << ": uncertified solution (kkt " << res.kkt_residual << ", primal "
          << res.primal_violation << ", comp " << res.complementarity << ")";
      note(msg.str());
    } else if (outcome == detail::DualActiveSet<Scalar>::Outcome::infeasible) {
      note("attempt " + std::to_string(attempt) + ": no dual step although phase one reported feasibility");
    } else {
      note("attempt " + std::to_string(attempt) + ": active-set iteration budget exhausted");
    }
  }
  res.status = QpStatus::numeric_failure;
  if (res.x_opt.size() == 0) res.x_opt = lp.point;
  return res;
}

}  // namespace mapad::map
