#pragma once

#include "mapad/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace mapad::map {

/// Outcome of the phase-one problem  min_{x,s} s  s.t.  A_i x / |A_i| - s <= b_i / |A_i|.
///
/// `max_violation` is the optimal s (clipped below at -1): the smallest
/// uniform violation, in distance units, any point can achieve. When it is
/// positive, `farkas` holds y >= 0 with sum(y) = 1, A_n^T y = 0 and
/// b_n^T y = -max_violation < 0 on the row-normalised system, which certifies
/// emptiness.
template <typename Scalar>
struct FeasibilityResult {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  bool feasible = false;
  Scalar max_violation = 0;
  Vector point;
  Vector farkas;
  Scalar farkas_residual = 0;
  int pivots = 0;
};

namespace detail {

/// Dense tableau simplex for  min c^T z  s.t.  T z = rhs, z >= 0, starting
/// from a feasible basis. Bland's rule keeps it finite.
template <typename Scalar>
struct Tableau {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix rows;  // m x (n + 1); last column is the right-hand side
  Vector cost;  // n
  std::vector<Eigen::Index> basis;

  Eigen::Index num_vars() const { return cost.size(); }

  void pivot(Eigen::Index r, Eigen::Index c) {
    rows.row(r) /= rows(r, c);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      if (i == r) continue;
      const Scalar f = rows(i, c);
      if (f != Scalar(0)) rows.row(i) -= f * rows.row(r);
    }
    basis[static_cast<std::size_t>(r)] = c;
  }

  Vector reduced_costs() const {
    Vector y = Vector::Zero(rows.rows());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) y(i) = cost(basis[static_cast<std::size_t>(i)]);
    return cost - rows.leftCols(num_vars()).transpose() * y;
  }

  /// Returns the pivot count; throws numeric error past `max_pivots`.
  int optimize(Scalar eps, int max_pivots) {
    for (int it = 0; it < max_pivots; ++it) {
      const Vector rc = reduced_costs();
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < num_vars(); ++j)
        if (rc(j) < -eps) {
          enter = j;
          break;
        }
      if (enter < 0) return it;
      Eigen::Index leave = -1;
      Scalar best_ratio = std::numeric_limits<Scalar>::infinity();
      for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const Scalar a = rows(i, enter);
        if (a <= eps) continue;
        const Scalar ratio = rows(i, rows.cols() - 1) / a;
        if (ratio < best_ratio - eps ||
            (std::abs(ratio - best_ratio) <= eps && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best_ratio = ratio;
          leave = i;
        }
      }
      if (leave < 0) throw Error(ErrorCode::numeric, "phase-one LP reported unbounded");
      pivot(leave, enter);
    }
    throw Error(ErrorCode::numeric, "phase-one LP exceeded its pivot budget");
  }
};

}  // namespace detail

/// Decides whether {x : A x <= b} is non-empty. Zero rows are dropped when
/// b_i >= 0 and make the set empty otherwise.
template <typename DerivedA, typename DerivedB>
FeasibilityResult<typename DerivedA::Scalar> phase_one(const Eigen::MatrixBase<DerivedA>& A,
                                                       const Eigen::MatrixBase<DerivedB>& b,
                                                       typename DerivedA::Scalar tol = 1e-9) {
  using Scalar = typename DerivedA::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Eigen::Index;

  const Index m = A.rows();
  const Index n = A.cols();
  if (b.size() != m) throw Error(ErrorCode::dimension, "phase_one: A and b disagree");

  FeasibilityResult<Scalar> out;
  out.point = Vector::Zero(n);
  out.farkas = Vector::Zero(m);

  Matrix An(m, n);
  Vector bn(m);
  std::vector<Index> keep;
  for (Index i = 0; i < m; ++i) {
    const Scalar norm = A.row(i).norm();
    if (norm <= std::numeric_limits<Scalar>::epsilon()) {
      if (b(i) < -tol) {
        out.feasible = false;
        out.max_violation = -b(i);
        out.farkas(i) = 1;
        return out;
      }
      continue;
    }
    An.row(static_cast<Index>(keep.size())) = A.row(i) / norm;
    bn(static_cast<Index>(keep.size())) = b(i) / norm;
    keep.push_back(i);
  }
  const Index mk = static_cast<Index>(keep.size());
  if (mk == 0) {
    out.feasible = true;
    out.max_violation = -1;
    return out;
  }
  An.conservativeResize(mk, n);
  bn.conservativeResize(mk);

  // Variables: x+ (n), x- (n), sigma = s + 1 >= 0, slacks (mk).
  const Index nv = 2 * n + 1 + mk;
  const Index sigma = 2 * n;
  detail::Tableau<Scalar> tab;
  tab.rows = Matrix::Zero(mk, nv + 1);
  tab.rows.leftCols(n) = An;
  tab.rows.middleCols(n, n) = -An;
  tab.rows.col(sigma).setConstant(-1);
  tab.rows.middleCols(sigma + 1, mk).setIdentity();
  tab.rows.col(nv) = bn.array() - 1;
  tab.cost = Vector::Zero(nv);
  tab.cost(sigma) = 1;
  tab.basis.resize(static_cast<std::size_t>(mk));
  for (Index i = 0; i < mk; ++i) tab.basis[static_cast<std::size_t>(i)] = sigma + 1 + i;

  Index worst;
  if (tab.rows.col(nv).minCoeff(&worst) < 0) tab.pivot(worst, sigma);

  const Scalar eps = Scalar(64) * std::numeric_limits<Scalar>::epsilon();
  out.pivots = tab.optimize(eps, static_cast<int>(50 * (nv + mk)));

  Vector z = Vector::Zero(nv);
  for (Index i = 0; i < mk; ++i) z(tab.basis[static_cast<std::size_t>(i)]) = tab.rows(i, nv);
  out.point = z.head(n) - z.segment(n, n);
  out.max_violation = z(sigma) - 1;
  out.feasible = out.max_violation <= tol;

  // Simplex multipliers pi = c_B^T B^{-1}; B^{-1} sits in the slack columns.
  Vector cb(mk);
  for (Index i = 0; i < mk; ++i) cb(i) = tab.cost(tab.basis[static_cast<std::size_t>(i)]);
  const Vector y = -(tab.rows.middleCols(sigma + 1, mk).transpose() * cb);
  for (Index i = 0; i < mk; ++i) out.farkas(keep[static_cast<std::size_t>(i)]) = std::max(y(i), Scalar(0));
  if (!out.feasible) out.farkas_residual = (An.transpose() * y).template lpNorm<Eigen::Infinity>();
  return out;
}

}  // namespace mapad::map
