#pragma once

#include "mapad/espa/espa.hpp"
#include "mapad/glm/logistic.hpp"
#include "mapad/map/query.hpp"

#include <functional>
#include <vector>

namespace mapad::map {

// ---------------------------------------------------------------------------
// Locally invertible classifiers (penalty method)
// ---------------------------------------------------------------------------

/// Penalty iterates x*(eps2): accessible coordinates move to
/// (x + eps2 * C) / (1 + eps2) with C = inverse(P_L(x) - delta), frozen
/// coordinates are copied. Returns the largest-eps2 iterate that stays in
/// the classifier's neighbourhood; status infeasible if none does.
MapResult map_invertible_penalty(const InvertibleClassifier& clf, const MapQuery& q,
                                 const PenaltySchedule& sched,
                                 std::vector<PenaltyIterate>* path = nullptr);

// ---------------------------------------------------------------------------
// Logistic GLM (closed form)
// ---------------------------------------------------------------------------

/// P_L for a binary GLM: sigmoid of the score for L = 1, its complement for L = 0.
double glm_class_probability(const glm::GlmModel& model, const Eigen::VectorXd& x, int label);

/// Hyperplane projection onto {score = target}: the eps2 -> infinity limit of
/// the penalty solution. O(D). Throws unreachable_target when the target
/// probability leaves (0, 1) and no_control when theta vanishes on d_a.
MapResult map_glm(const glm::GlmModel& model, const MapQuery& q);

/// Finite-eps2 penalty minimiser (rank-one closed form).
MapResult map_glm_penalty(const glm::GlmModel& model, const MapQuery& q, double eps2);

std::vector<PenaltyIterate> map_glm_penalty_path(const glm::GlmModel& model, const MapQuery& q,
                                                 const PenaltySchedule& sched);

// ---------------------------------------------------------------------------
// eSPA (Voronoi polytopes + QP)
// ---------------------------------------------------------------------------

/// Half-space description of Voronoi cell `target_cell` restricted to the
/// accessible coordinates, frozen coordinates fixed at the query point.
/// Row j encodes the boundary with cell `neighbor[j]`.
struct CellPolytope {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Index target_cell = 0;
  std::vector<Index> neighbor;
};

/// For each k' != k:
///   sum_{i in d_a} 2 W_i (S_ik' - S_ik) x_i
///       <= sum_{i in d_a} W_i (S_ik'^2 - S_ik^2) + c_na(k') - c_na(k),
/// with c_na(j) = sum_{i in d_na} W_i (x_i - S_ij)^2.
CellPolytope build_cell_polytope(const espa::EspaModel& model, const MapQuery& q, Index k);

/// Which midpoint the normalised-normal rendering uses.
enum class MidpointConvention {
  /// sqrt(W) o S_k + 0.5 sqrt(W) o (S_k - S_k'), the expression as printed.
  as_printed,
  /// sqrt(W) o (S_k + S_k') / 2, the actual bisector midpoint.
  bisector,
};

/// The same cell written with unit normals V = sqrt(W) o (S_k - S_k') / |.|
/// in sqrt(W)-scaled coordinates:
///   A_j = -(sqrt(W) o V)_{d_a},  b_j = -V^T V_mid + sum_{i in d_na} sqrt(W_i) V_i x_i.
CellPolytope build_cell_polytope_normalized(const espa::EspaModel& model, const MapQuery& q, Index k,
                                            MidpointConvention midpoint);

struct EspaMapOptions {
  /// Push distance into the winning cell's interior.
  double eta = 1e-6;
  /// Candidate filter tolerance in equality mode.
  double tol_eq = 1e-9;
  /// Slack on the inequality candidate filter Lambda drop >= delta.
  double drop_slack = 1e-12;
  /// Marks binary columns; accessible binary coordinates get a rounded
  /// alternative endpoint in the result.
  std::vector<bool> binary_columns;
  QpOptions qp;
};

/// Minimal path for eSPA: one projection QP per candidate cell, argmin over
/// the feasible ones. Infeasibility is a result status, not an exception.
MapResult map_espa(const espa::EspaModel& model, const MapQuery& q, const EspaMapOptions& options = {});

// ---------------------------------------------------------------------------
// Brute-force grid oracle
// ---------------------------------------------------------------------------

using ProbabilityMap = std::function<double(const Eigen::VectorXd&)>;

struct GridOracleOptions {
  /// Equality-mode acceptance |drop - delta| <= tol_eq; defaults to h.
  double tol_eq = -1.0;
  /// Inequality-mode slack: drop >= delta - slack.
  double drop_slack = 1e-12;
};

/// Closest point of the grid x_{d_a} + h * Z^{|d_a|} inside the box
/// |offset|_inf <= radius whose predicted drop satisfies the query mode.
/// Ties between equally distant grid points go to the lexicographically
/// smallest offset. Exact equivalent of a full scan, evaluated on growing
/// sub-boxes that stop as soon as no unscanned point can be closer.
/// Requires |d_a| <= 3.
MapResult map_oracle_grid(const ProbabilityMap& p_label, const MapQuery& q, double radius, double h,
                          const GridOracleOptions& options = {});

}  // namespace mapad::map
