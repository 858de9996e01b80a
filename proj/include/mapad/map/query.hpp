#pragma once

#include "mapad/core/dataset.hpp"
#include "mapad/map/qp.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mapad::map {

/// equality: drop P_L(x) - P_L(x*) = delta.  inequality: drop >= delta.
enum class MapMode { equality, inequality };

struct MapQuery {
  Eigen::VectorXd x;
  int label = 1;
  double delta = 0.0;
  /// Accessible coordinates; everything else is frozen at x.
  std::vector<Index> accessible;
  MapMode mode = MapMode::inequality;

  /// Throws unless x is finite with `dim` entries, `accessible` is non-empty
  /// with distinct in-range indices, and delta is finite and >= 0
  /// (delta = 0 is the identity query).
  void validate(Index dim) const;
  std::vector<Index> frozen() const;
  Eigen::VectorXd accessible_part() const;
};

/// Sorted, de-duplicated copy.
std::vector<Index> normalized_indices(std::vector<Index> idx);

enum class MapStatus { found, infeasible };

inline const char* to_string(MapStatus s) { return s == MapStatus::found ? "found" : "infeasible"; }

enum class CellVerdict { solved, delta_filtered, polytope_empty, numeric_failure };

const char* to_string(CellVerdict v);

struct CellOutcome {
  Index cell = 0;
  CellVerdict verdict = CellVerdict::delta_filtered;
  /// Lambda(L, k*) - Lambda(L, k).
  double lambda_drop = 0.0;
  std::optional<QpResult> qp;
  /// Euclidean distance from x to the (nudged) endpoint in this cell.
  double distance = 0.0;
};

/// Nearest-feasible rounding of binary accessible coordinates.
struct RoundedEndpoint {
  Eigen::VectorXd x_star;
  double mad = 0.0;
  double achieved_drop = 0.0;
  bool meets_delta = false;
};

struct MapResult {
  MapStatus status = MapStatus::infeasible;
  Eigen::VectorXd x_star;
  /// Euclidean length |x - x*| in the model's (standardised) space.
  double mad = 0.0;
  std::vector<Index> winner_cells;
  std::vector<CellOutcome> per_cell;
  double achieved_drop = 0.0;
  double eta = 0.0;
  /// |P_L(x*) - (P_L(x) - delta)| for the penalty solvers.
  double constraint_residual = 0.0;
  /// Penalty weight of the returned iterate (penalty solvers), 0 for the limit.
  double eps2 = 0.0;
  int source_cell = -1;
  std::optional<RoundedEndpoint> rounded;
  std::string diagnostics;
};

/// Increasing list of penalty weights epsilon^2.
struct PenaltySchedule {
  std::vector<double> eps2_values;

  static PenaltySchedule geometric(double first, double last, int count);
  void validate() const;
};

/// A classifier with a local inverse: forward(inverse(p)) = p on S(X).
/// `inverse` receives a probability and returns a full feature vector.
struct InvertibleClassifier {
  std::function<double(const Eigen::VectorXd&)> forward;
  std::function<Eigen::VectorXd(double)> inverse;
  std::function<bool(const Eigen::VectorXd&)> in_neighborhood;
};

/// One point on a penalty path.
struct PenaltyIterate {
  double eps2 = 0.0;
  Eigen::VectorXd x;
  double residual = 0.0;
  bool in_neighborhood = true;
};

}  // namespace mapad::map
