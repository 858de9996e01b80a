#include "mapad/map/query.hpp"

#include "mapad/error.hpp"

#include <algorithm>
#include <cmath>

namespace mapad::map {

std::vector<Index> normalized_indices(std::vector<Index> idx) {
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

void MapQuery::validate(Index dim) const {
  if (x.size() != dim)
    throw Error(ErrorCode::dimension, "query has " + std::to_string(x.size()) + " features, model expects " +
                                          std::to_string(dim));
  if (!x.allFinite()) throw Error(ErrorCode::invalid_argument, "query point must be finite");
  if (accessible.empty()) throw Error(ErrorCode::invalid_argument, "accessible feature set is empty");
  if (normalized_indices(accessible).size() != accessible.size())
    throw Error(ErrorCode::invalid_argument, "accessible feature set has duplicates");
  for (Index i : accessible)
    if (i < 0 || i >= dim)
      throw Error(ErrorCode::invalid_argument, "accessible index " + std::to_string(i) + " out of range");
  if (!std::isfinite(delta) || delta < 0.0)
    throw Error(ErrorCode::invalid_argument, "delta must be finite and non-negative");
}

std::vector<Index> MapQuery::frozen() const {
  const auto acc = normalized_indices(accessible);
  std::vector<Index> out;
  for (Index i = 0; i < x.size(); ++i)
    if (!std::binary_search(acc.begin(), acc.end(), i)) out.push_back(i);
  return out;
}

Eigen::VectorXd MapQuery::accessible_part() const {
  const auto acc = normalized_indices(accessible);
  Eigen::VectorXd out(static_cast<Index>(acc.size()));
  for (std::size_t j = 0; j < acc.size(); ++j) out(static_cast<Index>(j)) = x(acc[j]);
  return out;
}

const char* to_string(CellVerdict v) {
  switch (v) {
    case CellVerdict::solved: return "solved";
    case CellVerdict::delta_filtered: return "delta_filtered";
    case CellVerdict::polytope_empty: return "polytope_empty";
    case CellVerdict::numeric_failure: return "numeric_failure";
  }
  return "unknown";
}

PenaltySchedule PenaltySchedule::geometric(double first, double last, int count) {
  if (!(first > 0.0) || !(last > first) || count < 2)
    throw Error(ErrorCode::invalid_argument, "geometric schedule needs 0 < first < last and count >= 2");
  PenaltySchedule s;
  const double ratio = std::pow(last / first, 1.0 / (count - 1));
  double v = first;
  for (int i = 0; i < count; ++i, v *= ratio) s.eps2_values.push_back(i == count - 1 ? last : v);
  return s;
}

void PenaltySchedule::validate() const {
  if (eps2_values.empty()) throw Error(ErrorCode::invalid_argument, "penalty schedule is empty");
  for (std::size_t i = 0; i < eps2_values.size(); ++i) {
    if (!(eps2_values[i] > 0.0)) throw Error(ErrorCode::invalid_argument, "penalty weights must be positive");
    if (i > 0 && !(eps2_values[i] > eps2_values[i - 1]))
      throw Error(ErrorCode::invalid_argument, "penalty weights must be strictly increasing");
  }
}

}  // namespace mapad::map
