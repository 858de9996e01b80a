#include "mapad/core/dataset.hpp"

#include "mapad/error.hpp"

#include <set>

namespace mapad {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::schema: return "schema";
    case ErrorCode::parse: return "parse";
    case ErrorCode::degenerate_column: return "degenerate_column";
    case ErrorCode::too_few_rows: return "too_few_rows";
    case ErrorCode::undefined_metric: return "undefined_metric";
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::infeasible_k: return "infeasible_k";
    case ErrorCode::domain: return "domain";
    case ErrorCode::non_convergence: return "non_convergence";
    case ErrorCode::unreachable_target: return "unreachable_target";
    case ErrorCode::no_control: return "no_control";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

Index Dataset::column_index(const std::string& name) const {
  for (std::size_t d = 0; d < column_names.size(); ++d)
    if (column_names[d] == name) return static_cast<Index>(d);
  throw Error(ErrorCode::schema, "unknown column '" + name + "'");
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Dataset out;
  out.column_names = column_names;
  out.column_kinds = column_kinds;
  out.num_classes = num_classes;
  out.label_name = label_name;
  out.class_values = class_values;
  out.features.resize(dim(), static_cast<Index>(rows.size()));
  out.labels.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Index r = rows[i];
    if (r < 0 || r >= size()) throw Error(ErrorCode::invalid_argument, "subset index out of range");
    out.features.col(static_cast<Index>(i)) = features.col(r);
    out.labels(static_cast<Index>(i)) = labels(r);
  }
  return out;
}

std::vector<bool> Dataset::binary_mask() const {
  std::vector<bool> mask(column_kinds.size());
  for (std::size_t d = 0; d < column_kinds.size(); ++d)
    mask[d] = column_kinds[d] == ColumnKind::binary;
  return mask;
}

void Dataset::validate() const {
  if (dim() < 1 || size() < 1) throw Error(ErrorCode::schema, "dataset must have D >= 1 and T >= 1");
  if (static_cast<Index>(column_names.size()) != dim() ||
      static_cast<Index>(column_kinds.size()) != dim())
    throw Error(ErrorCode::schema, "column metadata does not match feature rows");
  if (labels.size() != size()) throw Error(ErrorCode::schema, "label count does not match records");
  if (num_classes < 1) throw Error(ErrorCode::schema, "num_classes must be positive");
  if ((labels.array() < 0).any() || (labels.array() >= num_classes).any())
    throw Error(ErrorCode::schema, "label outside 0..M-1");
  if (!features.allFinite()) throw Error(ErrorCode::schema, "non-finite feature value");
  std::set<std::string> seen;
  for (const auto& name : column_names)
    if (!seen.insert(name).second) throw Error(ErrorCode::schema, "duplicate column '" + name + "'");
}

}  // namespace mapad
