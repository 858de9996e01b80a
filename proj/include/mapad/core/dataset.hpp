#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace mapad {

using Index = Eigen::Index;

enum class ColumnKind { continuous, binary };

/// Feature matrix stored D x T: one column per record, so a record is a
/// contiguous Eigen column. Labels are 0-based class indices.
struct Dataset {
  Eigen::MatrixXd features;
  std::vector<std::string> column_names;
  std::vector<ColumnKind> column_kinds;
  Eigen::VectorXi labels;
  int num_classes = 0;
  std::string label_name;
  /// Raw label value for each class index (e.g. 0 and 1 for a 0/1 column).
  std::vector<double> class_values;

  Index dim() const { return features.rows(); }
  Index size() const { return features.cols(); }

  /// Index of a named column; throws schema error when absent.
  Index column_index(const std::string& name) const;

  /// Records selected by index, in the given order.
  Dataset subset(std::span<const Index> rows) const;

  /// Mask over columns that are binary.
  std::vector<bool> binary_mask() const;

  /// Throws on violated invariants (label range, shape, duplicate names).
  void validate() const;
};

}  // namespace mapad
