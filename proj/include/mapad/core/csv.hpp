#pragma once

#include "mapad/core/dataset.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mapad {

/// Declarative description of how a CSV file becomes a Dataset.
///
/// Stored as JSON:
///   {"label": "DEATH_EVENT", "columns": [...], "binary": [...],
///    "one_hot": [...], "drop": ["time"]}
/// `columns` lists the header names the file must carry (empty: any header).
/// Every header column that is neither the label nor dropped becomes a
/// feature, in file order; `one_hot` columns expand into one binary column
/// per distinct level, named "<column>=<level>".
struct DatasetSchema {
  std::string label;
  std::vector<std::string> columns;
  std::vector<std::string> binary;
  std::vector<std::string> one_hot;
  std::vector<std::string> drop;

  static DatasetSchema from_json_text(const std::string& text);
  static DatasetSchema load(const std::filesystem::path& path);
  std::string to_json_text() const;

  /// Copy with `name` removed from the drop list.
  DatasetSchema including(const std::string& name) const;
  /// Copy with `name` appended to the drop list.
  DatasetSchema excluding(const std::string& name) const;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC-4180 reader: quoted fields, doubled quotes, CRLF or LF line endings.
/// A header row is required; ragged rows are a parse error.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

/// Quote a field when it contains a separator, quote or newline.
std::string csv_escape(const std::string& field);

Dataset dataset_from_table(const CsvTable& table, const DatasetSchema& schema);
Dataset load_csv(const std::filesystem::path& path, const DatasetSchema& schema);

/// Writes features (in the dataset's own units) plus the label column.
void write_csv(const std::filesystem::path& path, const Dataset& data);

}  // namespace mapad
