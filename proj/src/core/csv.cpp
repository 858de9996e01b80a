#include "mapad/core/csv.hpp"

#include "mapad/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mapad {

namespace {

using nlohmann::json;

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& raw, double& out) {
  const std::string s = trim(raw);
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_level(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

DatasetSchema DatasetSchema::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema, std::string("schema is not valid JSON: ") + e.what());
  }
  DatasetSchema s;
  if (!j.contains("label")) throw Error(ErrorCode::schema, "schema needs a 'label' entry");
  s.label = j.at("label").get<std::string>();
  auto list = [&](const char* key) {
    return j.contains(key) ? j.at(key).get<std::vector<std::string>>() : std::vector<std::string>{};
  };
  s.columns = list("columns");
  s.binary = list("binary");
  s.one_hot = list("one_hot");
  s.drop = list("drop");
  return s;
}

DatasetSchema DatasetSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open schema file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string DatasetSchema::to_json_text() const {
  json j{{"label", label}, {"columns", columns}, {"binary", binary},
         {"one_hot", one_hot}, {"drop", drop}};
  return j.dump(2);
}

DatasetSchema DatasetSchema::including(const std::string& name) const {
  DatasetSchema s = *this;
  s.drop.erase(std::remove(s.drop.begin(), s.drop.end(), name), s.drop.end());
  return s;
}

DatasetSchema DatasetSchema::excluding(const std::string& name) const {
  DatasetSchema s = *this;
  if (!contains(s.drop, name)) s.drop.push_back(name);
  return s;
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !trim(field).empty())
          throw Error(ErrorCode::parse, "stray quote on line " + std::to_string(line));
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::parse, "unterminated quoted field");
  if (field_started || !record.empty()) end_record();

  if (records.empty()) throw Error(ErrorCode::parse, "CSV input is empty (header row required)");
  CsvTable table;
  table.header = std::move(records.front());
  for (auto& h : table.header) h = trim(h);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size())
      throw Error(ErrorCode::parse, "row " + std::to_string(r - 1) + " has " +
                                        std::to_string(records[r].size()) + " fields, header has " +
                                        std::to_string(table.header.size()));
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open CSV file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

Dataset dataset_from_table(const CsvTable& table, const DatasetSchema& schema) {
  const auto& header = table.header;
  auto require = [&](const std::string& name) {
    if (!contains(header, name)) throw Error(ErrorCode::schema, "missing column '" + name + "'");
  };
  require(schema.label);
  for (const auto& c : schema.columns) require(c);
  for (const auto& c : schema.binary) require(c);
  for (const auto& c : schema.one_hot) require(c);
  if (table.rows.empty()) throw Error(ErrorCode::parse, "CSV has a header but no records");

  const std::size_t T = table.rows.size();
  auto numeric_column = [&](std::size_t col) {
    std::vector<double> v(T);
    for (std::size_t r = 0; r < T; ++r)
      if (!parse_double(table.rows[r][col], v[r]))
        throw Error(ErrorCode::parse, "non-numeric value '" + table.rows[r][col] + "' in column '" +
                                          header[col] + "' at row " + std::to_string(r));
    return v;
  };

  Dataset data;
  std::vector<std::vector<double>> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (name == schema.label || contains(schema.drop, name)) continue;
    if (contains(schema.one_hot, name)) {
      const auto values = numeric_column(c);
      const std::set<double> levels(values.begin(), values.end());
      for (double level : levels) {
        std::vector<double> indicator(T);
        for (std::size_t r = 0; r < T; ++r) indicator[r] = values[r] == level ? 1.0 : 0.0;
        columns.push_back(std::move(indicator));
        data.column_names.push_back(name + "=" + format_level(level));
        data.column_kinds.push_back(ColumnKind::binary);
      }
      continue;
    }
    auto values = numeric_column(c);
    if (contains(schema.binary, name)) {
      for (std::size_t r = 0; r < T; ++r)
        if (values[r] != 0.0 && values[r] != 1.0)
          throw Error(ErrorCode::parse, "binary column '" + name + "' has value " +
                                            table.rows[r][c] + " at row " + std::to_string(r));
      data.column_kinds.push_back(ColumnKind::binary);
    } else {
      data.column_kinds.push_back(ColumnKind::continuous);
    }
    columns.push_back(std::move(values));
    data.column_names.push_back(name);
  }
  if (columns.empty()) throw Error(ErrorCode::schema, "schema leaves no feature columns");

  const Index D = static_cast<Index>(columns.size());
  data.features.resize(D, static_cast<Index>(T));
  for (Index d = 0; d < D; ++d)
    for (std::size_t r = 0; r < T; ++r) data.features(d, static_cast<Index>(r)) = columns[d][r];

  const auto label_col = static_cast<std::size_t>(
      std::find(header.begin(), header.end(), schema.label) - header.begin());
  const auto raw_labels = numeric_column(label_col);
  const std::set<double> classes(raw_labels.begin(), raw_labels.end());
  data.class_values.assign(classes.begin(), classes.end());
  data.num_classes = static_cast<int>(classes.size());
  data.label_name = schema.label;
  data.labels.resize(static_cast<Index>(T));
  for (std::size_t r = 0; r < T; ++r)
    data.labels(static_cast<Index>(r)) = static_cast<int>(
        std::lower_bound(data.class_values.begin(), data.class_values.end(), raw_labels[r]) -
        data.class_values.begin());
  data.validate();
  return data;
}

Dataset load_csv(const std::filesystem::path& path, const DatasetSchema& schema) {
  return dataset_from_table(read_csv(path), schema);
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out.precision(17);
  for (const auto& name : data.column_names) out << csv_escape(name) << ',';
  out << csv_escape(data.label_name.empty() ? "label" : data.label_name) << '\n';
  for (Index t = 0; t < data.size(); ++t) {
    for (Index d = 0; d < data.dim(); ++d) out << data.features(d, t) << ',';
    const int y = data.labels(t);
    const double raw = y < static_cast<int>(data.class_values.size()) ? data.class_values[y] : y;
    out << raw << '\n';
  }
}

}  // namespace mapad
