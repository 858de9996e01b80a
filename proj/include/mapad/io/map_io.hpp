#pragma once

#include "mapad/core/split.hpp"
#include "mapad/io/model_io.hpp"
#include "mapad/map/solvers.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mapad::io {

/// One MAP request against a model document, in standardised space.
struct MapRequest {
  map::MapQuery query;
  double eta = 1e-6;
};

/// map_espa or map_glm depending on the model family. Binary columns of an
/// eSPA model get the rounded alternative endpoint.
map::MapResult run_map(const ModelDocument& doc, const MapRequest& req);

/// Feature names to column indices; throws schema error on unknown names.
std::vector<Index> resolve_columns(const std::vector<std::string>& names, const std::vector<std::string>& columns);

/// Result document: standardised endpoint, per-feature changes in original
/// units, mad in both spaces, per-cell diagnostics.
json map_result_json(const ModelDocument& doc, const map::MapQuery& q, const map::MapResult& r);

json qp_result_json(const map::QpResult& qp);

/// Model, dataset and split needed to answer queries about stored records.
struct Workspace {
  ModelDocument model;
  Dataset raw;
  Dataset standardized;
  SplitSpec split;
};

Workspace load_workspace(const std::filesystem::path& model_path, const std::filesystem::path& data_path,
                         const std::filesystem::path& schema_path);
Workspace make_workspace(ModelDocument model, Dataset raw);

/// Batch MAP over records: one CSV row per record with status, mad,
/// achieved drop and a delta column per feature (original units).
struct BatchRow {
  Index record = 0;
  map::MapQuery query;
  map::MapResult result;
};

std::string batch_csv(const ModelDocument& doc, const std::vector<BatchRow>& rows);
json batch_json(const ModelDocument& doc, const std::vector<BatchRow>& rows);

}  // namespace mapad::io
