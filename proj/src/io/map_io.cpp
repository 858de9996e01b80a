#include "mapad/io/map_io.hpp"

#include "mapad/core/csv.hpp"
#include "mapad/error.hpp"

#include <algorithm>
#include <sstream>

namespace mapad::io {

map::MapResult run_map(const ModelDocument& doc, const MapRequest& req) {
  if (doc.kind == ModelKind::glm) return map::map_glm(*doc.glm, req.query);
  map::EspaMapOptions opt;
  opt.eta = req.eta;
  for (ColumnKind k : doc.espa->column_kinds) opt.binary_columns.push_back(k == ColumnKind::binary);
  return map::map_espa(*doc.espa, req.query, opt);
}

std::vector<Index> resolve_columns(const std::vector<std::string>& names, const std::vector<std::string>& columns) {
  std::vector<Index> out;
  for (const auto& n : names) {
    const auto it = std::find(columns.begin(), columns.end(), n);
    if (it == columns.end()) throw Error(ErrorCode::schema, "unknown feature '" + n + "'");
    out.push_back(static_cast<Index>(it - columns.begin()));
  }
  return out;
}

json qp_result_json(const map::QpResult& qp) {
  json j;
  j["status"] = map::to_string(qp.status);
  j["objective"] = qp.objective;
  j["active_set"] = qp.active_set;
  j["kkt_residual"] = qp.kkt_residual;
  j["primal_violation"] = qp.primal_violation;
  j["complementarity"] = qp.complementarity;
  j["lp_max_violation"] = qp.lp_max_violation;
  j["iterations"] = qp.iterations;
  j["restarts"] = qp.restarts;
  if (!qp.diagnostics.empty()) j["diagnostics"] = qp.diagnostics;
  return j;
}

namespace {

Eigen::VectorXd original_units(const ModelDocument& doc, const Eigen::VectorXd& z) {
  const auto& st = doc.standardizer();
  return st ? Eigen::VectorXd(st->inverse_transform(z)) : z;
}

json feature_changes(const ModelDocument& doc, const map::MapQuery& q, const Eigen::VectorXd& x_star) {
  const Eigen::VectorXd before = original_units(doc, q.x);
  const Eigen::VectorXd after = original_units(doc, x_star);
  const auto acc = map::normalized_indices(q.accessible);
  json out = json::array();
  for (Index i : acc) {
    out.push_back({{"feature", doc.column_names()[static_cast<std::size_t>(i)]},
                   {"before", before(i)},
                   {"after", after(i)},
                   {"delta", after(i) - before(i)},
                   {"delta_standardized", x_star(i) - q.x(i)}});
  }
  return out;
}

double original_mad(const ModelDocument& doc, const map::MapQuery& q, const Eigen::VectorXd& x_star) {
  const Eigen::VectorXd d = original_units(doc, x_star) - original_units(doc, q.x);
  double s = 0.0;
  for (Index i : map::normalized_indices(q.accessible)) s += d(i) * d(i);
  return std::sqrt(s);
}

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

json map_result_json(const ModelDocument& doc, const map::MapQuery& q, const map::MapResult& r) {
  json j;
  j["status"] = map::to_string(r.status);
  j["label"] = q.label;
  j["delta"] = q.delta;
  j["mode"] = q.mode == map::MapMode::equality ? "equality" : "inequality";
  std::vector<std::string> acc_names;
  for (Index i : map::normalized_indices(q.accessible)) acc_names.push_back(doc.column_names()[static_cast<std::size_t>(i)]);
  j["accessible"] = acc_names;
  j["p_before"] = doc.class_probability(q.x, q.label);
  j["x"] = as_vector(q.x);
  j["x_original"] = as_vector(original_units(doc, q.x));
  if (r.status == map::MapStatus::found) {
    j["x_star"] = as_vector(r.x_star);
    j["x_star_original"] = as_vector(original_units(doc, r.x_star));
    j["p_after"] = doc.class_probability(r.x_star, q.label);
    j["mad"] = r.mad;
    j["mad_original"] = original_mad(doc, q, r.x_star);
    j["achieved_drop"] = r.achieved_drop;
    j["changes"] = feature_changes(doc, q, r.x_star);
    j["winner_cells"] = r.winner_cells;
  } else {
    j["x_star"] = nullptr;
    j["mad"] = nullptr;
  }
  j["eta"] = r.eta;
  if (r.source_cell >= 0) j["source_cell"] = r.source_cell;
  json cells = json::array();
  for (const auto& c : r.per_cell) {
    json cj = {{"cell", c.cell}, {"verdict", map::to_string(c.verdict)}, {"lambda_drop", c.lambda_drop}};
    if (c.verdict == map::CellVerdict::solved) cj["distance"] = c.distance;
    if (c.qp) cj["qp"] = qp_result_json(*c.qp);
    cells.push_back(std::move(cj));
  }
  j["per_cell"] = std::move(cells);
  if (r.rounded) {
    j["rounded"] = {{"x_star", as_vector(r.rounded->x_star)},
                    {"x_star_original", as_vector(original_units(doc, r.rounded->x_star))},
                    {"mad", r.rounded->mad},
                    {"achieved_drop", r.rounded->achieved_drop},
                    {"meets_delta", r.rounded->meets_delta},
                    {"changes", feature_changes(doc, q, r.rounded->x_star)}};
  }
  if (!r.diagnostics.empty()) j["diagnostics"] = r.diagnostics;
  return j;
}

Workspace make_workspace(ModelDocument model, Dataset raw) {
  if (raw.dim() != model.dim())
    throw Error(ErrorCode::dimension, "dataset has " + std::to_string(raw.dim()) + " features, model expects " +
                                          std::to_string(model.dim()));
  if (raw.column_names != model.column_names())
    throw Error(ErrorCode::schema, "dataset columns differ from the model's columns");
  Workspace w;
  w.standardized = model.standardizer() ? apply_standardizer(raw, *model.standardizer()) : raw;
  w.split = split(raw.size(), {0.5, 0.25, 0.25}, model.split_seed);
  w.model = std::move(model);
  w.raw = std::move(raw);
  return w;
}

Workspace load_workspace(const std::filesystem::path& model_path, const std::filesystem::path& data_path,
                         const std::filesystem::path& schema_path) {
  return make_workspace(load_model(model_path), load_csv(data_path, DatasetSchema::load(schema_path)));
}

std::string batch_csv(const ModelDocument& doc, const std::vector<BatchRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "record,status,delta,mad,mad_original,achieved_drop";
  for (const auto& n : doc.column_names()) out << "," << csv_escape("delta_" + n);
  out << "\n";
  for (const auto& row : rows) {
    const bool found = row.result.status == map::MapStatus::found;
    out << row.record << "," << map::to_string(row.result.status) << "," << row.query.delta << ",";
    if (found) {
      out << row.result.mad << "," << original_mad(doc, row.query, row.result.x_star) << ","
          << row.result.achieved_drop;
      const Eigen::VectorXd d = original_units(doc, row.result.x_star) - original_units(doc, row.query.x);
      for (Index i = 0; i < d.size(); ++i) out << "," << d(i);
    } else {
      out << ",,";
      for (std::size_t i = 0; i < doc.column_names().size(); ++i) out << ",";
    }
    out << "\n";
  }
  return out.str();
}

json batch_json(const ModelDocument& doc, const std::vector<BatchRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    json j = map_result_json(doc, row.query, row.result);
    j["record"] = row.record;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace mapad::io
