#include "mapad/service/service.hpp"

#include "mapad/error.hpp"

#include <httplib.h>

#include <algorithm>
#include <iostream>

namespace mapad::service {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::schema:
    case ErrorCode::parse:
    case ErrorCode::dimension: return 400;
    case ErrorCode::unreachable_target:
    case ErrorCode::no_control:
    case ErrorCode::domain: return 422;
    default: return 500;
  }
}

}  // namespace

ServiceConfig ServiceConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  try {
    ServiceConfig c;
    c.model_path = resolve(base_dir, j.at("model").get<std::string>());
    c.data_path = resolve(base_dir, j.at("data").get<std::string>());
    c.schema_path = resolve(base_dir, j.at("schema").get<std::string>());
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.eta = j.value("eta", c.eta);
    c.default_delta = j.value("default_delta", c.default_delta);
    c.label = j.value("label", c.label);
    c.allowed = j.at("allowed").get<std::vector<std::string>>();
    if (j.contains("units")) c.units = j.at("units").get<std::map<std::string, std::string>>();
    if (c.allowed.empty()) throw Error(ErrorCode::invalid_argument, "service config: allowed feature list is empty");
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("service config: ") + e.what());
  }
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  const std::string text = io::read_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, "service config: " + std::string(e.what()));
  }
  return from_json(j, path.parent_path());
}

Response error_response(int status, const std::string& code, const std::string& message) {
  return {status, json{{"code", code}, {"message", message}}.dump()};
}

MapService::MapService(io::Workspace workspace, ServiceConfig config)
    : ws_(std::move(workspace)), cfg_(std::move(config)) {
  if (cfg_.allowed.empty()) throw Error(ErrorCode::invalid_argument, "allowed feature list is empty");
  allowed_idx_ = io::resolve_columns(cfg_.allowed, ws_.model.column_names());
  if (cfg_.label < 0 || cfg_.label >= 2) throw Error(ErrorCode::invalid_argument, "service label must be 0 or 1");

  json features = json::array();
  const auto& names = ws_.model.column_names();
  const auto& kinds = ws_.model.column_kinds();
  for (std::size_t i = 0; i < names.size(); ++i) {
    json f = {{"index", i},
              {"name", names[i]},
              {"kind", kinds[i] == ColumnKind::binary ? "binary" : "continuous"},
              {"allowed", std::find(cfg_.allowed.begin(), cfg_.allowed.end(), names[i]) != cfg_.allowed.end()}};
    const auto u = cfg_.units.find(names[i]);
    f["unit"] = u != cfg_.units.end() ? u->second : "";
    features.push_back(std::move(f));
  }
  json meta = {{"family", io::to_string(ws_.model.kind)},
               {"label", cfg_.label},
               {"label_name", ws_.model.label_name},
               {"features", features},
               {"allowed", cfg_.allowed},
               {"default_delta", cfg_.default_delta},
               {"eta", cfg_.eta},
               {"records", ws_.raw.size()},
               {"splits",
                {{"train", ws_.split.train_idx.size()},
                 {"valid", ws_.split.valid_idx.size()},
                 {"test", ws_.split.test_idx.size()}}}};
  if (ws_.model.kind == io::ModelKind::espa) meta["cells"] = ws_.model.espa->cells();
  meta_body_ = meta.dump();
}

Response MapService::meta() const { return {200, meta_body_}; }

Response MapService::records(const std::string& split_name) const {
  const std::vector<Index>* idx = nullptr;
  try {
    idx = &ws_.split.by_name(split_name);
  } catch (const Error&) {
    return error_response(400, "invalid_split", "unknown split '" + split_name + "'; use train, valid or test");
  }
  json out = json::array();
  for (Index t : *idx) {
    const Eigen::VectorXd x = ws_.raw.features.col(t);
    out.push_back({{"id", t},
                   {"features", std::vector<double>(x.data(), x.data() + x.size())},
                   {"label", ws_.raw.labels(t)},
                   {"p", ws_.model.class_probability(ws_.standardized.features.col(t), cfg_.label)}});
  }
  return {200, json{{"split", split_name}, {"records", out}}.dump()};
}

Response MapService::map(const std::string& body) const {
  json req;
  try {
    req = json::parse(body);
  } catch (const json::exception& e) {
    return error_response(400, "parse", std::string("request body is not JSON: ") + e.what());
  }
  if (!req.is_object()) return error_response(400, "invalid_argument", "request body must be a JSON object");
  if (!req.contains("record_id") || !req["record_id"].is_number_integer())
    return error_response(400, "invalid_argument", "record_id must be an integer");
  const Index id = req["record_id"].get<Index>();
  if (id < 0 || id >= ws_.raw.size())
    return error_response(404, "unknown_record", "record " + std::to_string(id) + " does not exist");

  double delta = cfg_.default_delta;
  if (req.contains("delta")) {
    if (!req["delta"].is_number()) return error_response(400, "invalid_argument", "delta must be a number");
    delta = req["delta"].get<double>();
  }
  if (!(delta > 0.0 && delta <= 1.0)) return error_response(400, "invalid_delta", "delta must lie in (0, 1]");

  if (!req.contains("d_a") || !req["d_a"].is_array() || req["d_a"].empty())
    return error_response(400, "invalid_argument", "d_a must be a non-empty list of feature names");
  std::vector<std::string> names;
  for (const auto& v : req["d_a"]) {
    if (!v.is_string()) return error_response(400, "invalid_argument", "d_a entries must be feature names");
    names.push_back(v.get<std::string>());
  }
  for (const auto& n : names)
    if (std::find(cfg_.allowed.begin(), cfg_.allowed.end(), n) == cfg_.allowed.end())
      return error_response(403, "forbidden_feature", "feature '" + n + "' is not in the allowed set");

  map::MapMode mode = map::MapMode::inequality;
  if (req.contains("mode")) {
    const std::string m = req["mode"].is_string() ? req["mode"].get<std::string>() : "";
    if (m == "equality") mode = map::MapMode::equality;
    else if (m != "inequality") return error_response(400, "invalid_argument", "mode must be equality or inequality");
  }

  try {
    io::MapRequest r;
    r.query.x = ws_.standardized.features.col(id);
    r.query.label = cfg_.label;
    r.query.delta = delta;
    r.query.accessible = io::resolve_columns(names, ws_.model.column_names());
    r.query.mode = mode;
    r.eta = cfg_.eta;
    const map::MapResult result = io::run_map(ws_.model, r);
    json out = io::map_result_json(ws_.model, r.query, result);
    out["record_id"] = id;
    return {200, out.dump()};
  } catch (const Error& e) {
    return error_response(http_status(e.code()), to_string(e.code()), e.what());
  }
}

void serve(const MapService& service, const std::string& host, int port) {
  httplib::Server server;
  auto send = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Get("/meta", [&](const httplib::Request&, httplib::Response& res) { send(res, service.meta()); });
  server.Get("/records", [&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.records(req.has_param("split") ? req.get_param_value("split") : "test"));
  });
  server.Post("/map", [&](const httplib::Request& req, httplib::Response& res) { send(res, service.map(req.body)); });
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  std::cerr << "listening on http://" << host << ":" << port << "\n";
  if (!server.listen(host, port)) throw Error(ErrorCode::io, "cannot bind " + host + ":" + std::to_string(port));
}

}  // namespace mapad::service
