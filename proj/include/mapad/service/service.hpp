#pragma once

#include "mapad/io/map_io.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mapad::service {

using io::json;

struct ServiceConfig {
  std::filesystem::path model_path;
  std::filesystem::path data_path;
  std::filesystem::path schema_path;
  std::string host = "127.0.0.1";
  int port = 8080;
  double eta = 1e-6;
  double default_delta = 0.5;
  int label = 1;
  /// Features a client may mark accessible.
  std::vector<std::string> allowed;
  /// Optional display units per feature name.
  std::map<std::string, std::string> units;

  /// Relative paths resolve against `base_dir`.
  static ServiceConfig from_json(const json& j, const std::filesystem::path& base_dir = {});
  static ServiceConfig load(const std::filesystem::path& path);
};

struct Response {
  int status = 200;
  std::string body;
};

/// Request handling without transport. Immutable after construction, so one
/// instance may serve concurrent requests.
class MapService {
 public:
  MapService(io::Workspace workspace, ServiceConfig config);

  Response meta() const;
  Response records(const std::string& split) const;
  Response map(const std::string& body) const;

  const io::Workspace& workspace() const { return ws_; }
  const ServiceConfig& config() const { return cfg_; }

 private:
  io::Workspace ws_;
  ServiceConfig cfg_;
  std::vector<Index> allowed_idx_;
  std::string meta_body_;
};

Response error_response(int status, const std::string& code, const std::string& message);

/// Blocks serving GET /meta, GET /records, POST /map.
void serve(const MapService& service, const std::string& host, int port);

}  // namespace mapad::service
