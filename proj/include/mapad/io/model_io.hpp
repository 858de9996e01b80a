#pragma once

#include "mapad/espa/espa.hpp"
#include "mapad/glm/logistic.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace mapad::io {

using nlohmann::json;

enum class ModelKind { espa, glm };

const char* to_string(ModelKind kind);

/// Contents of a model file: one trained model plus the split it was
/// trained under, so records can be re-derived from the dataset.
struct ModelDocument {
  ModelKind kind = ModelKind::espa;
  std::optional<espa::EspaModel> espa;
  std::optional<glm::GlmModel> glm;
  std::uint64_t split_seed = 0;
  std::string label_name;
  std::vector<double> class_values;

  Index dim() const;
  const std::vector<std::string>& column_names() const;
  const std::vector<ColumnKind>& column_kinds() const;
  const std::optional<Standardizer>& standardizer() const;
  /// P_label at a standardised point.
  double class_probability(const Eigen::VectorXd& x, int label) const;
};

json to_json(const Standardizer& st);
Standardizer standardizer_from_json(const json& j);

json to_json(const espa::EspaModel& model);
espa::EspaModel espa_from_json(const json& j);

json to_json(const glm::GlmModel& model);
glm::GlmModel glm_from_json(const json& j);

json to_json(const ModelDocument& doc);
ModelDocument model_from_json(const json& j);

/// Doubles are written in shortest round-trip form, so save/load is bit-exact.
void save_model(const std::filesystem::path& path, const ModelDocument& doc);
ModelDocument load_model(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mapad::io
