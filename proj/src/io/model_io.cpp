#include "mapad/io/model_io.hpp"

#include "mapad/error.hpp"

#include <fstream>
#include <sstream>

namespace mapad::io {

namespace {

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

json mat(const Eigen::MatrixXd& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::MatrixXd to_mat(const json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const auto v = j.at("data").get<std::vector<double>>();
  if (static_cast<Index>(v.size()) != rows * cols) throw Error(ErrorCode::parse, "matrix data has the wrong length");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

json kinds(const std::vector<ColumnKind>& k) {
  json out = json::array();
  for (ColumnKind c : k) out.push_back(c == ColumnKind::binary ? "binary" : "continuous");
  return out;
}

std::vector<ColumnKind> to_kinds(const json& j) {
  std::vector<ColumnKind> out;
  for (const auto& s : j) out.push_back(s.get<std::string>() == "binary" ? ColumnKind::binary : ColumnKind::continuous);
  return out;
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string(what) + ": " + e.what());
  }
}

}  // namespace

const char* to_string(ModelKind kind) { return kind == ModelKind::espa ? "espa" : "glm"; }

Index ModelDocument::dim() const { return kind == ModelKind::espa ? espa->dim() : glm->dim(); }

const std::vector<std::string>& ModelDocument::column_names() const {
  return kind == ModelKind::espa ? espa->column_names : glm->column_names;
}

const std::vector<ColumnKind>& ModelDocument::column_kinds() const {
  return kind == ModelKind::espa ? espa->column_kinds : glm->column_kinds;
}

const std::optional<Standardizer>& ModelDocument::standardizer() const {
  return kind == ModelKind::espa ? espa->standardizer : glm->standardizer;
}

double ModelDocument::class_probability(const Eigen::VectorXd& x, int label) const {
  if (kind == ModelKind::espa) return espa::predict_proba(*espa, x)(label);
  const double p1 = glm::glm_predict_proba(*glm, x);
  return label == 1 ? p1 : 1.0 - p1;
}

json to_json(const Standardizer& st) {
  return {{"means", vec(st.means)}, {"stddevs", vec(st.stddevs)}, {"scaled", st.scaled}};
}

Standardizer standardizer_from_json(const json& j) {
  return guarded("standardizer", [&] {
    Standardizer st;
    st.means = to_vec(j.at("means"));
    st.stddevs = to_vec(j.at("stddevs"));
    st.scaled = j.at("scaled").get<std::vector<bool>>();
    if (st.stddevs.size() != st.means.size() || static_cast<Index>(st.scaled.size()) != st.means.size())
      throw Error(ErrorCode::parse, "standardizer vectors differ in length");
    return st;
  });
}

json to_json(const espa::EspaModel& m) {
  json j;
  j["kind"] = "espa";
  j["W"] = vec(m.W);
  j["S"] = mat(m.S);
  j["Lambda"] = mat(m.Lambda);
  j["hyper"] = {{"K", m.hyper.K},
                {"eps_E", m.hyper.eps_E},
                {"eps_CL", m.hyper.eps_CL},
                {"max_iters", m.hyper.max_iters},
                {"tol", m.hyper.tol},
                {"n_restarts", m.hyper.n_restarts},
                {"lambda_floor", m.hyper.lambda_floor}};
  j["seed"] = m.hyper.seed;
  j["standardizer"] = m.standardizer ? to_json(*m.standardizer) : json(nullptr);
  j["column_names"] = m.column_names;
  j["column_kinds"] = kinds(m.column_kinds);
  return j;
}

espa::EspaModel espa_from_json(const json& j) {
  return guarded("espa model", [&] {
    espa::EspaModel m;
    m.W = to_vec(j.at("W"));
    m.S = to_mat(j.at("S"));
    m.Lambda = to_mat(j.at("Lambda"));
    const json& h = j.at("hyper");
    m.hyper.K = h.at("K").get<Index>();
    m.hyper.eps_E = h.at("eps_E").get<double>();
    m.hyper.eps_CL = h.at("eps_CL").get<double>();
    m.hyper.max_iters = h.at("max_iters").get<int>();
    m.hyper.tol = h.at("tol").get<double>();
    m.hyper.n_restarts = h.at("n_restarts").get<int>();
    m.hyper.lambda_floor = h.at("lambda_floor").get<double>();
    m.hyper.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("standardizer").is_null()) m.standardizer = standardizer_from_json(j.at("standardizer"));
    m.column_names = j.at("column_names").get<std::vector<std::string>>();
    m.column_kinds = to_kinds(j.at("column_kinds"));
    m.validate();
    return m;
  });
}

json to_json(const glm::GlmModel& m) {
  json j;
  j["kind"] = "glm";
  j["theta"] = vec(m.theta);
  j["intercept"] = m.intercept;
  j["link"] = "logistic";
  j["l2"] = m.l2;
  j["standardizer"] = m.standardizer ? to_json(*m.standardizer) : json(nullptr);
  j["column_names"] = m.column_names;
  j["column_kinds"] = kinds(m.column_kinds);
  return j;
}

glm::GlmModel glm_from_json(const json& j) {
  return guarded("glm model", [&] {
    glm::GlmModel m;
    if (j.at("link").get<std::string>() != "logistic") throw Error(ErrorCode::unsupported, "only the logistic link ships");
    m.theta = to_vec(j.at("theta"));
    m.intercept = j.at("intercept").get<double>();
    m.l2 = j.at("l2").get<double>();
    if (!j.at("standardizer").is_null()) m.standardizer = standardizer_from_json(j.at("standardizer"));
    m.column_names = j.at("column_names").get<std::vector<std::string>>();
    m.column_kinds = to_kinds(j.at("column_kinds"));
    return m;
  });
}

json to_json(const ModelDocument& doc) {
  json j = doc.kind == ModelKind::espa ? to_json(*doc.espa) : to_json(*doc.glm);
  j["split_seed"] = doc.split_seed;
  j["label_name"] = doc.label_name;
  j["class_values"] = doc.class_values;
  return j;
}

ModelDocument model_from_json(const json& j) {
  return guarded("model file", [&] {
    ModelDocument doc;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "espa") {
      doc.kind = ModelKind::espa;
      doc.espa = espa_from_json(j);
    } else if (kind == "glm") {
      doc.kind = ModelKind::glm;
      doc.glm = glm_from_json(j);
    } else {
      throw Error(ErrorCode::unsupported, "unknown model kind '" + kind + "'");
    }
    doc.split_seed = j.value("split_seed", std::uint64_t{0});
    doc.label_name = j.value("label_name", std::string{});
    doc.class_values = j.value("class_values", std::vector<double>{});
    return doc;
  });
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << text;
}

void save_model(const std::filesystem::path& path, const ModelDocument& doc) {
  write_text(path, to_json(doc).dump(2) + "\n");
}

ModelDocument load_model(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  const json j = guarded("model file", [&] { return json::parse(text); });
  return model_from_json(j);
}

}  // namespace mapad::io
