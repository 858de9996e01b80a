#include "mapad/bench/experiments.hpp"
#include "mapad/bench/swiss_roll.hpp"
#include "mapad/core/csv.hpp"
#include "mapad/core/metrics.hpp"
#include "mapad/core/split.hpp"
#include "mapad/core/standardizer.hpp"
#include "mapad/error.hpp"
#include "mapad/glm/logistic.hpp"
#include "mapad/io/map_io.hpp"
#include "mapad/service/service.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

using namespace mapad;
using io::json;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  std::string model;
  std::string config;
};

json read_config(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    return json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, "config " + path + ": " + e.what());
  }
}

std::string config_path(const json& cfg, const std::string& key, const std::string& config_file,
                        const std::string& cli_value) {
  if (!cli_value.empty()) return cli_value;
  if (!cfg.contains(key)) return {};
  const fs::path p(cfg.at(key).get<std::string>());
  return p.is_absolute() || config_file.empty() ? p.string() : (fs::path(config_file).parent_path() / p).string();
}

espa::HyperGrid grid_from(const json& cfg) {
  espa::HyperGrid g = espa::HyperGrid::defaults();
  if (!cfg.contains("grid")) return g;
  const json& j = cfg.at("grid");
  if (j.contains("K")) g.K = j.at("K").get<std::vector<Index>>();
  if (j.contains("eps_E")) g.eps_E = j.at("eps_E").get<std::vector<double>>();
  if (j.contains("eps_CL")) g.eps_CL = j.at("eps_CL").get<std::vector<double>>();
  return g;
}

espa::EspaHyperparams base_from(const json& cfg, std::uint64_t seed) {
  espa::EspaHyperparams h;
  h.seed = seed;
  h.n_restarts = cfg.value("restarts", h.n_restarts);
  h.max_iters = cfg.value("max_iters", h.max_iters);
  return h;
}

DatasetSchema schema_for(const std::string& schema_path, const std::string& label) {
  if (!schema_path.empty()) return DatasetSchema::load(schema_path);
  if (label.empty()) throw Error(ErrorCode::invalid_argument, "give --schema or --label");
  DatasetSchema s;
  s.label = label;
  return s;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") std::cout << text;
  else io::write_text(out, text);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// --------------------------------------------------------------------------

struct GenArgs {
  Index n = 1024;
  int turns = 2;
  double noise = 0.0;
  int extra = 0;
};

int cmd_gen(const Globals& g, const GenArgs& a) {
  bench::SwissRollSpec spec;
  spec.n_points = a.n;
  spec.turns = a.turns;
  spec.noise_sigma = a.noise;
  spec.extra_dims = a.extra;
  spec.seed = g.seed;
  const Dataset d = bench::gen_swiss_roll(spec);
  if (g.out.empty()) throw Error(ErrorCode::invalid_argument, "gen needs --out");
  write_csv(g.out, d);
  std::cerr << "wrote " << d.size() << " records with " << d.dim() << " features to " << g.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string schema;
  std::string label;
  std::string method = "espa";
  double l2 = 1e-4;
  bool no_standardize = false;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  const json cfg = read_config(g.config);
  const std::string data_path = config_path(cfg, "data", g.config, a.data);
  const std::string schema_path = config_path(cfg, "schema", g.config, a.schema);
  if (data_path.empty()) throw Error(ErrorCode::invalid_argument, "train needs --data");
  const Dataset raw = load_csv(data_path, schema_for(schema_path, a.label));
  const SplitSpec sp = split(raw.size(), {0.5, 0.25, 0.25}, g.seed);

  Dataset data = raw;
  std::optional<Standardizer> st;
  if (!a.no_standardize) {
    auto [z, s] = standardize(raw, sp.train_idx);
    data = std::move(z);
    st = std::move(s);
  }
  const Dataset tr = data.subset(sp.train_idx), va = data.subset(sp.valid_idx), te = data.subset(sp.test_idx);

  io::ModelDocument doc;
  doc.split_seed = g.seed;
  doc.label_name = raw.label_name;
  doc.class_values = raw.class_values;
  json summary;
  if (bench::method_from_string(a.method) == bench::Method::espa) {
    auto sel = espa::select_hyperparams(tr, va, grid_from(cfg), base_from(cfg, g.seed));
    sel.model.standardizer = st;
    sel.model.column_names = raw.column_names;
    sel.model.column_kinds = raw.column_kinds;
    summary = {{"K", sel.hyper.K},
               {"eps_E", sel.hyper.eps_E},
               {"eps_CL", sel.hyper.eps_CL},
               {"cells", sel.model.cells()},
               {"validation_auc", sel.validation_auc},
               {"iterations", sel.state.iterations}};
    doc.kind = io::ModelKind::espa;
    doc.espa = std::move(sel.model);
  } else {
    glm::GlmModel m = glm::fit_logistic(tr, a.l2);
    m.standardizer = st;
    m.column_names = raw.column_names;
    m.column_kinds = raw.column_kinds;
    doc.kind = io::ModelKind::glm;
    doc.glm = std::move(m);
    summary = {{"l2", a.l2}};
  }
  Eigen::MatrixXd P(2, te.size());
  for (Index t = 0; t < te.size(); ++t) {
    const double p1 = doc.class_probability(te.features.col(t), 1);
    P(0, t) = 1.0 - p1;
    P(1, t) = p1;
  }
  Eigen::VectorXi pred(te.size());
  for (Index t = 0; t < te.size(); ++t) pred(t) = P(1, t) > 0.5 ? 1 : 0;
  summary["family"] = io::to_string(doc.kind);
  summary["test_auc"] = raw.num_classes == 2 ? multiclass_auc(P, te.labels) : 0.0;
  summary["test_accuracy"] = accuracy(pred, te.labels);
  const std::string out = !g.model.empty() ? g.model : g.out;
  if (out.empty()) throw Error(ErrorCode::invalid_argument, "train needs --model or --out for the model file");
  io::save_model(out, doc);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

struct MapArgs {
  std::string data;
  std::string schema;
  std::vector<Index> records;
  std::string split = "test";
  double delta = 0.5;
  std::string accessible;
  std::string mode = "inequality";
  int label = 1;
  double eta = 1e-6;
  bool only_label = false;
};

int cmd_map(const Globals& g, const MapArgs& a) {
  const json cfg = read_config(g.config);
  const std::string model_path = config_path(cfg, "model", g.config, g.model);
  const std::string data_path = config_path(cfg, "data", g.config, a.data);
  const std::string schema_path = config_path(cfg, "schema", g.config, a.schema);
  if (model_path.empty() || data_path.empty() || schema_path.empty())
    throw Error(ErrorCode::invalid_argument, "map needs --model, --data and --schema");
  const io::Workspace ws = io::load_workspace(model_path, data_path, schema_path);
  std::vector<std::string> names = split_list(a.accessible);
  if (names.empty() && cfg.contains("allowed")) names = cfg.at("allowed").get<std::vector<std::string>>();
  if (names.empty()) throw Error(ErrorCode::invalid_argument, "map needs --accessible");
  const std::vector<Index> acc = io::resolve_columns(names, ws.model.column_names());

  std::vector<Index> ids = a.records;
  if (ids.empty())
    for (Index t : ws.split.by_name(a.split))
      if (!a.only_label || ws.raw.labels(t) == a.label) ids.push_back(t);

  std::vector<io::BatchRow> rows;
  for (Index t : ids) {
    if (t < 0 || t >= ws.raw.size()) throw Error(ErrorCode::invalid_argument, "record " + std::to_string(t) + " out of range");
    io::BatchRow row;
    row.record = t;
    row.query.x = ws.standardized.features.col(t);
    row.query.label = a.label;
    row.query.delta = a.delta;
    row.query.accessible = acc;
    row.query.mode = a.mode == "equality" ? map::MapMode::equality : map::MapMode::inequality;
    row.result = io::run_map(ws.model, {row.query, a.eta});
    rows.push_back(std::move(row));
  }
  const bool as_json = g.out.size() >= 5 && g.out.substr(g.out.size() - 5) == ".json";
  emit(g.out, as_json ? io::batch_json(ws.model, rows).dump(2) + "\n" : io::batch_csv(ws.model, rows));
  Index found = 0;
  for (const auto& r : rows) found += r.result.status == map::MapStatus::found;
  std::cerr << found << " of " << rows.size() << " queries found\n";
  return 0;
}

struct SweepArgs {
  std::string kind = "turns";
  std::string values = "2,4";
  std::string methods = "espa,glm";
  std::string seeds = "0";
  Index n = 1024;
  double noise = 0.0;
  int map_queries = 0;
  double delta = 0.4;
};

int cmd_sweep(const Globals& g, const SweepArgs& a) {
  const json cfg = read_config(g.config);
  bench::SweepOptions opt;
  opt.base.n_points = a.n;
  opt.base.noise_sigma = a.noise;
  opt.grid = grid_from(cfg);
  opt.espa_base = base_from(cfg, g.seed);
  opt.map_queries = a.map_queries;
  opt.map_delta = a.delta;
  std::vector<double> values;
  for (const auto& v : split_list(a.values)) values.push_back(std::stod(v));
  std::vector<bench::Method> methods;
  for (const auto& m : split_list(a.methods)) methods.push_back(bench::method_from_string(m));
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_list(a.seeds)) seeds.push_back(std::stoull(s));
  const auto report = bench::run_sweep(bench::sweep_kind_from_string(a.kind), values, methods, seeds, opt);
  const std::string prefix = g.out.empty() ? "sweep" : g.out;
  io::write_text(prefix + ".csv", bench::sweep_csv(report));
  io::write_text(prefix + ".json", bench::sweep_json(report).dump(2) + "\n");
  for (const auto& agg : report.aggregates)
    std::cout << bench::to_string(agg.method) << " " << a.kind << "=" << agg.value << " runs=" << agg.runs
              << " accuracy=" << agg.accuracy_mean << "+-" << agg.accuracy_std << " auc=" << agg.auc_mean << "+-"
              << agg.auc_std << "\n";
  return 0;
}

struct FigArgs {
  std::string data;
  std::string schema;
  int n = 101;
  double delta = 0.4;
  int queries = 10;
  int turns = 2;
};

int cmd_figdata(const Globals& g, const FigArgs& a) {
  io::ModelDocument doc;
  Dataset data;
  if (!g.model.empty()) {
    if (a.data.empty() || a.schema.empty()) throw Error(ErrorCode::invalid_argument, "figdata with --model needs --data and --schema");
    io::Workspace ws = io::load_workspace(g.model, a.data, a.schema);
    doc = std::move(ws.model);
    data = ws.standardized.subset(ws.split.test_idx);
  } else {
    bench::SwissRollSpec spec;
    spec.turns = a.turns;
    spec.seed = g.seed;
    const Dataset all = bench::gen_swiss_roll(spec);
    const SplitSpec sp = split(all.size(), {0.5, 0.25, 0.25}, g.seed);
    espa::EspaHyperparams base;
    base.seed = g.seed;
    auto sel = espa::select_hyperparams(all.subset(sp.train_idx), all.subset(sp.valid_idx),
                                        grid_from(read_config(g.config)), base);
    sel.model.column_names = all.column_names;
    sel.model.column_kinds = all.column_kinds;
    doc.kind = io::ModelKind::espa;
    doc.espa = std::move(sel.model);
    doc.split_seed = g.seed;
    data = all.subset(sp.test_idx);
  }
  std::vector<Index> pick;
  for (Index t = 0; t < data.size() && static_cast<int>(pick.size()) < a.queries; ++t)
    if (data.labels(t) == 1) pick.push_back(t);
  bench::FigureInput in;
  in.n = a.n;
  in.scatter = &data;
  if (doc.dim() != 2) in.base_point = Eigen::VectorXd::Zero(doc.dim());
  in.box = {data.features.row(0).minCoeff() - 0.1, data.features.row(0).maxCoeff() + 0.1,
            data.features.row(1).minCoeff() - 0.1, data.features.row(1).maxCoeff() + 0.1};
  in.segments = bench::map_records(doc, data, pick, 1, a.delta, {0, 1});
  emit(g.out, bench::emit_figure_data(doc, in).dump() + "\n");
  return 0;
}

struct BiomedArgs {
  std::string data;
  std::string schema;
  std::string accessible;
  double delta = -1.0;
  std::string seeds;
};

int cmd_biomed(const Globals& g, const BiomedArgs& a) {
  const json cfg = read_config(g.config);
  const std::string data_path = config_path(cfg, "data", g.config, a.data);
  const std::string schema_path = config_path(cfg, "schema", g.config, a.schema);
  if (data_path.empty() || schema_path.empty()) throw Error(ErrorCode::invalid_argument, "biomed needs data and schema");
  const Dataset raw = load_csv(data_path, DatasetSchema::load(schema_path));
  bench::BiomedOptions opt;
  opt.accessible = a.accessible.empty() ? cfg.value("accessible", std::vector<std::string>{}) : split_list(a.accessible);
  opt.delta = a.delta > 0.0 ? a.delta : cfg.value("delta", 0.5);
  opt.label = cfg.value("label", 1);
  opt.grid = grid_from(cfg);
  opt.espa_base = base_from(cfg, g.seed);
  opt.age_column = cfg.value("age_column", std::string("age"));
  opt.split_seeds.clear();
  if (!a.seeds.empty()) {
    for (const auto& s : split_list(a.seeds)) opt.split_seeds.push_back(std::stoull(s));
  } else {
    opt.split_seeds = cfg.value("split_seeds", std::vector<std::uint64_t>{g.seed});
  }
  const auto report = bench::run_biomedical(raw, opt);
  const fs::path dir = g.out.empty() ? fs::path("biomed_out") : fs::path(g.out);
  io::write_text(dir / "report.json", bench::biomed_json(report).dump(2) + "\n");
  io::write_text(dir / "age_bins.csv", bench::age_bins_csv(report));
  for (const auto& run : report.runs) {
    io::write_text(dir / ("map_seed" + std::to_string(run.split_seed) + ".csv"), io::batch_csv(run.model, run.rows));
    io::save_model(dir / ("model_seed" + std::to_string(run.split_seed) + ".json"), run.model);
    std::cout << "seed " << run.split_seed << ": test AUC " << run.test_auc << ", found " << run.found << "/"
              << run.positives << " (" << 100.0 * run.found_fraction << "%)\n";
  }
  std::cout << "mean test AUC " << report.auc_mean << ", mean found fraction " << 100.0 * report.found_fraction_mean
            << "%\n";
  return 0;
}

struct ServeArgs {
  std::string host;
  int port = 0;
};

int cmd_serve(const Globals& g, const ServeArgs& a) {
  if (g.config.empty()) throw Error(ErrorCode::invalid_argument, "serve needs --config");
  service::ServiceConfig cfg = service::ServiceConfig::load(g.config);
  if (!g.model.empty()) cfg.model_path = g.model;
  if (!a.host.empty()) cfg.host = a.host;
  if (a.port > 0) cfg.port = a.port;
  service::MapService svc(io::load_workspace(cfg.model_path, cfg.data_path, cfg.schema_path), cfg);
  service::serve(svc, cfg.host, cfg.port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimal adversarial paths for eSPA and logistic models"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Split / generator / training seed");
  app.add_option("--out", g.out, "Output file or directory");
  app.add_option("--model", g.model, "Model file");
  app.add_option("--config", g.config, "JSON configuration file");

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "Generate a Swiss-roll dataset as CSV");
  c_gen->add_option("--n", gen.n, "Number of points");
  c_gen->add_option("--turns", gen.turns, "Spiral turns");
  c_gen->add_option("--noise", gen.noise, "Gaussian noise sigma");
  c_gen->add_option("--extra-dims", gen.extra, "Uniform nuisance dimensions");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train eSPA (grid-selected) or a logistic GLM");
  c_train->add_option("--data", train.data, "CSV file");
  c_train->add_option("--schema", train.schema, "Dataset schema (JSON)");
  c_train->add_option("--label", train.label, "Label column when no schema is given");
  c_train->add_option("--method", train.method, "espa or glm");
  c_train->add_option("--l2", train.l2, "Ridge weight for glm");
  c_train->add_flag("--no-standardize", train.no_standardize, "Keep features in original units");

  MapArgs mp;
  auto* c_map = app.add_subcommand("map", "Batch minimal adversarial paths for dataset records");
  c_map->add_option("--data", mp.data, "CSV file");
  c_map->add_option("--schema", mp.schema, "Dataset schema (JSON)");
  c_map->add_option("--record", mp.records, "Record ids (default: whole split)");
  c_map->add_option("--split", mp.split, "train, valid or test");
  c_map->add_option("--delta", mp.delta, "Required probability drop");
  c_map->add_option("--accessible", mp.accessible, "Comma-separated accessible features");
  c_map->add_option("--mode", mp.mode, "inequality or equality");
  c_map->add_option("--label", mp.label, "Class whose probability is reduced");
  c_map->add_option("--eta", mp.eta, "Interior nudge distance");
  c_map->add_flag("--only-label", mp.only_label, "Only records of the chosen class");

  SweepArgs sw;
  auto* c_sweep = app.add_subcommand("sweep", "Swiss-roll sweep over turns or nuisance dimensions");
  c_sweep->add_option("--kind", sw.kind, "turns or extra_dims");
  c_sweep->add_option("--values", sw.values, "Comma-separated values");
  c_sweep->add_option("--methods", sw.methods, "Comma-separated methods (espa, glm)");
  c_sweep->add_option("--seeds", sw.seeds, "Comma-separated seeds");
  c_sweep->add_option("--n", sw.n, "Points per dataset");
  c_sweep->add_option("--noise", sw.noise, "Gaussian noise sigma");
  c_sweep->add_option("--map-queries", sw.map_queries, "MAP queries per run");
  c_sweep->add_option("--delta", sw.delta, "Drop for the MAP queries");

  FigArgs fig;
  auto* c_fig = app.add_subcommand("figdata", "Contour grid, scatter and MAP segments as JSON");
  c_fig->add_option("--data", fig.data, "CSV file (with --model)");
  c_fig->add_option("--schema", fig.schema, "Dataset schema (with --model)");
  c_fig->add_option("--n", fig.n, "Grid points per axis");
  c_fig->add_option("--delta", fig.delta, "Drop for the MAP segments");
  c_fig->add_option("--queries", fig.queries, "Number of MAP segments");
  c_fig->add_option("--turns", fig.turns, "Spiral turns when no model is given");

  BiomedArgs bio;
  auto* c_bio = app.add_subcommand("biomed", "Biomedical pipeline: AUC and avoidable fraction");
  c_bio->add_option("--data", bio.data, "CSV file");
  c_bio->add_option("--schema", bio.schema, "Dataset schema (JSON)");
  c_bio->add_option("--accessible", bio.accessible, "Comma-separated accessible features");
  c_bio->add_option("--delta", bio.delta, "Required risk drop");
  c_bio->add_option("--seeds", bio.seeds, "Comma-separated split seeds");

  ServeArgs srv;
  auto* c_serve = app.add_subcommand("serve", "HTTP service over a model and dataset");
  c_serve->add_option("--host", srv.host, "Bind address");
  c_serve->add_option("--port", srv.port, "Port");

  for (auto* sub : {c_gen, c_train, c_map, c_sweep, c_fig, c_bio, c_serve}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);
  try {
    if (c_gen->parsed()) return cmd_gen(g, gen);
    if (c_train->parsed()) return cmd_train(g, train);
    if (c_map->parsed()) return cmd_map(g, mp);
    if (c_sweep->parsed()) return cmd_sweep(g, sw);
    if (c_fig->parsed()) return cmd_figdata(g, fig);
    if (c_bio->parsed()) return cmd_biomed(g, bio);
    if (c_serve->parsed()) return cmd_serve(g, srv);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
