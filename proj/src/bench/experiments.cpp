#include "mapad/bench/experiments.hpp"

#include "mapad/core/csv.hpp"
#include "mapad/core/metrics.hpp"
#include "mapad/core/split.hpp"
#include "mapad/core/standardizer.hpp"
#include "mapad/error.hpp"
#include "mapad/glm/logistic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace mapad::bench {

const char* to_string(Method m) { return m == Method::espa ? "espa" : "glm"; }
const char* to_string(SweepKind k) { return k == SweepKind::turns ? "turns" : "extra_dims"; }

Method method_from_string(const std::string& s) {
  if (s == "espa") return Method::espa;
  if (s == "glm") return Method::glm;
  throw Error(ErrorCode::invalid_argument, "unknown method '" + s + "'");
}

SweepKind sweep_kind_from_string(const std::string& s) {
  if (s == "turns") return SweepKind::turns;
  if (s == "extra_dims") return SweepKind::extra_dims;
  throw Error(ErrorCode::invalid_argument, "unknown sweep kind '" + s + "'");
}

namespace {

std::string describe(const espa::EspaHyperparams& h) {
  std::ostringstream s;
  s << "K=" << h.K << " eps_E=" << h.eps_E << " eps_CL=" << h.eps_CL;
  return s.str();
}

io::ModelDocument train_method(Method method, const Dataset& tr, const Dataset& va, const SweepOptions& opt,
                               std::string& hyper) {
  io::ModelDocument doc;
  doc.label_name = tr.label_name;
  doc.class_values = tr.class_values;
  if (method == Method::espa) {
    auto sel = espa::select_hyperparams(tr, va, opt.grid, opt.espa_base);
    sel.model.column_names = tr.column_names;
    sel.model.column_kinds = tr.column_kinds;
    hyper = describe(sel.hyper);
    doc.kind = io::ModelKind::espa;
    doc.espa = std::move(sel.model);
  } else {
    doc.kind = io::ModelKind::glm;
    doc.glm = glm::fit_logistic(tr, opt.glm_l2);
    hyper = "l2=" + std::to_string(opt.glm_l2);
  }
  return doc;
}

Eigen::VectorXd class1_scores(const io::ModelDocument& doc, const Dataset& d) {
  Eigen::VectorXd s(d.size());
  for (Index t = 0; t < d.size(); ++t) s(t) = doc.class_probability(d.features.col(t), 1);
  return s;
}

Eigen::VectorXi hard_labels(const Eigen::VectorXd& p1) {
  return (p1.array() > 0.5).cast<int>();
}

}  // namespace

std::vector<MapRecord> map_records(const io::ModelDocument& model, const Dataset& data, std::span<const Index> rows,
                                   int label, double delta, const std::vector<Index>& accessible) {
  std::vector<MapRecord> out;
  for (Index t : rows) {
    MapRecord rec;
    rec.record = t;
    rec.x = data.features.col(t);
    rec.delta = delta;
    rec.p_before = model.class_probability(rec.x, label);
    try {
      io::MapRequest req;
      req.query.x = rec.x;
      req.query.label = label;
      req.query.delta = delta;
      req.query.accessible = accessible;
      const map::MapResult r = io::run_map(model, req);
      rec.status = r.status;
      if (r.status == map::MapStatus::found) {
        rec.x_star = r.x_star;
        rec.mad = r.mad;
        rec.p_after = model.class_probability(r.x_star, label);
        rec.verified = rec.p_before - rec.p_after >= delta - 1e-9;
      }
    } catch (const Error& e) {
      rec.error = e.what();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

ExperimentReport run_sweep(SweepKind kind, const std::vector<double>& values, const std::vector<Method>& methods,
                           const std::vector<std::uint64_t>& seeds, const SweepOptions& opt) {
  if (values.empty()) throw Error(ErrorCode::invalid_argument, "sweep needs at least one value");
  if (methods.empty() || seeds.empty()) throw Error(ErrorCode::invalid_argument, "sweep needs methods and seeds");
  ExperimentReport report;
  for (double value : values) {
    for (Method method : methods) {
      for (std::uint64_t seed : seeds) {
        SweepRow row;
        row.kind = kind;
        row.value = value;
        row.method = method;
        row.seed = seed;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          SwissRollSpec spec = opt.base;
          spec.seed = seed;
          if (kind == SweepKind::turns) spec.turns = static_cast<int>(value);
          else spec.extra_dims = static_cast<int>(value);
          const Dataset data = gen_swiss_roll(spec);
          const SplitSpec sp = split(data.size(), {0.5, 0.25, 0.25}, seed);
          const Dataset tr = data.subset(sp.train_idx), va = data.subset(sp.valid_idx), te = data.subset(sp.test_idx);
          const io::ModelDocument doc = train_method(method, tr, va, opt, row.hyper);
          const Eigen::VectorXd p1 = class1_scores(doc, te);
          row.auc = auc(p1, te.labels);
          row.accuracy = accuracy(hard_labels(p1), te.labels);
          if (opt.map_queries > 0) {
            std::vector<Index> pick;
            for (Index t = 0; t < te.size() && static_cast<int>(pick.size()) < opt.map_queries; ++t)
              if (te.labels(t) == 1) pick.push_back(t);
            row.maps = map_records(doc, te, pick, 1, opt.map_delta, {0, 1});
          }
          row.ok = true;
        } catch (const std::exception& e) {
          row.error = e.what();
        }
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.rows.push_back(std::move(row));
      }
    }
  }
  for (double value : values) {
    for (Method method : methods) {
      SweepAggregate agg;
      agg.value = value;
      agg.method = method;
      std::vector<double> acc, au;
      for (const auto& r : report.rows)
        if (r.ok && r.value == value && r.method == method) {
          acc.push_back(r.accuracy);
          au.push_back(r.auc);
        }
      agg.runs = static_cast<int>(acc.size());
      auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
        if (v.empty()) return;
        mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        sd = 0.0;
        for (double x : v) sd += (x - mean) * (x - mean);
        sd = std::sqrt(sd / static_cast<double>(v.size()));
      };
      stats(acc, agg.accuracy_mean, agg.accuracy_std);
      stats(au, agg.auc_mean, agg.auc_std);
      report.aggregates.push_back(agg);
    }
  }
  return report;
}

std::string sweep_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out.precision(10);
  out << "kind,value,method,seed,ok,accuracy,auc,seconds,hyper,maps_found,maps_verified,error\n";
  for (const auto& r : report.rows) {
    int found = 0, verified = 0;
    for (const auto& m : r.maps) {
      found += m.status == map::MapStatus::found;
      verified += m.verified;
    }
    out << to_string(r.kind) << "," << r.value << "," << to_string(r.method) << "," << r.seed << ","
        << (r.ok ? 1 : 0) << "," << r.accuracy << "," << r.auc << "," << r.seconds << ","
        << csv_escape(r.hyper) << "," << found << "," << verified << "," << csv_escape(r.error) << "\n";
  }
  return out.str();
}

namespace {

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

json map_record_json(const MapRecord& m) {
  json j = {{"record", m.record},    {"status", map::to_string(m.status)}, {"delta", m.delta},
            {"p_before", m.p_before}, {"x", as_vector(m.x)}};
  if (m.status == map::MapStatus::found) {
    j["x_star"] = as_vector(m.x_star);
    j["mad"] = m.mad;
    j["p_after"] = m.p_after;
    j["verified"] = m.verified;
  }
  if (!m.error.empty()) j["error"] = m.error;
  return j;
}

}  // namespace

json sweep_json(const ExperimentReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json maps = json::array();
    for (const auto& m : r.maps) maps.push_back(map_record_json(m));
    rows.push_back({{"kind", to_string(r.kind)},
                    {"value", r.value},
                    {"method", to_string(r.method)},
                    {"seed", r.seed},
                    {"ok", r.ok},
                    {"accuracy", r.accuracy},
                    {"auc", r.auc},
                    {"seconds", r.seconds},
                    {"hyper", r.hyper},
                    {"error", r.error},
                    {"maps", maps}});
  }
  json aggs = json::array();
  for (const auto& a : report.aggregates)
    aggs.push_back({{"value", a.value},
                    {"method", to_string(a.method)},
                    {"runs", a.runs},
                    {"accuracy_mean", a.accuracy_mean},
                    {"accuracy_std", a.accuracy_std},
                    {"auc_mean", a.auc_mean},
                    {"auc_std", a.auc_std}});
  return {{"rows", rows}, {"aggregates", aggs}};
}

json emit_figure_data(const io::ModelDocument& model, const FigureInput& in) {
  if (in.n < 2) throw Error(ErrorCode::invalid_argument, "figure grid needs n >= 2");
  const Index D = model.dim();
  if (D != 2 && !in.base_point)
    throw Error(ErrorCode::unsupported, "model has " + std::to_string(D) + " features; supply a base point for the remaining coordinates");
  if (in.base_point && in.base_point->size() != D)
    throw Error(ErrorCode::dimension, "base point does not match the model dimension");
  Eigen::VectorXd x = in.base_point ? *in.base_point : Eigen::VectorXd::Zero(D);

  std::vector<double> gx(static_cast<std::size_t>(in.n)), gy(static_cast<std::size_t>(in.n));
  for (int i = 0; i < in.n; ++i) {
    const double f = static_cast<double>(i) / (in.n - 1);
    gx[static_cast<std::size_t>(i)] = in.box.x_min + f * (in.box.x_max - in.box.x_min);
    gy[static_cast<std::size_t>(i)] = in.box.y_min + f * (in.box.y_max - in.box.y_min);
  }
  json prob = json::array();
  for (int i = 0; i < in.n; ++i) {
    std::vector<double> row(static_cast<std::size_t>(in.n));
    x(1) = gy[static_cast<std::size_t>(i)];
    for (int j = 0; j < in.n; ++j) {
      x(0) = gx[static_cast<std::size_t>(j)];
      row[static_cast<std::size_t>(j)] = model.class_probability(x, in.label);
    }
    prob.push_back(std::move(row));
  }
  json scatter = json::array();
  if (in.scatter)
    for (Index t = 0; t < in.scatter->size(); ++t)
      scatter.push_back({{"x", in.scatter->features(0, t)},
                         {"y", in.scatter->features(1, t)},
                         {"label", in.scatter->labels(t)}});
  json segments = json::array();
  for (const auto& m : in.segments) {
    json s = map_record_json(m);
    s["from"] = {m.x(0), m.x(1)};
    if (m.status == map::MapStatus::found) s["to"] = {m.x_star(0), m.x_star(1)};
    segments.push_back(std::move(s));
  }
  return {{"label", in.label}, {"grid_x", gx}, {"grid_y", gy}, {"prob", prob}, {"scatter", scatter},
          {"segments", segments}};
}

BiomedReport run_biomedical(const Dataset& raw, const BiomedOptions& opt) {
  if (opt.split_seeds.empty()) throw Error(ErrorCode::invalid_argument, "biomedical run needs at least one split seed");
  if (!(opt.delta > 0.0 && opt.delta <= 1.0)) throw Error(ErrorCode::invalid_argument, "delta must lie in (0, 1]");
  const std::vector<Index> acc = io::resolve_columns(opt.accessible, raw.column_names);
  BiomedReport report;
  report.accessible = opt.accessible;
  for (std::uint64_t seed : opt.split_seeds) {
    BiomedRun run;
    run.split_seed = seed;
    const SplitSpec sp = split(raw.size(), {0.5, 0.25, 0.25}, seed);
    auto [data, st] = standardize(raw, sp.train_idx);
    const Dataset tr = data.subset(sp.train_idx), va = data.subset(sp.valid_idx), te = data.subset(sp.test_idx);
    espa::EspaHyperparams base = opt.espa_base;
    base.seed = seed;
    auto sel = espa::select_hyperparams(tr, va, opt.grid, base);
    sel.model.standardizer = st;
    sel.model.column_names = raw.column_names;
    sel.model.column_kinds = raw.column_kinds;
    run.hyper = sel.hyper;
    run.validation_auc = sel.validation_auc;
    run.model.kind = io::ModelKind::espa;
    run.model.espa = std::move(sel.model);
    run.model.split_seed = seed;
    run.model.label_name = raw.label_name;
    run.model.class_values = raw.class_values;
    run.test_auc = multiclass_auc(espa::predict_proba_batch(*run.model.espa, te.features), te.labels);

    for (Index t : sp.test_idx) {
      if (data.labels(t) != opt.label) continue;
      io::BatchRow row;
      row.record = t;
      row.query.x = data.features.col(t);
      row.query.label = opt.label;
      row.query.delta = opt.delta;
      row.query.accessible = acc;
      row.result = io::run_map(run.model, {row.query, 1e-6});
      ++run.positives;
      run.found += row.result.status == map::MapStatus::found;
      run.rows.push_back(std::move(row));
    }
    run.found_fraction = run.positives > 0 ? static_cast<double>(run.found) / static_cast<double>(run.positives) : 0.0;
    report.runs.push_back(std::move(run));
  }
  for (const auto& r : report.runs) {
    report.auc_mean += r.test_auc;
    report.found_fraction_mean += r.found_fraction;
  }
  report.auc_mean /= static_cast<double>(report.runs.size());
  report.found_fraction_mean /= static_cast<double>(report.runs.size());

  const auto age_it = std::find(raw.column_names.begin(), raw.column_names.end(), opt.age_column);
  if (age_it != raw.column_names.end() && opt.age_bin > 0.0) {
    const Index age_col = static_cast<Index>(age_it - raw.column_names.begin());
    std::map<double, AgeBin> bins;
    std::map<double, double> mad_sums;
    std::map<double, std::vector<double>> change_sums;
    for (const auto& run : report.runs) {
      const Standardizer& st = *run.model.espa->standardizer;
      for (const auto& row : run.rows) {
        const double lower = std::floor(raw.features(age_col, row.record) / opt.age_bin) * opt.age_bin;
        AgeBin& b = bins[lower];
        b.lower = lower;
        ++b.records;
        auto& changes = change_sums[lower];
        changes.resize(acc.size(), 0.0);
        if (row.result.status != map::MapStatus::found) continue;
        ++b.found;
        const Eigen::VectorXd d = st.inverse_delta(row.result.x_star - row.query.x);
        double s = 0.0;
        for (std::size_t j = 0; j < acc.size(); ++j) {
          s += d(acc[j]) * d(acc[j]);
          changes[j] += d(acc[j]);
        }
        mad_sums[lower] += std::sqrt(s);
      }
    }
    for (auto& [lower, b] : bins) {
      b.mean_change = change_sums[lower];
      if (b.found > 0) {
        b.mean_mad_original = mad_sums[lower] / static_cast<double>(b.found);
        for (double& c : b.mean_change) c /= static_cast<double>(b.found);
      }
      report.age_bins.push_back(b);
    }
  }
  return report;
}

std::string age_bins_csv(const BiomedReport& report) {
  std::ostringstream out;
  out.precision(10);
  out << "age_from,records,found,found_fraction,mean_mad_original";
  for (const auto& n : report.accessible) out << "," << csv_escape("mean_delta_" + n);
  out << "\n";
  for (const auto& b : report.age_bins) {
    out << b.lower << "," << b.records << "," << b.found << ","
        << (b.records > 0 ? static_cast<double>(b.found) / static_cast<double>(b.records) : 0.0) << ","
        << b.mean_mad_original;
    for (double c : b.mean_change) out << "," << c;
    out << "\n";
  }
  return out.str();
}

json biomed_json(const BiomedReport& report) {
  json runs = json::array();
  for (const auto& r : report.runs) {
    runs.push_back({{"split_seed", r.split_seed},
                    {"test_auc", r.test_auc},
                    {"validation_auc", r.validation_auc},
                    {"hyper", {{"K", r.hyper.K}, {"eps_E", r.hyper.eps_E}, {"eps_CL", r.hyper.eps_CL}}},
                    {"cells", r.model.espa->cells()},
                    {"positives", r.positives},
                    {"found", r.found},
                    {"found_fraction", r.found_fraction},
                    {"records", io::batch_json(r.model, r.rows)}});
  }
  json bins = json::array();
  for (const auto& b : report.age_bins)
    bins.push_back({{"age_from", b.lower},
                    {"records", b.records},
                    {"found", b.found},
                    {"mean_mad_original", b.mean_mad_original},
                    {"mean_change", b.mean_change}});
  return {{"accessible", report.accessible},
          {"auc_mean", report.auc_mean},
          {"found_fraction_mean", report.found_fraction_mean},
          {"runs", runs},
          {"age_bins", bins}};
}

}  // namespace mapad::bench
