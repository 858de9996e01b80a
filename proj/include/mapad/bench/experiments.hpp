#pragma once

#include "mapad/bench/swiss_roll.hpp"
#include "mapad/espa/espa.hpp"
#include "mapad/io/map_io.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mapad::bench {

using io::json;

enum class Method { espa, glm };
enum class SweepKind { turns, extra_dims };

const char* to_string(Method m);
const char* to_string(SweepKind k);
Method method_from_string(const std::string& s);
SweepKind sweep_kind_from_string(const std::string& s);

/// One MAP query re-verified through the owning model's predict.
struct MapRecord {
  Index record = 0;
  Eigen::VectorXd x;
  Eigen::VectorXd x_star;
  map::MapStatus status = map::MapStatus::infeasible;
  double mad = 0.0;
  double delta = 0.0;
  double p_before = 0.0;
  double p_after = 0.0;
  /// p_before - p_after >= delta - 1e-9 (found records only).
  bool verified = false;
  std::string error;
};

struct SweepRow {
  SweepKind kind = SweepKind::turns;
  double value = 0.0;
  Method method = Method::espa;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double accuracy = 0.0;
  double auc = 0.0;
  double seconds = 0.0;
  std::string hyper;
  std::vector<MapRecord> maps;
};

struct SweepAggregate {
  double value = 0.0;
  Method method = Method::espa;
  int runs = 0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  double auc_mean = 0.0;
  double auc_std = 0.0;
};

struct ExperimentReport {
  std::vector<SweepRow> rows;
  std::vector<SweepAggregate> aggregates;
};

struct SweepOptions {
  SwissRollSpec base;
  espa::HyperGrid grid = espa::HyperGrid::defaults();
  espa::EspaHyperparams espa_base;
  double glm_l2 = 1e-4;
  /// MAP queries per run on random test points (informative coordinates accessible).
  int map_queries = 0;
  double map_delta = 0.4;
};

/// Fresh data per (value, method, seed): split 50/25/25, select on
/// validation, score on test. Failures are recorded and the sweep continues.
ExperimentReport run_sweep(SweepKind kind, const std::vector<double>& values, const std::vector<Method>& methods,
                           const std::vector<std::uint64_t>& seeds, const SweepOptions& options = {});

std::string sweep_csv(const ExperimentReport& report);
json sweep_json(const ExperimentReport& report);

/// Axis-aligned plotting window in standardised coordinates.
struct FigureBox {
  double x_min = -1.2, x_max = 1.2, y_min = -1.2, y_max = 1.2;
};

struct FigureInput {
  FigureBox box;
  int n = 101;
  int label = 1;
  /// Values of the remaining coordinates for models with D > 2; required then.
  std::optional<Eigen::VectorXd> base_point;
  const Dataset* scatter = nullptr;
  std::vector<MapRecord> segments;
};

/// Plot document {grid_x, grid_y, prob, scatter, segments}; prob[i][j] is
/// P_label at (grid_x[j], grid_y[i]).
json emit_figure_data(const io::ModelDocument& model, const FigureInput& input);

/// MAP for the selected records of a standardised dataset.
std::vector<MapRecord> map_records(const io::ModelDocument& model, const Dataset& data, std::span<const Index> rows,
                                   int label, double delta, const std::vector<Index>& accessible);

struct BiomedOptions {
  std::vector<std::string> accessible;
  double delta = 0.5;
  int label = 1;
  std::vector<std::uint64_t> split_seeds = {0};
  espa::HyperGrid grid = espa::HyperGrid::defaults();
  espa::EspaHyperparams espa_base;
  std::string age_column = "age";
  double age_bin = 10.0;
};

struct BiomedRun {
  std::uint64_t split_seed = 0;
  double test_auc = 0.0;
  double validation_auc = 0.0;
  espa::EspaHyperparams hyper;
  Index positives = 0;
  Index found = 0;
  double found_fraction = 0.0;
  std::vector<io::BatchRow> rows;
  io::ModelDocument model;
};

struct AgeBin {
  double lower = 0.0;
  Index records = 0;
  Index found = 0;
  double mean_mad_original = 0.0;
  std::vector<double> mean_change;
};

struct BiomedReport {
  std::vector<BiomedRun> runs;
  double auc_mean = 0.0;
  double found_fraction_mean = 0.0;
  std::vector<std::string> accessible;
  std::vector<AgeBin> age_bins;
};

/// Standardise on train, select eSPA on validation, report test AUC and
/// run map_espa on every test record of class `label`.
BiomedReport run_biomedical(const Dataset& raw, const BiomedOptions& options);

std::string age_bins_csv(const BiomedReport& report);
json biomed_json(const BiomedReport& report);

}  // namespace mapad::bench
