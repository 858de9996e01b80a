#pragma once

#include "mapad/core/dataset.hpp"
#include "mapad/core/standardizer.hpp"
#include "mapad/error.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mapad::espa {

struct EspaHyperparams {
  Index K = 8;
  double eps_E = 1e-2;
  double eps_CL = 1.0;
  int max_iters = 200;
  double tol = 1e-10;
  int n_restarts = 10;
  std::uint64_t seed = 0;
  /// Lower bound on every Lambda entry, keeps log(Lambda) finite.
  double lambda_floor = 1e-8;

  void validate() const;
};

/// Trained classifier: weights W (simplex, length D), cell centres S (D x K)
/// and the column-stochastic label table Lambda (M x K).
struct EspaModel {
  Eigen::VectorXd W;
  Eigen::MatrixXd S;
  Eigen::MatrixXd Lambda;
  EspaHyperparams hyper;
  std::optional<Standardizer> standardizer;
  std::vector<std::string> column_names;
  std::vector<ColumnKind> column_kinds;

  Index dim() const { return S.rows(); }
  Index cells() const { return S.cols(); }
  Index classes() const { return Lambda.rows(); }

  void validate() const;
};

/// Transient state of one training run. `assignment(t)` is the cell of
/// record t, i.e. the row holding the 1 in column t of the one-hot Gamma.
struct TrainState {
  Eigen::VectorXi assignment;
  /// Loss after initialisation, then after every full sweep.
  std::vector<double> loss_history;
  /// Loss after every individual block update (gamma, S, Lambda, W).
  std::vector<double> block_losses;
  int iterations = 0;
  int restart = 0;
  Index pruned_cells = 0;

  Eigen::MatrixXi gamma_matrix(Index K) const;
};

struct LossTerms {
  double discretization = 0.0;
  double entropy = 0.0;
  double classification = 0.0;

  double total(double eps_E, double eps_CL) const {
    return discretization + eps_E * entropy + eps_CL * classification;
  }
};

/// Unscaled terms of the eSPA functional: (1/T) sum W_d (X - S Gamma)^2,
/// sum W log W, and -(1/T) sum Pi log Lambda. Lambda entries are clamped to
/// `floor` before the log. Throws numeric error naming a NaN term.
LossTerms espa_loss_terms(const Eigen::Ref<const Eigen::VectorXd>& W,
                          const Eigen::Ref<const Eigen::MatrixXd>& S,
                          const Eigen::Ref<const Eigen::MatrixXd>& Lambda,
                          const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const Eigen::Ref<const Eigen::VectorXi>& labels,
                          const Eigen::Ref<const Eigen::VectorXi>& assignment, double floor);

double espa_loss(const Eigen::Ref<const Eigen::VectorXd>& W, const Eigen::Ref<const Eigen::MatrixXd>& S,
                 const Eigen::Ref<const Eigen::MatrixXd>& Lambda, double eps_E, double eps_CL,
                 const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXi>& labels,
                 const Eigen::Ref<const Eigen::VectorXi>& assignment, double floor = 1e-8);

double espa_loss(const EspaModel& model, const Eigen::Ref<const Eigen::VectorXi>& assignment,
                 const Dataset& data);

/// Gamma block: each record goes to the cell minimising
/// sum_d W_d (x_d - S_dk)^2 - eps_CL * log Lambda(label, k); ties to lowest k.
Eigen::VectorXi update_gamma(const Eigen::Ref<const Eigen::VectorXd>& W,
                             const Eigen::Ref<const Eigen::MatrixXd>& S,
                             const Eigen::Ref<const Eigen::MatrixXd>& Lambda,
                             const Eigen::Ref<const Eigen::MatrixXd>& X,
                             const Eigen::Ref<const Eigen::VectorXi>& labels, double eps_CL,
                             double floor = 1e-8);

/// S block: cell means. An empty cell is re-seeded at the record with the
/// largest W-weighted distance to its own (updated) centre, one record per
/// empty cell. `S_prev` fixes K; W only matters for re-seeding.
Eigen::MatrixXd update_s(const Eigen::Ref<const Eigen::VectorXi>& assignment,
                         const Eigen::Ref<const Eigen::MatrixXd>& X,
                         const Eigen::Ref<const Eigen::VectorXd>& W,
                         const Eigen::Ref<const Eigen::MatrixXd>& S_prev);

/// Lambda block: per cell, the maximiser of sum_m n_m log Lambda_m over the
/// simplex with Lambda_m >= floor (frequencies when no clamp is active).
/// Empty cells get a uniform column.
Eigen::MatrixXd update_lambda(const Eigen::Ref<const Eigen::VectorXi>& assignment,
                              const Eigen::Ref<const Eigen::VectorXi>& labels, Index K, Index M,
                              double floor = 1e-8);

/// Floor-constrained maximiser of sum_m counts_m log p_m on the simplex.
Eigen::VectorXd floored_frequencies(const Eigen::Ref<const Eigen::VectorXd>& counts, double floor);

/// b_d = (1/T) sum_t (X_dt - S_{d, k(t)})^2
Eigen::VectorXd feature_discrepancy(const Eigen::Ref<const Eigen::MatrixXd>& S,
                                    const Eigen::Ref<const Eigen::VectorXi>& assignment,
                                    const Eigen::Ref<const Eigen::MatrixXd>& X);

/// W_d proportional to exp(-b_d / eps_E), via max-shifted exponentials.
Eigen::VectorXd entropic_weights(const Eigen::Ref<const Eigen::VectorXd>& b, double eps_E);

Eigen::VectorXd update_w(const Eigen::Ref<const Eigen::MatrixXd>& S,
                         const Eigen::Ref<const Eigen::VectorXi>& assignment,
                         const Eigen::Ref<const Eigen::MatrixXd>& X, double eps_E);

struct TrainResult {
  EspaModel model;
  TrainState state;
};

/// Block coordinate descent (gamma -> S -> Lambda -> W) from n_restarts
/// seeded initialisations; keeps the run with the lowest final loss.
/// Cells still empty at convergence are removed from the model.
TrainResult train(const Dataset& data, const EspaHyperparams& hyper);

/// Nearest centre in the W-weighted metric, ties to the lowest index.
template <typename Derived>
Index assign_cell(const EspaModel& model, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != model.dim())
    throw Error(ErrorCode::dimension, "assign_cell: expected " + std::to_string(model.dim()) +
                                          " features, got " + std::to_string(x.size()));
  Index best = 0;
  double best_cost = 0.0;
  for (Index k = 0; k < model.cells(); ++k) {
    const double cost =
        (model.W.array() * (x.template cast<double>() - model.S.col(k)).array().square()).sum();
    if (k == 0 || cost < best_cost) {
      best = k;
      best_cost = cost;
    }
  }
  return best;
}

template <typename Derived>
Eigen::VectorXd predict_proba(const EspaModel& model, const Eigen::MatrixBase<Derived>& x) {
  return model.Lambda.col(assign_cell(model, x));
}

/// Column t holds predict_proba of record t.
Eigen::MatrixXd predict_proba_batch(const EspaModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X);
Eigen::VectorXi predict_labels(const EspaModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X);

struct HyperGrid {
  std::vector<Index> K;
  std::vector<double> eps_E;
  std::vector<double> eps_CL;

  static HyperGrid defaults();
  std::size_t size() const { return K.size() * eps_E.size() * eps_CL.size(); }
};

struct GridEvaluation {
  Index K;
  double eps_E;
  double eps_CL;
  double validation_auc;
  double final_loss;
};

struct Selection {
  EspaHyperparams hyper;
  double validation_auc = 0.0;
  EspaModel model;
  TrainState state;
  std::vector<GridEvaluation> evaluated;
};

/// Exhaustive grid search on validation AUC; ties go to smaller K, then to
/// larger eps_E, then to the earlier eps_CL in the grid. `base` supplies the
/// non-grid settings (restarts, seed, iteration limits).
Selection select_hyperparams(const Dataset& train_set, const Dataset& valid_set, const HyperGrid& grid,
                             const EspaHyperparams& base = {});

}  // namespace mapad::espa
