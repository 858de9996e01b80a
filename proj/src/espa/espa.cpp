#include "mapad/espa/espa.hpp"

#include "mapad/core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace mapad::espa {

void EspaHyperparams::validate() const {
  if (K < 1) throw Error(ErrorCode::invalid_argument, "K must be at least 1");
  if (!(eps_E > 0.0)) throw Error(ErrorCode::invalid_argument, "eps_E must be positive");
  if (!(eps_CL > 0.0)) throw Error(ErrorCode::invalid_argument, "eps_CL must be positive");
  if (max_iters < 1) throw Error(ErrorCode::invalid_argument, "max_iters must be positive");
  if (!(tol >= 0.0)) throw Error(ErrorCode::invalid_argument, "tol must be non-negative");
  if (n_restarts < 1) throw Error(ErrorCode::invalid_argument, "n_restarts must be positive");
  if (!(lambda_floor > 0.0 && lambda_floor < 1.0))
    throw Error(ErrorCode::invalid_argument, "lambda_floor must lie in (0, 1)");
}

void EspaModel::validate() const {
  if (W.size() != S.rows() || Lambda.cols() != S.cols() || S.cols() < 1 || Lambda.rows() < 1)
    throw Error(ErrorCode::dimension, "eSPA model shapes are inconsistent");
  if ((W.array() < 0.0).any() || std::abs(W.sum() - 1.0) > 1e-10)
    throw Error(ErrorCode::numeric, "W is not on the simplex");
  for (Index k = 0; k < Lambda.cols(); ++k)
    if ((Lambda.col(k).array() < 0.0).any() || std::abs(Lambda.col(k).sum() - 1.0) > 1e-10)
      throw Error(ErrorCode::numeric, "Lambda column " + std::to_string(k) + " is not stochastic");
  if (!S.allFinite()) throw Error(ErrorCode::numeric, "S has non-finite entries");
}

Eigen::MatrixXi TrainState::gamma_matrix(Index K) const {
  Eigen::MatrixXi gamma = Eigen::MatrixXi::Zero(K, assignment.size());
  for (Index t = 0; t < assignment.size(); ++t) gamma(assignment(t), t) = 1;
  return gamma;
}

LossTerms espa_loss_terms(const Eigen::Ref<const Eigen::VectorXd>& W,
                          const Eigen::Ref<const Eigen::MatrixXd>& S,
                          const Eigen::Ref<const Eigen::MatrixXd>& Lambda,
                          const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const Eigen::Ref<const Eigen::VectorXi>& labels,
                          const Eigen::Ref<const Eigen::VectorXi>& assignment, double floor) {
  const Index T = X.cols();
  if (W.size() != X.rows() || S.rows() != X.rows() || labels.size() != T || assignment.size() != T ||
      Lambda.cols() != S.cols())
    throw Error(ErrorCode::dimension, "espa_loss: inconsistent dimensions");
  LossTerms terms;
  for (Index t = 0; t < T; ++t) {
    const Index k = assignment(t);
    terms.discretization += (W.array() * (X.col(t) - S.col(k)).array().square()).sum();
    terms.classification -= std::log(std::max(Lambda(labels(t), k), floor));
  }
  terms.discretization /= static_cast<double>(T);
  terms.classification /= static_cast<double>(T);
  for (Index d = 0; d < W.size(); ++d)
    if (W(d) > 0.0) terms.entropy += W(d) * std::log(W(d));

  if (std::isnan(terms.discretization)) throw Error(ErrorCode::numeric, "espa_loss: discretization term is NaN");
  if (std::isnan(terms.entropy)) throw Error(ErrorCode::numeric, "espa_loss: entropy term is NaN");
  if (std::isnan(terms.classification)) throw Error(ErrorCode::numeric, "espa_loss: classification term is NaN");
  return terms;
}

double espa_loss(const Eigen::Ref<const Eigen::VectorXd>& W, const Eigen::Ref<const Eigen::MatrixXd>& S,
                 const Eigen::Ref<const Eigen::MatrixXd>& Lambda, double eps_E, double eps_CL,
                 const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXi>& labels,
                 const Eigen::Ref<const Eigen::VectorXi>& assignment, double floor) {
  return espa_loss_terms(W, S, Lambda, X, labels, assignment, floor).total(eps_E, eps_CL);
}

double espa_loss(const EspaModel& model, const Eigen::Ref<const Eigen::VectorXi>& assignment,
                 const Dataset& data) {
  return espa_loss(model.W, model.S, model.Lambda, model.hyper.eps_E, model.hyper.eps_CL, data.features,
                   data.labels, assignment, model.hyper.lambda_floor);
}

Eigen::VectorXi update_gamma(const Eigen::Ref<const Eigen::VectorXd>& W,
                             const Eigen::Ref<const Eigen::MatrixXd>& S,
                             const Eigen::Ref<const Eigen::MatrixXd>& Lambda,
                             const Eigen::Ref<const Eigen::MatrixXd>& X,
                             const Eigen::Ref<const Eigen::VectorXi>& labels, double eps_CL, double floor) {
  const Index K = S.cols();
  const Index T = X.cols();
  const Eigen::MatrixXd penalty = -eps_CL * Lambda.cwiseMax(floor).array().log().matrix();
  Eigen::VectorXi assignment(T);
  for (Index t = 0; t < T; ++t) {
    Index best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < K; ++k) {
      const double cost =
          (W.array() * (X.col(t) - S.col(k)).array().square()).sum() + penalty(labels(t), k);
      if (cost < best_cost) {
        best_cost = cost;
        best = k;
      }
    }
    assignment(t) = static_cast<int>(best);
  }
  return assignment;
}

Eigen::MatrixXd update_s(const Eigen::Ref<const Eigen::VectorXi>& assignment,
                         const Eigen::Ref<const Eigen::MatrixXd>& X,
                         const Eigen::Ref<const Eigen::VectorXd>& W,
                         const Eigen::Ref<const Eigen::MatrixXd>& S_prev) {
  const Index K = S_prev.cols();
  const Index T = X.cols();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(X.rows(), K);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
  for (Index t = 0; t < T; ++t) {
    sums.col(assignment(t)) += X.col(t);
    counts(assignment(t)) += 1.0;
  }
  Eigen::MatrixXd S = S_prev;
  std::vector<Index> empty;
  for (Index k = 0; k < K; ++k) {
    if (counts(k) > 0.0)
      S.col(k) = sums.col(k) / counts(k);
    else
      empty.push_back(k);
  }
  if (empty.empty() || T == 0) return S;

  std::vector<double> spread(static_cast<std::size_t>(T));
  for (Index t = 0; t < T; ++t)
    spread[static_cast<std::size_t>(t)] =
        (W.array() * (X.col(t) - S.col(assignment(t))).array().square()).sum();
  std::vector<bool> taken(static_cast<std::size_t>(T), false);
  for (Index k : empty) {
    Index pick = -1;
    for (Index t = 0; t < T; ++t) {
      if (taken[static_cast<std::size_t>(t)]) continue;
      if (pick < 0 || spread[static_cast<std::size_t>(t)] > spread[static_cast<std::size_t>(pick)]) pick = t;
    }
    if (pick < 0) break;
    taken[static_cast<std::size_t>(pick)] = true;
    S.col(k) = X.col(pick);
  }
  return S;
}

Eigen::VectorXd floored_frequencies(const Eigen::Ref<const Eigen::VectorXd>& counts, double floor) {
  const Index M = counts.size();
  const double total = counts.sum();
  if (!(total > 0.0)) return Eigen::VectorXd::Constant(M, 1.0 / static_cast<double>(M));
  // Maximiser has the form p_m = max(floor, counts_m / tau); grow the clamped
  // set until the free entries all stay above the floor.
  std::vector<bool> clamped(static_cast<std::size_t>(M), false);
  Eigen::VectorXd p(M);
  for (Index pass = 0; pass <= M; ++pass) {
    double free_mass = 0.0;
    Index n_clamped = 0;
    for (Index m = 0; m < M; ++m) {
      if (clamped[static_cast<std::size_t>(m)])
        ++n_clamped;
      else
        free_mass += counts(m);
    }
    const double budget = 1.0 - floor * static_cast<double>(n_clamped);
    bool changed = false;
    for (Index m = 0; m < M; ++m) {
      if (clamped[static_cast<std::size_t>(m)]) {
        p(m) = floor;
        continue;
      }
      p(m) = counts(m) / free_mass * budget;
      if (p(m) < floor) {
        clamped[static_cast<std::size_t>(m)] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return p;
}

Eigen::MatrixXd update_lambda(const Eigen::Ref<const Eigen::VectorXi>& assignment,
                              const Eigen::Ref<const Eigen::VectorXi>& labels, Index K, Index M,
                              double floor) {
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(M, K);
  for (Index t = 0; t < assignment.size(); ++t) counts(labels(t), assignment(t)) += 1.0;
  Eigen::MatrixXd Lambda(M, K);
  for (Index k = 0; k < K; ++k) Lambda.col(k) = floored_frequencies(counts.col(k), floor);
  return Lambda;
}

Eigen::VectorXd feature_discrepancy(const Eigen::Ref<const Eigen::MatrixXd>& S,
                                    const Eigen::Ref<const Eigen::VectorXi>& assignment,
                                    const Eigen::Ref<const Eigen::MatrixXd>& X) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(X.rows());
  for (Index t = 0; t < X.cols(); ++t) b += (X.col(t) - S.col(assignment(t))).array().square().matrix();
  return b / static_cast<double>(X.cols());
}

Eigen::VectorXd entropic_weights(const Eigen::Ref<const Eigen::VectorXd>& b, double eps_E) {
  if (!(eps_E > 0.0)) throw Error(ErrorCode::invalid_argument, "eps_E must be positive");
  const Eigen::ArrayXd z = -b.array() / eps_E;
  const Eigen::ArrayXd e = (z - z.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

Eigen::VectorXd update_w(const Eigen::Ref<const Eigen::MatrixXd>& S,
                         const Eigen::Ref<const Eigen::VectorXi>& assignment,
                         const Eigen::Ref<const Eigen::MatrixXd>& X, double eps_E) {
  return entropic_weights(feature_discrepancy(S, assignment, X), eps_E);
}

namespace {

struct Run {
  EspaModel model;
  TrainState state;
};

Run train_once(const Dataset& data, const EspaHyperparams& hyper, int restart) {
  const Index D = data.dim();
  const Index T = data.size();
  const Index K = hyper.K;
  const Index M = data.num_classes;
  const auto& X = data.features;
  const auto& y = data.labels;

  std::seed_seq seq{static_cast<std::uint32_t>(hyper.seed & 0xffffffffu),
                    static_cast<std::uint32_t>(hyper.seed >> 32), static_cast<std::uint32_t>(restart)};
  std::mt19937_64 rng(seq);
  std::vector<Index> pool(static_cast<std::size_t>(T));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < K; ++i) {
    std::uniform_int_distribution<Index> pick(i, T - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }

  Eigen::VectorXd W = Eigen::VectorXd::Constant(D, 1.0 / static_cast<double>(D));
  Eigen::MatrixXd S(D, K);
  for (Index k = 0; k < K; ++k) S.col(k) = X.col(pool[static_cast<std::size_t>(k)]);
  const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(M, K, 1.0 / static_cast<double>(M));
  Eigen::VectorXi assignment = update_gamma(W, S, flat, X, y, hyper.eps_CL);
  Eigen::MatrixXd Lambda = update_lambda(assignment, y, K, M, hyper.lambda_floor);

  auto loss = [&] {
    return espa_loss(W, S, Lambda, hyper.eps_E, hyper.eps_CL, X, y, assignment, hyper.lambda_floor);
  };

  TrainState state;
  state.restart = restart;
  state.loss_history.push_back(loss());
  state.block_losses.push_back(state.loss_history.back());
  for (int it = 0; it < hyper.max_iters; ++it) {
    assignment = update_gamma(W, S, Lambda, X, y, hyper.eps_CL, hyper.lambda_floor);
    state.block_losses.push_back(loss());
    S = update_s(assignment, X, W, S);
    state.block_losses.push_back(loss());
    Lambda = update_lambda(assignment, y, K, M, hyper.lambda_floor);
    state.block_losses.push_back(loss());
    W = update_w(S, assignment, X, hyper.eps_E);
    state.block_losses.push_back(loss());

    const double previous = state.loss_history.back();
    state.loss_history.push_back(state.block_losses.back());
    state.iterations = it + 1;
    if (previous - state.loss_history.back() < hyper.tol) break;
  }

  Run run;
  run.model.W = W;
  run.model.S = S;
  run.model.Lambda = Lambda;
  run.model.hyper = hyper;
  run.model.column_names = data.column_names;
  run.model.column_kinds = data.column_kinds;
  run.state = std::move(state);
  run.state.assignment = assignment;
  return run;
}

void prune_empty_cells(Run& run) {
  const Index K = run.model.cells();
  std::vector<Index> counts(static_cast<std::size_t>(K), 0);
  for (Index t = 0; t < run.state.assignment.size(); ++t) ++counts[static_cast<std::size_t>(run.state.assignment(t))];
  std::vector<int> remap(static_cast<std::size_t>(K), -1);
  int kept = 0;
  for (Index k = 0; k < K; ++k)
    if (counts[static_cast<std::size_t>(k)] > 0) remap[static_cast<std::size_t>(k)] = kept++;
  if (kept == K) return;
  Eigen::MatrixXd S(run.model.dim(), kept);
  Eigen::MatrixXd Lambda(run.model.classes(), kept);
  for (Index k = 0; k < K; ++k) {
    const int j = remap[static_cast<std::size_t>(k)];
    if (j < 0) continue;
    S.col(j) = run.model.S.col(k);
    Lambda.col(j) = run.model.Lambda.col(k);
  }
  for (Index t = 0; t < run.state.assignment.size(); ++t)
    run.state.assignment(t) = remap[static_cast<std::size_t>(run.state.assignment(t))];
  run.model.S = std::move(S);
  run.model.Lambda = std::move(Lambda);
  run.state.pruned_cells = K - kept;
}

}  // namespace

TrainResult train(const Dataset& data, const EspaHyperparams& hyper) {
  hyper.validate();
  if (data.size() < hyper.K)
    throw Error(ErrorCode::infeasible_k, "train: T = " + std::to_string(data.size()) +
                                             " records cannot fill K = " + std::to_string(hyper.K) + " cells");
  if (data.num_classes < 1) throw Error(ErrorCode::invalid_argument, "train: no classes");

  std::optional<Run> best;
  for (int r = 0; r < hyper.n_restarts; ++r) {
    Run run = train_once(data, hyper, r);
    if (!best || run.state.loss_history.back() < best->state.loss_history.back()) best = std::move(run);
  }
  prune_empty_cells(*best);
  return {std::move(best->model), std::move(best->state)};
}

Eigen::MatrixXd predict_proba_batch(const EspaModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X) {
  Eigen::MatrixXd P(model.classes(), X.cols());
  for (Index t = 0; t < X.cols(); ++t) P.col(t) = predict_proba(model, X.col(t));
  return P;
}

Eigen::VectorXi predict_labels(const EspaModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X) {
  Eigen::VectorXi out(X.cols());
  for (Index t = 0; t < X.cols(); ++t) {
    Index m;
    model.Lambda.col(assign_cell(model, X.col(t))).maxCoeff(&m);
    out(t) = static_cast<int>(m);
  }
  return out;
}

HyperGrid HyperGrid::defaults() {
  return {{4, 8, 16, 32, 64}, {1e-3, 1e-2, 1e-1, 1.0}, {1e-2, 1e-1, 1.0, 10.0}};
}

Selection select_hyperparams(const Dataset& train_set, const Dataset& valid_set, const HyperGrid& grid,
                             const EspaHyperparams& base) {
  if (grid.size() == 0) throw Error(ErrorCode::invalid_argument, "select_hyperparams: empty grid");
  std::optional<Selection> best;
  std::vector<GridEvaluation> evaluated;
  for (Index K : grid.K) {
    if (K > train_set.size()) continue;
    for (double eps_E : grid.eps_E) {
      for (double eps_CL : grid.eps_CL) {
        EspaHyperparams h = base;
        h.K = K;
        h.eps_E = eps_E;
        h.eps_CL = eps_CL;
        auto [model, state] = train(train_set, h);
        const double score = multiclass_auc(predict_proba_batch(model, valid_set.features), valid_set.labels);
        evaluated.push_back({K, eps_E, eps_CL, score, state.loss_history.back()});
        const bool better = !best || score > best->validation_auc ||
                            (score == best->validation_auc &&
                             (K < best->hyper.K || (K == best->hyper.K && eps_E > best->hyper.eps_E)));
        if (better) best = Selection{h, score, std::move(model), std::move(state), {}};
      }
    }
  }
  if (!best) throw Error(ErrorCode::infeasible_k, "select_hyperparams: every K exceeds the training size");
  best->evaluated = std::move(evaluated);
  return std::move(*best);
}

}  // namespace mapad::espa
