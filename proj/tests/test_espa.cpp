#include "mapad/bench/swiss_roll.hpp"
#include "mapad/core/metrics.hpp"
#include "mapad/core/split.hpp"
#include "mapad/espa/espa.hpp"
#include "support.hpp"

#include <doctest.h>

#include <chrono>
#include <random>

using namespace mapad;
using namespace mapad::espa;

namespace {

double naive_loss(const Eigen::VectorXd& W, const Eigen::MatrixXd& S, const Eigen::MatrixXd& Lambda, double eps_E,
                  double eps_CL, const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const Eigen::VectorXi& a) {
  const Index T = X.cols();
  double disc = 0.0, ent = 0.0, cl = 0.0;
  for (Index d = 0; d < X.rows(); ++d)
    for (Index t = 0; t < T; ++t) disc += W(d) * std::pow(X(d, t) - S(d, a(t)), 2);
  for (Index d = 0; d < W.size(); ++d) ent += W(d) * std::log(W(d));
  for (Index t = 0; t < T; ++t)
    for (Index m = 0; m < Lambda.rows(); ++m)
      for (Index k = 0; k < S.cols(); ++k)
        if (y(t) == m && a(t) == k) cl += std::log(std::max(Lambda(m, k), 1e-8));
  return disc / T + eps_E * ent - eps_CL * cl / T;
}

EspaModel two_cell_model() {
  EspaModel m;
  m.W = Eigen::Vector2d(0.5, 0.5);
  m.S.resize(2, 2);
  m.S << 0, 1, 0, 0;
  m.Lambda.resize(2, 2);
  m.Lambda << 0.0, 1.0, 1.0, 0.0;
  return m;
}

}  // namespace

TEST_CASE("espa_loss: trivial instance and independent re-evaluation") {
  Eigen::MatrixXd X(2, 1);
  X << 0.3, -0.7;
  Eigen::VectorXi y(1), a(1);
  y << 0;
  a << 0;
  Eigen::MatrixXd Lambda(2, 1);
  Lambda << 1.0, 0.0;
  const double eps_E = 0.25;
  CHECK(espa_loss(Eigen::Vector2d(0.5, 0.5), X, Lambda, eps_E, 3.0, X, y, a) ==
        doctest::Approx(eps_E * std::log(0.5)).epsilon(1e-14));

  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd Xr(3, 5), S(3, 2);
    for (Index i = 0; i < Xr.size(); ++i) Xr.data()[i] = n(rng);
    for (Index i = 0; i < S.size(); ++i) S.data()[i] = n(rng);
    Eigen::VectorXi yr(5), ar(5);
    yr << 0, 1, 1, 0, 1;
    ar << 0, 0, 1, 1, 1;
    const Eigen::VectorXd W = testing::random_simplex(3, rng);
    Eigen::MatrixXd L(2, 2);
    L.col(0) = testing::random_simplex(2, rng);
    L.col(1) = testing::random_simplex(2, rng);
    const double got = espa_loss(W, S, L, 0.1, 2.0, Xr, yr, ar);
    CHECK(std::abs(got - naive_loss(W, S, L, 0.1, 2.0, Xr, yr, ar)) <= 1e-12);
  }
}

TEST_CASE("espa_loss: moving S off the data increases the discretisation term") {
  Eigen::MatrixXd X(2, 3);
  X << 0, 1, 2, 0, 1, 2;
  Eigen::VectorXi y(3), a(3);
  y << 0, 1, 0;
  a << 0, 0, 0;
  Eigen::MatrixXd S = X.rowwise().mean();
  Eigen::MatrixXd L(2, 1);
  L << 0.5, 0.5;
  const Eigen::VectorXd W = Eigen::Vector2d(0.5, 0.5);
  const double base = espa_loss_terms(W, S, L, X, y, a, 1e-8).discretization;
  S(0, 0) += 0.1;
  CHECK(espa_loss_terms(W, S, L, X, y, a, 1e-8).discretization > base);
}

TEST_CASE("update_gamma") {
  Eigen::MatrixXd S(2, 2);
  S << 0, 1, 0, 1;
  Eigen::MatrixXd L = Eigen::MatrixXd::Constant(2, 2, 0.5);
  Eigen::MatrixXd X(2, 2);
  X << 0.1, 0.5, 0.1, 0.5;
  Eigen::VectorXi y(2);
  y << 0, 1;
  const Eigen::VectorXi a = update_gamma(Eigen::Vector2d(0.5, 0.5), S, L, X, y, 1e-12);
  CHECK(a(0) == 0);
  CHECK(a(1) == 0);

  // D=1, K=2, T=3 against exhaustive cost evaluation.
  Eigen::MatrixXd S1(1, 2), X1(1, 3), L1(2, 2);
  S1 << -1.0, 1.0;
  X1 << -0.2, 0.1, 0.9;
  L1 << 0.9, 0.2, 0.1, 0.8;
  Eigen::VectorXi y1(3);
  y1 << 1, 0, 1;
  const Eigen::VectorXd W1 = Eigen::VectorXd::Ones(1);
  const double eps_CL = 0.3;
  const Eigen::VectorXi got = update_gamma(W1, S1, L1, X1, y1, eps_CL);
  for (Index t = 0; t < 3; ++t) {
    double c[2];
    for (Index k = 0; k < 2; ++k) c[k] = std::pow(X1(0, t) - S1(0, k), 2) - eps_CL * std::log(L1(y1(t), k));
    CHECK(got(t) == (c[1] < c[0] ? 1 : 0));
  }
}

TEST_CASE("update_s: means and zero gradient") {
  Eigen::MatrixXd X(1, 3);
  X << 0.0, 2.0, 5.0;
  Eigen::VectorXi a(3);
  a << 0, 0, 1;
  const Eigen::MatrixXd S = update_s(a, X, Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(1, 2));
  CHECK(S(0, 0) == 1.0);
  CHECK(S(0, 1) == 5.0);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd Xr(3, 12);
  for (Index i = 0; i < Xr.size(); ++i) Xr.data()[i] = n(rng);
  Eigen::VectorXi ar(12);
  for (Index t = 0; t < 12; ++t) ar(t) = static_cast<int>(t % 3);
  const Eigen::VectorXd W = testing::random_simplex(3, rng);
  const Eigen::MatrixXd Sr = update_s(ar, Xr, W, Eigen::MatrixXd::Zero(3, 3));
  const Eigen::VectorXi y = Eigen::VectorXi::Zero(12);
  const Eigen::MatrixXd L = Eigen::MatrixXd::Constant(1, 3, 1.0);
  const double h = 1e-6;
  for (Index i = 0; i < Sr.size(); ++i) {
    Eigen::MatrixXd P = Sr, Q = Sr;
    P.data()[i] += h;
    Q.data()[i] -= h;
    const double g = (espa_loss_terms(W, P, L, Xr, y, ar, 1e-8).discretization -
                      espa_loss_terms(W, Q, L, Xr, y, ar, 1e-8).discretization) /
                     (2 * h);
    CHECK(std::abs(g) <= 1e-8);
  }
}

TEST_CASE("update_s re-seeds an empty cell at the worst-fit record") {
  Eigen::MatrixXd X(1, 4);
  X << 0.0, 0.1, 0.2, 9.0;
  Eigen::VectorXi a(4);
  a << 0, 0, 0, 0;
  const Eigen::MatrixXd S = update_s(a, X, Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(1, 2));
  CHECK(S(0, 1) == 9.0);
}

TEST_CASE("update_lambda: frequencies, floor and block optimality") {
  Eigen::VectorXi a(3), y(3);
  a << 0, 0, 0;
  y << 0, 0, 1;
  const Eigen::MatrixXd L = update_lambda(a, y, 2, 2, 1e-8);
  CHECK(L(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(L(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(L(0, 1) == 0.5);

  Eigen::VectorXi pure(2);
  pure << 1, 1;
  const Eigen::MatrixXd P = update_lambda(Eigen::VectorXi::Zero(2), pure, 1, 3, 1e-8);
  CHECK(P(0, 0) == 1e-8);
  CHECK(P(2, 0) == 1e-8);
  CHECK(P(1, 0) == doctest::Approx(1.0 - 2e-8).epsilon(1e-15));
  CHECK(std::abs(P.sum() - 1.0) <= 1e-15);
}

TEST_CASE("floored_frequencies maximises the floored log-likelihood") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> c(0, 6);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::VectorXd counts(4);
    for (Index m = 0; m < 4; ++m) counts(m) = trial % 2 ? c(rng) : (m == 0 ? 5 : 0);
    if (counts.sum() == 0) counts(0) = 1;
    const double floor = 1e-3;
    const Eigen::VectorXd p = floored_frequencies(counts, floor);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    CHECK(p.minCoeff() >= floor - 1e-15);
    const double best = (counts.array() * p.array().log()).sum();
    for (int i = 0; i < 100; ++i) {
      const Eigen::VectorXd q = testing::random_simplex(4, rng, floor);
      CHECK((counts.array() * q.array().log()).sum() <= best + 1e-12);
    }
  }
}

TEST_CASE("update_w") {
  const Eigen::VectorXd W = entropic_weights(Eigen::Vector2d(0.7, 0.7), 0.1);
  CHECK(W(0) == doctest::Approx(0.5));
  CHECK(W(1) == doctest::Approx(0.5));
  const Eigen::VectorXd U = entropic_weights(Eigen::Vector3d(0.1, 5.0, 2.0), 1e6);
  CHECK((U.array() - 1.0 / 3.0).abs().maxCoeff() <= 1e-4);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd b(6);
    for (Index i = 0; i < 6; ++i) b(i) = u(rng);
    const Eigen::VectorXd w = entropic_weights(b, 1.0);
    CHECK(std::abs(w.sum() - 1.0) <= 1e-12);
    const Eigen::ArrayXd station = b.array() + (w.array().log() + 1.0);
    CHECK(station.maxCoeff() - station.minCoeff() <= 1e-8);
  }
  const Eigen::VectorXd extreme = entropic_weights(Eigen::Vector2d(0.0, 1e5), 1e-3);
  CHECK(extreme.allFinite());
  CHECK(extreme(0) == 1.0);
}

TEST_CASE("train: separable blobs, single cell, monotone loss") {
  const Dataset d = testing::blobs(80, 2, 6.0, 1);
  EspaHyperparams h;
  h.K = 2;
  h.eps_E = 1.0;
  h.eps_CL = 1.0;
  const auto r = train(d, h);
  CHECK(accuracy(predict_labels(r.model, d.features), d.labels) == 1.0);
  for (std::size_t i = 1; i < r.state.loss_history.size(); ++i)
    CHECK(r.state.loss_history[i] <= r.state.loss_history[i - 1] + 1e-10);
  for (std::size_t i = 1; i < r.state.block_losses.size(); ++i)
    CHECK(r.state.block_losses[i] <= r.state.block_losses[i - 1] + 1e-10);

  h.K = 1;
  const auto one = train(d, h);
  CHECK(one.model.Lambda(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(one.model.Lambda(1, 0) == doctest::Approx(0.5).epsilon(1e-12));

  h.K = 100;
  CHECK_THROWS_AS(train(d, h), Error);
}

TEST_CASE("trained models satisfy the model invariants") {
  const Dataset d = testing::blobs(60, 3, 1.0, 9);
  for (Index K : {2, 4, 7}) {
    EspaHyperparams h;
    h.K = K;
    h.seed = static_cast<std::uint64_t>(K);
    const auto r = train(d, h);
    CHECK_NOTHROW(r.model.validate());
    std::vector<int> occupied(static_cast<std::size_t>(r.model.cells()), 0);
    for (Index t = 0; t < d.size(); ++t) occupied[static_cast<std::size_t>(r.state.assignment(t))] = 1;
    for (int o : occupied) CHECK(o == 1);
  }
}

TEST_CASE("block updates are optimal in their block") {
  std::mt19937_64 rng(21);
  for (int run = 0; run < 5; ++run) {
    const Dataset d = testing::blobs(24, 3, 1.0, 100 + static_cast<std::uint64_t>(run));
    EspaHyperparams h;
    h.K = 3;
    h.eps_E = 0.05 * (run + 1);
    h.eps_CL = 0.5;
    h.n_restarts = 1;
    h.max_iters = 3;
    const auto r = train(d, h);
    const auto check = testing::block_optimality(d, h, r.model.W, r.model.S, r.model.Lambda, 100, rng);
    CHECK(check.gamma == 0);
    CHECK(check.s == 0);
    CHECK(check.lambda == 0);
    CHECK(check.w == 0);
  }
}

TEST_CASE("predict_proba and assign_cell") {
  const EspaModel m = two_cell_model();
  CHECK(predict_proba(m, m.S.col(1)) == m.Lambda.col(1));
  CHECK(assign_cell(m, Eigen::Vector2d(0.5, 0.3)) == 0);
  CHECK(predict_proba(m, Eigen::Vector2d(0.5, -2.0)) == m.Lambda.col(0));
  CHECK_THROWS_AS(assign_cell(m, Eigen::Vector3d(0, 0, 0)), Error);

  const Dataset d = testing::blobs(60, 2, 1.0, 5);
  EspaHyperparams h;
  h.K = 6;
  const auto r = train(d, h);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d x(u(rng), u(rng));
    Index best = 0;
    double bc = 1e300;
    for (Index k = 0; k < r.model.cells(); ++k) {
      const double c = (r.model.W.array() * (x - r.model.S.col(k)).array().square()).sum();
      if (c < bc) {
        bc = c;
        best = k;
      }
    }
    CHECK(assign_cell(r.model, x) == best);
    CHECK(predict_proba(r.model, x) == r.model.Lambda.col(best));
  }
}

TEST_CASE("prediction is constant on segments toward the own centre") {
  const Dataset d = testing::blobs(60, 2, 1.0, 6);
  EspaHyperparams h;
  h.K = 8;
  const auto r = train(d, h);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d x(u(rng), u(rng));
    const Index k = assign_cell(r.model, x);
    const Eigen::VectorXd c = r.model.S.col(k);
    for (int j = 1; j <= 10; ++j) {
      const double s = j / 11.0;
      CHECK(predict_proba(r.model, ((1 - s) * x + s * c).eval()) == predict_proba(r.model, x));
    }
  }
}

TEST_CASE("select_hyperparams") {
  const Dataset all = testing::blobs(120, 2, 1.5, 12);
  const SplitSpec sp = split(all.size(), {0.5, 0.25, 0.25}, 0);
  const Dataset tr = all.subset(sp.train_idx), va = all.subset(sp.valid_idx);
  HyperGrid single{{3}, {0.1}, {1.0}};
  const Selection s = select_hyperparams(tr, va, single);
  CHECK(s.hyper.K == 3);
  CHECK(s.hyper.eps_E == 0.1);
  CHECK(s.evaluated.size() == 1);

  HyperGrid grid{{2, 4}, {0.01, 1.0}, {0.1, 1.0}};
  const Selection a = select_hyperparams(tr, va, grid);
  const Selection b = select_hyperparams(tr, va, grid);
  CHECK(a.hyper.K == b.hyper.K);
  CHECK(a.hyper.eps_E == b.hyper.eps_E);
  CHECK(a.hyper.eps_CL == b.hyper.eps_CL);
  CHECK(a.model.S == b.model.S);
  double best = 0.0;
  for (const auto& e : a.evaluated) best = std::max(best, e.validation_auc);
  CHECK(a.validation_auc == best);

  const Dataset sep = testing::blobs(120, 2, 8.0, 13);
  const SplitSpec sp2 = split(sep.size(), {0.5, 0.25, 0.25}, 0);
  const Selection perfect =
      select_hyperparams(sep.subset(sp2.train_idx), sep.subset(sp2.valid_idx), HyperGrid{{2, 4}, {1.0}, {1.0}});
  CHECK(perfect.validation_auc == 1.0);
  CHECK(perfect.hyper.K == 2);
}

TEST_CASE("two-turn Swiss roll reaches 95% test accuracy") {
  bench::SwissRollSpec spec;
  const Dataset d = bench::gen_swiss_roll(spec);
  const SplitSpec sp = split(d.size(), {0.5, 0.25, 0.25}, 0);
  const Selection s = select_hyperparams(d.subset(sp.train_idx), d.subset(sp.valid_idx), HyperGrid::defaults());
  const Dataset te = d.subset(sp.test_idx);
  CHECK(accuracy(predict_labels(s.model, te.features), te.labels) >= 0.95);
}

TEST_CASE("per-iteration cost grows at most linearly in T") {
  auto time_sweeps = [](Index T) {
    const Dataset d = testing::blobs(T, 4, 1.0, 3);
    EspaHyperparams h;
    h.K = 16;
    h.n_restarts = 1;
    h.max_iters = 20;
    h.tol = 0.0;
    double best = 1e300;
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto r = train(d, h);
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      best = std::min(best, dt / std::max(1, r.state.iterations));
    }
    return best;
  };
  const double small = time_sweeps(4000);
  const double large = time_sweeps(8000);
  CHECK(large / small < 3.0);
}
