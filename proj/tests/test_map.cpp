#include "mapad/map/solvers.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace mapad;
using namespace mapad::map;

namespace {

espa::EspaModel two_cells() {
  espa::EspaModel m;
  m.W = Eigen::Vector2d(0.5, 0.5);
  m.S.resize(2, 2);
  m.S << 0, 1, 0, 0;
  m.Lambda.resize(2, 2);
  m.Lambda << 0.0, 1.0, 1.0, 0.0;
  return m;
}

espa::EspaModel random_model(Index D, Index K, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  espa::EspaModel m;
  m.W = testing::random_simplex(D, rng, 0.05);
  m.S.resize(D, K);
  for (Index i = 0; i < m.S.size(); ++i) m.S.data()[i] = n(rng);
  m.Lambda.resize(2, K);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Index k = 0; k < K; ++k) {
    m.Lambda(1, k) = u(rng);
    m.Lambda(0, k) = 1.0 - m.Lambda(1, k);
  }
  return m;
}

glm::GlmModel theta_10() {
  glm::GlmModel g;
  g.theta = Eigen::Vector2d(1.0, 0.0);
  return g;
}

MapQuery query(Eigen::VectorXd x, double delta, std::vector<Index> acc, int label = 1,
               MapMode mode = MapMode::inequality) {
  MapQuery q;
  q.x = std::move(x);
  q.delta = delta;
  q.accessible = std::move(acc);
  q.label = label;
  q.mode = mode;
  return q;
}

InvertibleClassifier identity_1d() {
  InvertibleClassifier c;
  c.forward = [](const Eigen::VectorXd& x) { return x(0); };
  c.inverse = [](double p) { return Eigen::VectorXd::Constant(1, p); };
  c.in_neighborhood = [](const Eigen::VectorXd& x) { return x(0) > 0.0 && x(0) < 1.0; };
  return c;
}

}  // namespace

TEST_CASE("map_query validation") {
  const Eigen::Vector2d x(0, 0);
  CHECK_THROWS_AS(query(x, 0.1, {}).validate(2), Error);
  CHECK_THROWS_AS(query(x, 0.1, {0, 0}).validate(2), Error);
  CHECK_THROWS_AS(query(x, 0.1, {2}).validate(2), Error);
  CHECK_THROWS_AS(query(x, -0.1, {0}).validate(2), Error);
  CHECK_THROWS_AS(query(x, 0.1, {0}).validate(3), Error);
  CHECK_NOTHROW(query(x, 0.0, {1}).validate(2));
  CHECK(query(Eigen::Vector3d(1, 2, 3), 0.1, {2, 0}).frozen() == std::vector<Index>{1});
  CHECK(PenaltySchedule::geometric(1.0, 1e4, 5).eps2_values.back() == 1e4);
  const PenaltySchedule flat{{1.0, 1.0}};
  CHECK_THROWS_AS(flat.validate(), Error);
}

TEST_CASE("invertible penalty: identity classifier") {
  const auto clf = identity_1d();
  const auto q = query(Eigen::VectorXd::Constant(1, 0.8), 0.3, {0});
  const MapResult r1 = map_invertible_penalty(clf, q, {{1.0}});
  REQUIRE(r1.status == MapStatus::found);
  CHECK(r1.x_star(0) == doctest::Approx(0.65).epsilon(1e-15));
  const auto F = [&](double y) { return (y - 0.8) * (y - 0.8) + 1.0 * (y - 0.5) * (y - 0.5); };
  const double h = 1e-6;
  CHECK(std::abs((F(r1.x_star(0) + h) - F(r1.x_star(0) - h)) / (2 * h)) <= 1e-8);

  const MapResult rl = map_invertible_penalty(clf, q, {{1e6}});
  CHECK(std::abs(rl.x_star(0) - 0.5) <= 1e-5);
  CHECK(rl.constraint_residual <= 1e-5);

  std::vector<PenaltyIterate> path;
  map_invertible_penalty(clf, q, PenaltySchedule::geometric(1e-2, 1e6, 9), &path);
  REQUIRE(path.size() == 9);
  for (std::size_t i = 1; i < path.size(); ++i) CHECK(path[i].residual <= path[i - 1].residual);
}

TEST_CASE("invertible penalty: identity query and neighbourhood exit") {
  const auto clf = identity_1d();
  const auto r = map_invertible_penalty(clf, query(Eigen::VectorXd::Constant(1, 0.4), 0.0, {0}), {{1.0, 10.0, 1e8}});
  CHECK(r.x_star(0) == 0.4);
  CHECK(r.mad == 0.0);

  InvertibleClassifier narrow = clf;
  narrow.in_neighborhood = [](const Eigen::VectorXd& x) { return x(0) > 0.7; };
  const auto q = query(Eigen::VectorXd::Constant(1, 0.8), 0.3, {0});
  const auto partial = map_invertible_penalty(narrow, q, {{0.1, 1.0, 100.0}});
  REQUIRE(partial.status == MapStatus::found);
  CHECK(partial.eps2 == 0.1);
  CHECK(map_invertible_penalty(narrow, q, {{1.0, 100.0}}).status == MapStatus::infeasible);
}

TEST_CASE("map_glm: closed form examples") {
  const auto g = theta_10();
  const auto q = query(Eigen::Vector2d(2, 5), glm::sigmoid(2.0) - 0.5, {0});
  const MapResult r = map_glm(g, q);
  REQUIRE(r.status == MapStatus::found);
  CHECK(std::abs(r.x_star(0)) <= 1e-12);
  CHECK(r.x_star(1) == 5.0);
  CHECK(r.mad == doctest::Approx(2.0).epsilon(1e-12));

  const MapResult p = map_glm_penalty(g, q, 1.0);
  CHECK(p.x_star(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.x_star(1) == 5.0);
  const double c = 0.0;
  const auto F = [&](double y) { return (y - 2.0) * (y - 2.0) + (y - c) * (y - c); };
  CHECK(std::abs((F(p.x_star(0) + 1e-6) - F(p.x_star(0) - 1e-6)) / 2e-6) <= 1e-8);

  const auto grid = map_oracle_grid([&](const Eigen::VectorXd& y) { return glm_class_probability(g, y, 1); }, q, 3.0,
                                    1e-3);
  REQUIRE(grid.status == MapStatus::found);
  CHECK(std::abs(grid.mad - 2.0) <= 2e-3);

  const auto id = map_glm(g, query(Eigen::Vector2d(2, 5), 0.0, {0}));
  CHECK(id.x_star == Eigen::VectorXd(Eigen::Vector2d(2, 5)));
  CHECK(id.mad == 0.0);
}

TEST_CASE("map_glm: errors and label 0") {
  const auto g = theta_10();
  CHECK_THROWS_AS(map_glm(g, query(Eigen::Vector2d(2, 5), 0.95, {0})), Error);
  try {
    map_glm(g, query(Eigen::Vector2d(2, 5), 0.1, {1}));
    FAIL("expected no_control");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::no_control);
  }
  try {
    map_glm(g, query(Eigen::Vector2d(2, 5), 0.95, {0}));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unreachable_target);
  }
  const auto r = map_glm(g, query(Eigen::Vector2d(-2, 5), glm::sigmoid(2.0) - 0.5, {0}, 0));
  CHECK(std::abs(r.x_star(0)) <= 1e-12);
  CHECK(r.achieved_drop == doctest::Approx(glm::sigmoid(2.0) - 0.5));
}

TEST_CASE("map_glm: penalty path converges to the projection") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  glm::GlmModel g;
  g.theta = Eigen::Vector4d(n(rng), n(rng), n(rng), n(rng));
  g.intercept = 0.2;
  Eigen::Vector4d x(n(rng), n(rng), n(rng), n(rng));
  const int label = glm::glm_predict_proba(g, x) >= 0.5 ? 1 : 0;
  const auto q = query(x, 0.2, {0, 2, 3}, label);
  const auto limit = map_glm(g, q);
  const auto path = map_glm_penalty_path(g, q, PenaltySchedule::geometric(1e-2, 1e8, 11));
  for (std::size_t i = 1; i < path.size(); ++i) CHECK(path[i].residual <= path[i - 1].residual + 1e-15);
  CHECK((path.back().x - limit.x_star).norm() <= 1e-6);
  CHECK(path.back().x(1) == x(1));
  CHECK(limit.constraint_residual <= 1e-12);
}

TEST_CASE("build_cell_polytope: bisector examples") {
  const auto m = two_cells();
  const auto P = build_cell_polytope(m, query(Eigen::Vector2d(0, 0), 0.5, {0, 1}), 1);
  REQUIRE(P.A.rows() == 1);
  CHECK(P.neighbor == std::vector<Index>{0});
  // -x1 <= -0.5 up to the positive factor 2 W_1
  CHECK(P.A(0, 0) == doctest::Approx(-1.0));
  CHECK(P.A(0, 1) == 0.0);
  CHECK(P.b(0) == doctest::Approx(-0.5));

  const auto frozen = build_cell_polytope(m, query(Eigen::Vector2d(0, 0), 0.5, {1}), 1);
  CHECK(frozen.A(0, 0) == 0.0);
  CHECK(frozen.b(0) < 0.0);
  CHECK(solve_qp(frozen.A, frozen.b, Eigen::VectorXd::Zero(1)).status == QpStatus::infeasible);
}

TEST_CASE("build_cell_polytope: sampled membership matches assign_cell") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.5);
  const auto m = random_model(2, 3, rng);
  std::vector<int> hits(3, 0);
  for (int s = 0; s < 3000; ++s) {
    const Eigen::Vector2d y(n(rng), n(rng));
    const Index own = espa::assign_cell(m, y);
    ++hits[static_cast<std::size_t>(own)];
    for (Index k = 0; k < 3; ++k) {
      const auto P = build_cell_polytope(m, query(y, 0.1, {0, 1}), k);
      const bool inside = ((P.A * y - P.b).array() <= 1e-12).all();
      CHECK(inside == (k == own));
    }
  }
  for (int h : hits) CHECK(h > 0);
}

TEST_CASE("build_cell_polytope: frozen coordinates enter the offsets") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto m = random_model(4, 5, rng);
  for (int s = 0; s < 200; ++s) {
    Eigen::Vector4d x(n(rng), n(rng), n(rng), n(rng));
    const auto q = query(x, 0.1, {1, 3});
    for (Index k = 0; k < 5; ++k) {
      const auto P = build_cell_polytope(m, q, k);
      const Eigen::Vector2d xa(x(1), x(3));
      CHECK((((P.A * xa - P.b).array() <= 1e-12).all()) == (espa::assign_cell(m, x) == k));
    }
  }
}

TEST_CASE("normalised rendering: bisector agrees, as-printed midpoint diverges") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0.0, 1.0);
  int diverged = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = random_model(3, 4, rng);
    const Eigen::Vector3d x(n(rng), n(rng), n(rng));
    const auto q = query(x, 0.1, {0, 1, 2});
    const Index k = trial % 4;
    const auto E = build_cell_polytope(m, q, k);
    const auto B = build_cell_polytope_normalized(m, q, k, MidpointConvention::bisector);
    const auto A = build_cell_polytope_normalized(m, q, k, MidpointConvention::as_printed);
    for (Index r = 0; r < E.A.rows(); ++r) {
      const double scale = E.A.row(r).norm() / B.A.row(r).norm();
      CHECK((E.A.row(r) - scale * B.A.row(r)).norm() <= 1e-12 * scale);
      CHECK(std::abs(E.b(r) - scale * B.b(r)) <= 1e-12 * (1 + std::abs(E.b(r))));
    }
    const auto qe = solve_qp(E.A, E.b, x);
    const auto qb = solve_qp(B.A, B.b, x);
    REQUIRE(qe.status == qb.status);
    if (qe.status == QpStatus::optimal) CHECK((qe.x_opt - qb.x_opt).norm() <= 1e-8);
    const auto qa = solve_qp(A.A, A.b, x);
    if (qa.status != qe.status || (qe.status == QpStatus::optimal && (qa.x_opt - qe.x_opt).norm() > 1e-8)) ++diverged;
  }
  CHECK(diverged > 0);
}

TEST_CASE("normalised rendering: as-printed offset on the two-cell geometry") {
  const auto m = two_cells();
  const auto q = query(Eigen::Vector2d(0, 0), 0.5, {0, 1});
  const auto B = build_cell_polytope_normalized(m, q, 1, MidpointConvention::bisector);
  const auto A = build_cell_polytope_normalized(m, q, 1, MidpointConvention::as_printed);
  const double s = std::sqrt(0.5);
  // bisector: x1 >= 0.5, as printed: x1 >= 1.5
  CHECK(-B.b(0) / -B.A(0, 0) == doctest::Approx(0.5));
  CHECK(-A.b(0) / -A.A(0, 0) == doctest::Approx(1.5));
  CHECK(B.A(0, 0) == doctest::Approx(-s));
}

TEST_CASE("map_espa: two-cell example") {
  const auto m = two_cells();
  const auto q = query(Eigen::Vector2d(0, 0), 0.5, {0, 1});
  const MapResult r = map_espa(m, q);
  REQUIRE(r.status == MapStatus::found);
  CHECK(r.x_star(0) == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(std::abs(r.x_star(1)) <= 1e-12);
  CHECK(std::abs(r.mad - 0.5) <= 2e-6);
  CHECK(r.winner_cells == std::vector<Index>{1});
  CHECK(r.source_cell == 0);
  CHECK(espa::assign_cell(m, r.x_star) == 1);
  CHECK(r.achieved_drop == 1.0);
  REQUIRE(r.per_cell.size() == 2);
  CHECK(r.per_cell[0].verdict == CellVerdict::delta_filtered);
  CHECK(r.per_cell[1].verdict == CellVerdict::solved);
  CHECK(r.per_cell[1].qp->certified());

  const auto grid = map_oracle_grid([&](const Eigen::VectorXd& y) { return espa::predict_proba(m, y)(1); }, q, 3.0,
                                    1e-3);
  REQUIRE(grid.status == MapStatus::found);
  CHECK(std::abs(grid.mad - 0.5) <= 2e-3);
  CHECK(std::abs(grid.mad - r.mad) <= 1e-3 * std::sqrt(2.0) + 1e-6);
}

TEST_CASE("map_espa: infeasible queries") {
  const auto m = two_cells();
  const auto r = map_espa(m, query(Eigen::Vector2d(0, 0), 1.5, {0, 1}));
  CHECK(r.status == MapStatus::infeasible);
  for (const auto& c : r.per_cell) CHECK(c.verdict == CellVerdict::delta_filtered);
  CHECK(r.diagnostics.find("filtered") != std::string::npos);

  const auto e = map_espa(m, query(Eigen::Vector2d(0, 0), 0.5, {1}));
  CHECK(e.status == MapStatus::infeasible);
  CHECK(e.per_cell[1].verdict == CellVerdict::polytope_empty);
  CHECK(e.x_star == Eigen::VectorXd(Eigen::Vector2d(0, 0)));

  const auto grid = map_oracle_grid([&](const Eigen::VectorXd& y) { return espa::predict_proba(m, y)(1); },
                                    query(Eigen::Vector2d(0, 0), 0.5, {0}), 0.3, 1e-2);
  CHECK(grid.status == MapStatus::infeasible);
  CHECK_THROWS_AS(map_espa(m, query(Eigen::Vector2d(0, 0), 0.5, {0}, 2)), Error);
}

TEST_CASE("map_espa: identity query in equality mode") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = random_model(3, 6, rng);
    const Eigen::Vector3d x(n(rng), n(rng), n(rng));
    const auto r = map_espa(m, query(x, 0.0, {0, 2}, 1, MapMode::equality));
    REQUIRE(r.status == MapStatus::found);
    CHECK(r.mad <= 1e-12);
    CHECK(r.x_star(1) == x(1));
  }
}

TEST_CASE("map_espa: invariants on random models") {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> n(0.0, 1.0);
  int found = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto m = random_model(4, 7, rng);
    const Eigen::Vector4d x(n(rng), n(rng), n(rng), n(rng));
    const auto q = query(x, 0.2, {0, 1, 3});
    const auto r = map_espa(m, q);
    if (r.status != MapStatus::found) continue;
    ++found;
    CHECK(r.x_star(2) == x(2));
    CHECK(r.achieved_drop >= 0.2 - 1e-9);
    CHECK(espa::predict_proba(m, x)(1) - espa::predict_proba(m, r.x_star)(1) >= 0.2 - 1e-9);
    CHECK(std::abs(r.mad * r.mad - (r.x_star - x).squaredNorm()) <= 1e-10);
    for (const auto& c : r.per_cell)
      if (c.qp && c.qp->status == QpStatus::optimal) {
        CHECK(c.qp->kkt_residual <= 1e-7);
        CHECK(c.qp->primal_violation <= 1e-8);
        CHECK(c.qp->complementarity <= 1e-8);
      }
    for (const auto& c : r.per_cell)
      if (c.verdict == CellVerdict::solved) CHECK(c.distance >= r.mad);
  }
  CHECK(found > 10);
}

TEST_CASE("map_espa: tied cells are all reported") {
  espa::EspaModel m;
  m.W = Eigen::Vector2d(0.5, 0.5);
  m.S.resize(2, 3);
  m.S << 0, 1, -1, 0, 0, 0;
  m.Lambda.resize(2, 3);
  m.Lambda << 0, 1, 1, 1, 0, 0;
  const auto r = map_espa(m, query(Eigen::Vector2d(0, 0), 0.5, {0, 1}));
  REQUIRE(r.status == MapStatus::found);
  CHECK(r.winner_cells.size() == 2);
  CHECK(r.winner_cells.front() == 1);
}

TEST_CASE("map_espa: binary accessible coordinates get a rounded endpoint") {
  const auto m = two_cells();
  EspaMapOptions opt;
  opt.binary_columns = {true, false};
  const auto r = map_espa(m, query(Eigen::Vector2d(0, 0), 0.5, {0, 1}), opt);
  REQUIRE(r.rounded.has_value());
  CHECK(r.rounded->x_star(0) == 1.0);
  CHECK(r.rounded->meets_delta);
  CHECK(r.rounded->mad == 1.0);
  CHECK_FALSE(map_espa(m, query(Eigen::Vector2d(0, 0), 0.5, {0, 1})).rounded.has_value());
}

TEST_CASE("map_oracle_grid: tie-breaking and limits") {
  const auto radial = [](const Eigen::VectorXd& y) { return y.norm() < 0.99 ? 1.0 : 0.0; };
  const auto r = map_oracle_grid(radial, query(Eigen::Vector2d(0, 0), 0.5, {0, 1}), 2.0, 0.5);
  REQUIRE(r.status == MapStatus::found);
  CHECK(r.x_star == Eigen::VectorXd(Eigen::Vector2d(-1.0, 0.0)));
  CHECK(r.mad == 1.0);
  CHECK_THROWS_AS(map_oracle_grid([](const Eigen::VectorXd&) { return 0.5; },
                                  query(Eigen::Vector4d::Zero(), 0.1, {0, 1, 2, 3}), 1.0, 0.1),
                  Error);
  CHECK_THROWS_AS(map_oracle_grid([](const Eigen::VectorXd&) { return 0.5; }, query(Eigen::Vector2d::Zero(), 0.1, {0}),
                                  1.0, 0.0),
                  Error);
}

TEST_CASE("monotonicity in delta and in the accessible set") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.05, 0.6);
  int pairs = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto m = random_model(3, 8, rng);
    const Eigen::Vector3d x(n(rng), n(rng), n(rng));
    const double d1 = u(rng), d2 = d1 + u(rng) * 0.5;
    const auto a = map_espa(m, query(x, d1, {0, 1}));
    const auto b = map_espa(m, query(x, d2, {0, 1}));
    const auto c = map_espa(m, query(x, d1, {0, 1, 2}));
    if (a.status == MapStatus::found && b.status == MapStatus::found) {
      CHECK(a.mad <= b.mad + 1e-6);
      ++pairs;
    }
    if (b.status == MapStatus::found) CHECK(a.status == MapStatus::found);
    if (a.status == MapStatus::found) {
      REQUIRE(c.status == MapStatus::found);
      CHECK(c.mad <= a.mad + 1e-6);
    }
  }
  CHECK(pairs > 5);
}
