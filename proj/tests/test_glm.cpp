#include "mapad/glm/logistic.hpp"
#include "support.hpp"

#include <doctest.h>

#include <limits>
#include <random>

using namespace mapad;
using namespace mapad::glm;

namespace {

Dataset one_dim(std::initializer_list<double> xs, std::initializer_list<int> ys) {
  Dataset d;
  d.features.resize(1, static_cast<Index>(xs.size()));
  d.labels.resize(static_cast<Index>(ys.size()));
  Index t = 0;
  for (double v : xs) d.features(0, t++) = v;
  t = 0;
  for (int v : ys) d.labels(t++) = v;
  d.column_names = {"x"};
  d.column_kinds = {ColumnKind::continuous};
  d.num_classes = 2;
  d.class_values = {0.0, 1.0};
  return d;
}

}  // namespace

TEST_CASE("sigmoid and logit") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(logit(sigmoid(2.0)) == doctest::Approx(2.0).epsilon(1e-12));
  const double tiny = sigmoid(-500.0);
  CHECK(tiny > 0.0);
  CHECK(tiny <= 1e-200);
  CHECK(sigmoid(700.0) == 1.0);
  CHECK(sigmoid(-700.0) > 0.0);
  for (double z = -30.0; z <= 0.0; z += 0.25) CHECK(std::abs(logit(sigmoid(z)) - z) <= 1e-12);
  for (double z = 0.25; z <= 30.0; z += 0.25) {
    const double p = sigmoid(z);
    CHECK(std::abs(logit(p) - z) <= 4.0 * std::numeric_limits<double>::epsilon() / (1.0 - p));
  }
  for (double p = 1e-6; p < 1.0; p += 0.0137) CHECK(std::abs(sigmoid(logit(p)) - p) <= 1e-12);
  for (double z = -30.0; z < 30.0; z += 0.25) CHECK(sigmoid(z) < sigmoid(z + 0.25));
  CHECK_THROWS_AS(logit(0.0), Error);
  CHECK_THROWS_AS(logit(1.0), Error);
  try {
    logit(1.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::domain);
  }
}

TEST_CASE("glm_predict_proba") {
  GlmModel m;
  m.theta = Eigen::Vector2d::Zero();
  CHECK(glm_predict_proba(m, Eigen::Vector2d(3.0, -7.0)) == 0.5);
  m.theta = Eigen::Vector2d(1.0, 0.0);
  CHECK(glm_predict_proba(m, Eigen::Vector2d(2.0, 5.0)) == sigmoid(2.0));
  CHECK_THROWS_AS(glm_predict_proba(m, Eigen::Vector3d::Zero()), Error);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  m.theta = Eigen::Vector3d(0.4, -1.2, 0.7);
  m.intercept = 0.3;
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector3d x(n(rng), n(rng), n(rng));
    const double step = std::abs(n(rng)) + 1e-3;
    CHECK(glm_predict_proba(m, x) < glm_predict_proba(m, Eigen::Vector3d(x + step * m.theta)));
  }
}

TEST_CASE("fit_logistic: gradient residual on a 1D instance") {
  const Dataset d = one_dim({-1.0, 1.0}, {0, 1});
  const GlmModel m = fit_logistic(d, 0.1);
  Eigen::VectorXd g;
  logistic_objective(d.features, d.labels, m.theta, m.intercept, 0.1, &g);
  CHECK(g.norm() <= 1e-8);
  CHECK(m.intercept == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(m.theta(0) > 0.0);
}

TEST_CASE("fit_logistic: symmetric data has zero intercept") {
  Dataset d = testing::blobs(200, 2, 1.0, 9);
  for (Index t = 0; t < 100; ++t) {
    d.features.col(100 + t) = -d.features.col(t);
    d.labels(100 + t) = 1 - d.labels(t);
  }
  const GlmModel m = fit_logistic(d);
  CHECK(std::abs(m.intercept) <= 1e-6);
}

TEST_CASE("fit_logistic: invariance to duplicating the data") {
  const Dataset d = testing::blobs(80, 3, 0.7, 12);
  Dataset dd = d;
  dd.features.resize(3, 160);
  dd.features << d.features, d.features;
  dd.labels.resize(160);
  dd.labels << d.labels, d.labels;
  const GlmModel a = fit_logistic(d, 0.01);
  const GlmModel b = fit_logistic(dd, 0.01);
  CHECK((a.theta - b.theta).norm() <= 1e-10);
  CHECK(std::abs(a.intercept - b.intercept) <= 1e-10);
}

TEST_CASE("fit_logistic: Newton objective decreases") {
  const Dataset d = testing::blobs(300, 4, 0.5, 3);
  FitTrace trace;
  fit_logistic(d, 1e-4, {}, &trace);
  REQUIRE(trace.objective.size() >= 2);
  for (std::size_t i = 1; i < trace.objective.size(); ++i) CHECK(trace.objective[i] <= trace.objective[i - 1]);
  CHECK(trace.grad_norm.back() <= 1e-8);
}

TEST_CASE("fit_logistic: separated classes without ridge") {
  const Dataset d = one_dim({-2.0, -1.0, 1.0, 2.0}, {0, 0, 1, 1});
  try {
    fit_logistic(d, 0.0);
    FAIL("expected non-convergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::non_convergence);
    CHECK(std::string(e.what()).find("l2 > 0") != std::string::npos);
  }
  CHECK_NOTHROW(fit_logistic(d, 1e-4));
  CHECK_THROWS_AS(fit_logistic(one_dim({0.0, 1.0}, {1, 1}), 1e-4), Error);
}
