#pragma once

#include "mapad/core/dataset.hpp"
#include "mapad/espa/espa.hpp"

#include <random>

namespace mapad::testing {

/// Two classes from Gaussian blobs in D dimensions.
inline Dataset blobs(Index T, Index D, double separation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Dataset d;
  d.features.resize(D, T);
  d.labels.resize(T);
  for (Index t = 0; t < T; ++t) {
    const int c = static_cast<int>(t % 2);
    for (Index i = 0; i < D; ++i) d.features(i, t) = n(rng) + (i == 0 ? (c == 0 ? -separation : separation) : 0.0);
    d.labels(t) = c;
  }
  for (Index i = 0; i < D; ++i) d.column_names.push_back("f" + std::to_string(i));
  d.column_kinds.assign(static_cast<std::size_t>(D), ColumnKind::continuous);
  d.num_classes = 2;
  d.class_values = {0.0, 1.0};
  d.label_name = "y";
  return d;
}

/// Random point on the probability simplex with every entry >= lo.
inline Eigen::VectorXd random_simplex(Index n, std::mt19937_64& rng, double lo = 0.0) {
  std::exponential_distribution<double> e(1.0);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = e(rng);
  v /= v.sum();
  return (v.array() * (1.0 - lo * static_cast<double>(n)) + lo).matrix();
}

struct BlockCheck {
  int gamma = 0;
  int s = 0;
  int lambda = 0;
  int w = 0;
  int total() const { return gamma + s + lambda + w; }
};

/// Runs one sweep of block updates from the given state and, after each
/// block, tries `n` random feasible perturbations of that block. Counts
/// perturbations that lower the loss by more than 1e-12 (relative).
inline BlockCheck block_optimality(const Dataset& data, const espa::EspaHyperparams& h, Eigen::VectorXd W,
                                   Eigen::MatrixXd S, Eigen::MatrixXd Lambda, int n, std::mt19937_64& rng) {
  using namespace espa;
  const auto& X = data.features;
  const auto& y = data.labels;
  const Index K = S.cols(), M = data.num_classes, T = data.size();
  Eigen::VectorXi a = update_gamma(W, S, Lambda, X, y, h.eps_CL, h.lambda_floor);
  auto L = [&](const Eigen::VectorXd& w, const Eigen::MatrixXd& s, const Eigen::MatrixXd& lam,
               const Eigen::VectorXi& g) {
    return espa_loss(w, s, lam, h.eps_E, h.eps_CL, X, y, g, h.lambda_floor);
  };
  auto worse = [](double candidate, double base) { return candidate < base - 1e-12 * (1.0 + std::abs(base)); };
  std::uniform_int_distribution<Index> pick_t(0, T - 1), pick_k(0, K - 1);
  std::normal_distribution<double> nrm(0.0, 1.0);
  std::uniform_real_distribution<double> scale(1e-6, 1.0);
  BlockCheck out;

  double base = L(W, S, Lambda, a);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXi g = a;
    const int changes = 1 + i % 3;
    for (int c = 0; c < changes; ++c) g(pick_t(rng)) = static_cast<int>(pick_k(rng));
    out.gamma += worse(L(W, S, Lambda, g), base);
  }

  S = update_s(a, X, W, S);
  base = L(W, S, Lambda, a);
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd P = S;
    const double sc = scale(rng);
    for (Index j = 0; j < P.size(); ++j) P.data()[j] += sc * nrm(rng);
    out.s += worse(L(W, P, Lambda, a), base);
  }

  Lambda = update_lambda(a, y, K, M, h.lambda_floor);
  base = L(W, S, Lambda, a);
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd P = Lambda;
    const Index k = pick_k(rng);
    const double mix = scale(rng);
    P.col(k) = (1.0 - mix) * Lambda.col(k) + mix * random_simplex(M, rng, h.lambda_floor);
    out.lambda += worse(L(W, S, P, a), base);
  }

  W = update_w(S, a, X, h.eps_E);
  base = L(W, S, Lambda, a);
  for (int i = 0; i < n; ++i) {
    const double mix = scale(rng);
    const Eigen::VectorXd P = (1.0 - mix) * W + mix * random_simplex(W.size(), rng);
    out.w += worse(L(P, S, Lambda, a), base);
  }
  return out;
}

}  // namespace mapad::testing
