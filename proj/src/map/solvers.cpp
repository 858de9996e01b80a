#include "mapad/map/solvers.hpp"

#include "mapad/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mapad::map {

namespace {

struct Split {
  std::vector<Index> acc;
  std::vector<Index> frz;
};

Split split_indices(const MapQuery& q) { return {normalized_indices(q.accessible), q.frozen()}; }

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Index>& idx) {
  Eigen::VectorXd out(static_cast<Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out(static_cast<Index>(j)) = v(idx[j]);
  return out;
}

void scatter(Eigen::VectorXd& v, const std::vector<Index>& idx, const Eigen::VectorXd& values) {
  for (std::size_t j = 0; j < idx.size(); ++j) v(idx[j]) = values(static_cast<Index>(j));
}

double accessible_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const std::vector<Index>& acc) {
  double s = 0.0;
  for (Index i : acc) s += (x(i) - y(i)) * (x(i) - y(i));
  return std::sqrt(s);
}

}  // namespace

// ---------------------------------------------------------------------------

MapResult map_invertible_penalty(const InvertibleClassifier& clf, const MapQuery& q,
                                 const PenaltySchedule& sched, std::vector<PenaltyIterate>* path) {
  q.validate(q.x.size());
  sched.validate();
  const auto [acc, frz] = split_indices(q);
  const double p0 = clf.forward(q.x);
  const double target = p0 - q.delta;
  const Eigen::VectorXd C = clf.inverse(target);
  if (C.size() != q.x.size()) throw Error(ErrorCode::dimension, "inverse returned a vector of the wrong size");

  std::vector<PenaltyIterate> iterates;
  for (double eps2 : sched.eps2_values) {
    PenaltyIterate it;
    it.eps2 = eps2;
    it.x = q.x;
    const double w = eps2 / (1.0 + eps2);
    for (Index i : acc) it.x(i) = q.x(i) + w * (C(i) - q.x(i));
    it.in_neighborhood = clf.in_neighborhood(it.x);
    it.residual = it.in_neighborhood ? std::abs(clf.forward(it.x) - target)
                                     : std::numeric_limits<double>::quiet_NaN();
    iterates.push_back(std::move(it));
  }
  if (path) *path = iterates;

  MapResult res;
  res.x_star = q.x;
  for (auto it = iterates.rbegin(); it != iterates.rend(); ++it) {
    if (!it->in_neighborhood) continue;
    res.status = MapStatus::found;
    res.x_star = it->x;
    res.eps2 = it->eps2;
    res.constraint_residual = it->residual;
    res.mad = accessible_distance(q.x, it->x, acc);
    res.achieved_drop = p0 - clf.forward(it->x);
    return res;
  }
  res.status = MapStatus::infeasible;
  res.diagnostics = "no penalty iterate lies in the invertibility neighbourhood";
  return res;
}

// ---------------------------------------------------------------------------

double glm_class_probability(const glm::GlmModel& model, const Eigen::VectorXd& x, int label) {
  const double p1 = glm::glm_predict_proba(model, x);
  if (label == 1) return p1;
  if (label == 0) return glm::sigmoid(-(model.theta.dot(x) + model.intercept));
  throw Error(ErrorCode::invalid_argument, "GLM label must be 0 or 1");
}

namespace {

struct GlmGeometry {
  std::vector<Index> acc;
  Eigen::VectorXd theta_a;
  double gap = 0.0;  // c - theta_a^T x_a
  double p0 = 0.0;
  double target = 0.0;
};

GlmGeometry glm_geometry(const glm::GlmModel& model, const MapQuery& q) {
  q.validate(model.dim());
  if (q.label != 0 && q.label != 1) throw Error(ErrorCode::invalid_argument, "GLM label must be 0 or 1");
  GlmGeometry g;
  g.acc = normalized_indices(q.accessible);
  g.theta_a = gather(model.theta, g.acc);
  if (g.theta_a.squaredNorm() == 0.0)
    throw Error(ErrorCode::no_control, "theta vanishes on the accessible features; they cannot move the score");
  g.p0 = glm_class_probability(model, q.x, q.label);
  g.target = g.p0 - q.delta;
  if (q.delta == 0.0) {
    g.gap = 0.0;
    return g;
  }
  if (!(g.target > 0.0 && g.target < 1.0))
    throw Error(ErrorCode::unreachable_target, "target probability " + std::to_string(g.target) +
                                                   " is outside (0, 1)");
  const double sign = q.label == 1 ? 1.0 : -1.0;
  const double score_target = sign * glm::logit(g.target);
  const double score_now = model.theta.dot(q.x) + model.intercept;
  g.gap = score_target - score_now;
  return g;
}

MapResult glm_result(const glm::GlmModel& model, const MapQuery& q, const GlmGeometry& g,
                     const Eigen::VectorXd& x_star, double eps2) {
  MapResult res;
  res.status = MapStatus::found;
  res.x_star = x_star;
  res.eps2 = eps2;
  res.mad = accessible_distance(q.x, x_star, g.acc);
  const double p = glm_class_probability(model, x_star, q.label);
  res.achieved_drop = g.p0 - p;
  res.constraint_residual = std::abs(p - g.target);
  return res;
}

}  // namespace

MapResult map_glm(const glm::GlmModel& model, const MapQuery& q) {
  const GlmGeometry g = glm_geometry(model, q);
  Eigen::VectorXd x_star = q.x;
  const double step = g.gap / g.theta_a.squaredNorm();
  for (std::size_t j = 0; j < g.acc.size(); ++j) x_star(g.acc[j]) += step * g.theta_a(static_cast<Index>(j));
  MapResult res = glm_result(model, q, g, x_star, 0.0);
  res.mad = std::abs(g.gap) / g.theta_a.norm();
  return res;
}

MapResult map_glm_penalty(const glm::GlmModel& model, const MapQuery& q, double eps2) {
  if (!(eps2 > 0.0)) throw Error(ErrorCode::invalid_argument, "eps2 must be positive");
  const GlmGeometry g = glm_geometry(model, q);
  Eigen::VectorXd x_star = q.x;
  const double step = eps2 * g.gap / (1.0 + eps2 * g.theta_a.squaredNorm());
  for (std::size_t j = 0; j < g.acc.size(); ++j) x_star(g.acc[j]) += step * g.theta_a(static_cast<Index>(j));
  return glm_result(model, q, g, x_star, eps2);
}

std::vector<PenaltyIterate> map_glm_penalty_path(const glm::GlmModel& model, const MapQuery& q,
                                                 const PenaltySchedule& sched) {
  sched.validate();
  std::vector<PenaltyIterate> out;
  for (double eps2 : sched.eps2_values) {
    const MapResult r = map_glm_penalty(model, q, eps2);
    out.push_back({eps2, r.x_star, r.constraint_residual, true});
  }
  return out;
}

// ---------------------------------------------------------------------------

CellPolytope build_cell_polytope(const espa::EspaModel& model, const MapQuery& q, Index k) {
  q.validate(model.dim());
  if (k < 0 || k >= model.cells()) throw Error(ErrorCode::invalid_argument, "cell index out of range");
  const auto [acc, frz] = split_indices(q);
  const Index K = model.cells();
  const Index n = static_cast<Index>(acc.size());
  const auto& W = model.W;
  const auto& S = model.S;

  auto c_na = [&](Index j) {
    double s = 0.0;
    for (Index i : frz) s += W(i) * (q.x(i) - S(i, j)) * (q.x(i) - S(i, j));
    return s;
  };
  const double c_k = c_na(k);

  CellPolytope P;
  P.target_cell = k;
  P.A.resize(K - 1, n);
  P.b.resize(K - 1);
  Index row = 0;
  for (Index kp = 0; kp < K; ++kp) {
    if (kp == k) continue;
    double rhs = c_na(kp) - c_k;
    for (Index j = 0; j < n; ++j) {
      const Index i = acc[static_cast<std::size_t>(j)];
      P.A(row, j) = 2.0 * W(i) * (S(i, kp) - S(i, k));
      rhs += W(i) * (S(i, kp) * S(i, kp) - S(i, k) * S(i, k));
    }
    P.b(row) = rhs;
    P.neighbor.push_back(kp);
    ++row;
  }
  return P;
}

CellPolytope build_cell_polytope_normalized(const espa::EspaModel& model, const MapQuery& q, Index k,
                                            MidpointConvention midpoint) {
  q.validate(model.dim());
  if (k < 0 || k >= model.cells()) throw Error(ErrorCode::invalid_argument, "cell index out of range");
  const auto [acc, frz] = split_indices(q);
  const Index K = model.cells();
  const Eigen::VectorXd sqrtW = model.W.cwiseSqrt();
  const Eigen::VectorXd sk = sqrtW.cwiseProduct(model.S.col(k));

  CellPolytope P;
  P.target_cell = k;
  P.A.resize(K - 1, static_cast<Index>(acc.size()));
  P.b.resize(K - 1);
  Index row = 0;
  for (Index kp = 0; kp < K; ++kp) {
    if (kp == k) continue;
    const Eigen::VectorXd skp = sqrtW.cwiseProduct(model.S.col(kp));
    const Eigen::VectorXd diff = sk - skp;
    const double norm = diff.norm();
    // Coincident weighted centres: no separating hyperplane, row is 0 <= 0.
    const Eigen::VectorXd V = norm > 0.0 ? Eigen::VectorXd(diff / norm) : Eigen::VectorXd::Zero(diff.size());
    const Eigen::VectorXd mid =
        midpoint == MidpointConvention::as_printed ? Eigen::VectorXd(sk + 0.5 * diff) : Eigen::VectorXd(0.5 * (sk + skp));
    double rhs = -V.dot(mid);
    for (Index i : frz) rhs += sqrtW(i) * V(i) * q.x(i);
    for (std::size_t j = 0; j < acc.size(); ++j)
      P.A(row, static_cast<Index>(j)) = -sqrtW(acc[j]) * V(acc[j]);
    P.b(row) = rhs;
    P.neighbor.push_back(kp);
    ++row;
  }
  return P;
}

namespace {

bool meets(MapMode mode, double drop, double delta, double slack, double tol_eq) {
  return mode == MapMode::inequality ? drop >= delta - slack : std::abs(drop - delta) <= tol_eq;
}

struct Endpoint {
  bool ok = false;
  Eigen::VectorXd x;
  std::string note;
};

/// Turns the closed-cell projection into a point the classifier itself maps
/// to a qualifying cell.
Endpoint settle_endpoint(const espa::EspaModel& model, const MapQuery& q, const std::vector<Index>& acc,
                         const CellPolytope& P, const QpResult& qp, double lam_star,
                         const EspaMapOptions& opt) {
  const Index k = P.target_cell;
  auto qualifies = [&](const Eigen::VectorXd& y) {
    const double drop = lam_star - model.Lambda(q.label, espa::assign_cell(model, y));
    return meets(q.mode, drop, q.delta, opt.drop_slack, opt.tol_eq);
  };

  Endpoint e;
  e.x = q.x;
  scatter(e.x, acc, qp.x_opt);
  if (qp.active_set.empty() && qualifies(e.x)) {
    e.ok = true;
    return e;
  }

  const Eigen::VectorXd base = e.x;
  Eigen::VectorXd u(static_cast<Index>(acc.size()));
  for (std::size_t j = 0; j < acc.size(); ++j) {
    const Index i = acc[j];
    u(static_cast<Index>(j)) = model.W(i) * (model.S(i, k) - base(i));
  }
  if (opt.eta > 0.0 && u.norm() > 0.0) {
    Eigen::VectorXd y = base;
    const Eigen::VectorXd moved = qp.x_opt + opt.eta * u / u.norm();
    scatter(y, acc, moved);
    if (qualifies(y)) {
      e.ok = true;
      e.x = y;
      e.note = "nudged toward centre";
      return e;
    }
  }
  if (opt.eta > 0.0) {
    Eigen::VectorXd b_tight = P.b;
    for (Index r = 0; r < P.A.rows(); ++r) b_tight(r) -= opt.eta * P.A.row(r).norm();
    const QpResult tight = solve_qp(P.A, b_tight, gather(q.x, acc), opt.qp);
    if (tight.status == QpStatus::optimal) {
      Eigen::VectorXd y = q.x;
      scatter(y, acc, tight.x_opt);
      if (qualifies(y)) {
        e.ok = true;
        e.x = y;
        e.note = "projected onto eta-shrunk cell";
        return e;
      }
    }
  }
  if (qualifies(base)) {
    e.ok = true;
    e.note = "boundary point kept";
    return e;
  }
  e.note = "no interior point of the cell within eta of the projection";
  return e;
}

}  // namespace

MapResult map_espa(const espa::EspaModel& model, const MapQuery& q, const EspaMapOptions& opt) {
  q.validate(model.dim());
  if (q.label < 0 || q.label >= model.classes())
    throw Error(ErrorCode::invalid_argument, "label outside the model's classes");
  const auto [acc, frz] = split_indices(q);
  const Eigen::VectorXd x_a = gather(q.x, acc);
  const Index kstar = espa::assign_cell(model, q.x);
  const double lam_star = model.Lambda(q.label, kstar);

  MapResult res;
  res.x_star = q.x;
  res.eta = opt.eta;
  res.source_cell = static_cast<int>(kstar);

  std::vector<Eigen::VectorXd> endpoints(static_cast<std::size_t>(model.cells()));
  Index best = -1;
  for (Index k = 0; k < model.cells(); ++k) {
    CellOutcome cell;
    cell.cell = k;
    cell.lambda_drop = lam_star - model.Lambda(q.label, k);
    if (!meets(q.mode, cell.lambda_drop, q.delta, opt.drop_slack, opt.tol_eq)) {
      cell.verdict = CellVerdict::delta_filtered;
      res.per_cell.push_back(std::move(cell));
      continue;
    }
    const CellPolytope P = build_cell_polytope(model, q, k);
    QpResult qp = solve_qp(P.A, P.b, x_a, opt.qp);
    if (qp.status == QpStatus::infeasible) {
      cell.verdict = CellVerdict::polytope_empty;
    } else if (qp.status == QpStatus::numeric_failure) {
      cell.verdict = CellVerdict::numeric_failure;
    } else {
      Endpoint e = settle_endpoint(model, q, acc, P, qp, lam_star, opt);
      if (e.ok) {
        cell.verdict = CellVerdict::solved;
        cell.distance = accessible_distance(q.x, e.x, acc);
        endpoints[static_cast<std::size_t>(k)] = std::move(e.x);
        if (best < 0 || cell.distance < res.per_cell[static_cast<std::size_t>(best)].distance) best = k;
      } else {
        cell.verdict = CellVerdict::numeric_failure;
        qp.diagnostics += (qp.diagnostics.empty() ? "" : "; ") + e.note;
      }
    }
    cell.qp = std::move(qp);
    res.per_cell.push_back(std::move(cell));
  }

  if (best < 0) {
    res.status = MapStatus::infeasible;
    Index filtered = 0, empty = 0, failed = 0;
    for (const auto& c : res.per_cell) {
      filtered += c.verdict == CellVerdict::delta_filtered;
      empty += c.verdict == CellVerdict::polytope_empty;
      failed += c.verdict == CellVerdict::numeric_failure;
    }
    res.diagnostics = std::to_string(filtered) + " cells filtered by delta, " + std::to_string(empty) +
                      " polytopes empty, " + std::to_string(failed) + " numeric failures";
    return res;
  }

  const CellOutcome& win = res.per_cell[static_cast<std::size_t>(best)];
  const double best_obj = win.qp->objective;
  for (const auto& c : res.per_cell)
    if (c.verdict == CellVerdict::solved && std::abs(c.qp->objective - best_obj) <= 1e-12 * (1.0 + best_obj))
      res.winner_cells.push_back(c.cell);
  std::sort(res.winner_cells.begin(), res.winner_cells.end(), [&](Index a, Index b) {
    return a == best ? true : (b == best ? false : a < b);
  });

  res.status = MapStatus::found;
  res.x_star = endpoints[static_cast<std::size_t>(best)];
  res.mad = win.distance;
  res.achieved_drop = lam_star - espa::predict_proba(model, res.x_star)(q.label);

  bool has_binary = false;
  for (Index i : acc)
    has_binary = has_binary || (static_cast<std::size_t>(i) < opt.binary_columns.size() &&
                                opt.binary_columns[static_cast<std::size_t>(i)]);
  if (has_binary) {
    RoundedEndpoint r;
    r.x_star = res.x_star;
    for (Index i : acc)
      if (static_cast<std::size_t>(i) < opt.binary_columns.size() && opt.binary_columns[static_cast<std::size_t>(i)])
        r.x_star(i) = r.x_star(i) >= 0.5 ? 1.0 : 0.0;
    r.mad = accessible_distance(q.x, r.x_star, acc);
    r.achieved_drop = lam_star - espa::predict_proba(model, r.x_star)(q.label);
    r.meets_delta = meets(q.mode, r.achieved_drop, q.delta, opt.drop_slack, opt.tol_eq);
    res.rounded = std::move(r);
  }
  return res;
}

// ---------------------------------------------------------------------------

MapResult map_oracle_grid(const ProbabilityMap& p_label, const MapQuery& q, double radius, double h,
                          const GridOracleOptions& options) {
  q.validate(q.x.size());
  const auto acc = normalized_indices(q.accessible);
  const int d = static_cast<int>(acc.size());
  if (d > 3) throw Error(ErrorCode::unsupported, "grid oracle supports at most 3 accessible features");
  if (!(h > 0.0) || !(radius >= 0.0)) throw Error(ErrorCode::invalid_argument, "grid oracle needs h > 0, radius >= 0");
  const double tol_eq = options.tol_eq >= 0.0 ? options.tol_eq : h;
  const long long n = static_cast<long long>(std::floor(radius / h + 1e-9));
  const double p0 = p_label(q.x);

  Eigen::VectorXd y = q.x;
  auto feasible = [&](const long long* off) {
    for (int j = 0; j < d; ++j) y(acc[static_cast<std::size_t>(j)]) = q.x(acc[static_cast<std::size_t>(j)]) + h * static_cast<double>(off[j]);
    return meets(q.mode, p0 - p_label(y), q.delta, options.drop_slack, tol_eq);
  };

  long long best_norm = -1;
  long long best_off[3] = {0, 0, 0};
  long long m = std::min<long long>(n, 8);
  while (true) {
    best_norm = -1;
    long long off[3] = {0, 0, 0};
    for (int j = 0; j < d; ++j) off[j] = -m;
    while (true) {
      long long norm = 0;
      for (int j = 0; j < d; ++j) norm += off[j] * off[j];
      if ((best_norm < 0 || norm < best_norm) && feasible(off)) {
        best_norm = norm;
        std::copy(off, off + 3, best_off);
      }
      int j = d - 1;
      while (j >= 0 && off[j] == m) off[j--] = -m;
      if (j < 0) break;
      ++off[j];
    }
    if ((best_norm >= 0 && best_norm <= m * m) || m >= n) break;
    m = std::min(2 * m, n);
  }

  MapResult res;
  res.x_star = q.x;
  if (best_norm < 0) {
    res.status = MapStatus::infeasible;
    res.diagnostics = "no grid point in the box meets the drop requirement";
    return res;
  }
  for (int j = 0; j < d; ++j)
    res.x_star(acc[static_cast<std::size_t>(j)]) = q.x(acc[static_cast<std::size_t>(j)]) + h * static_cast<double>(best_off[j]);
  res.status = MapStatus::found;
  res.mad = accessible_distance(q.x, res.x_star, acc);
  res.achieved_drop = p0 - p_label(res.x_star);
  return res;
}

}  // namespace mapad::map
