#include "icbf/safety_filter.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>

namespace icbf {

namespace {

constexpr double kFeasTol = 1e-9;   // constraint satisfaction slack in candidates
constexpr double kTieTol = 1e-12;   // objective tie breaking

void check_axis_weights(const Eigen::Matrix4d& Q, const Mat2& R) {
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j && Q(i, j) != 0.0)
        throw InvalidWeight("lqr_gain: Q must be diagonal (per-axis structure)");
  if (R(0, 1) != 0.0 || R(1, 0) != 0.0)
    throw InvalidWeight("lqr_gain: R must be diagonal (per-axis structure)");
  for (int a = 0; a < 2; ++a) {
    if (!(R(a, a) > 0.0)) throw InvalidWeight("lqr_gain: R must be positive definite");
    if (!(Q(a, a) > 0.0))
      throw InvalidWeight("lqr_gain: position weight must be positive (Hurwitz)");
    if (Q(2 + a, 2 + a) < 0.0)
      throw InvalidWeight("lqr_gain: velocity weight must be nonnegative");
  }
}

}  // namespace

LqrGain lqr_gain(const Eigen::Matrix4d& Q, const Mat2& R) {
  check_axis_weights(Q, R);
  LqrGain out;
  double resid = 0.0;
  for (int a = 0; a < 2; ++a) {
    const double qp = Q(a, a);
    const double qv = Q(2 + a, 2 + a);
    const double rho = R(a, a);
    const double k1 = std::sqrt(qp / rho);
    const double k2 = std::sqrt(qv / rho + 2.0 * k1);
    out.K(a, a) = k1;
    out.K(a, 2 + a) = k2;

    // P from K = R^-1 B'P with B = (0, 1)': P12 = rho k1, P22 = rho k2.
    const double p12 = rho * k1;
    const double p22 = rho * k2;
    const double p11 = p12 * p22 / rho;  // from the (1,1) Riccati entry
    Eigen::Matrix2d P, Aa, Qa;
    P << p11, p12, p12, p22;
    Aa << 0.0, 1.0, 0.0, 0.0;
    Qa << qp, 0.0, 0.0, qv;
    const Eigen::Matrix2d res =
        Aa.transpose() * P + P * Aa - P * Eigen::Matrix2d{{0, 0}, {0, 1.0 / rho}} * P + Qa;
    resid = std::max(resid, res.norm());
  }
  out.riccati_residual = resid;
  return out;
}

Vec2 nominal_control(const State& x, const State& goal, const LqrGain& gain,
                     const FilterConfig& cfg) {
  const Vec4 err = x.vec() - goal.vec();
  Vec2 u = -gain.K * err;
  if (cfg.u_max) {
    for (int a = 0; a < 2; ++a) u[a] = std::clamp(u[a], -(*cfg.u_max)[a], (*cfg.u_max)[a]);
  }
  return u;
}

double softplus_c(double z, double c) {
  if (!(c > 0.0)) throw InvalidInput("softplus_c: c must be positive");
  // max(t, 0) + log1p(exp(-|t|)) never exponentiates a positive argument,
  // so no clamp is needed and the identity is exact in both tails
  const double t = c * z;
  return (std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)))) / c;
}

FilterResult softplus_filter(const Vec2& u_d, const ConstraintRow& row,
                             const FilterConfig& cfg) {
  FilterResult out;
  out.psi = row.Lf + row.Lg.dot(u_d) + row.alpha_h;
  const double lg2 = row.Lg.squaredNorm();
  if (lg2 < cfg.lgh_eps * cfg.lgh_eps) {
    out.u = u_d;
    out.degenerate = true;
    return out;
  }
  const double boost = softplus_c(-out.psi, cfg.c);
  out.u = u_d + boost * row.Lg.transpose() / lg2;
  out.correction_norm = (out.u - u_d).norm();
  out.active_rows = 1;
  return out;
}

FilterResult qp_filter(const Vec2& u_d, const std::vector<ConstraintRow>& rows,
                       const FilterConfig& cfg) {
  if (rows.size() > 4) throw InvalidInput("qp_filter: at most 4 rows supported");

  // Constraints as a_i . u >= b_i.
  struct Row {
    Vec2 a;
    double b;
  };
  std::vector<Row> cs;
  cs.reserve(rows.size());
  double worst_psi = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    worst_psi = std::min(worst_psi, r.Lf + r.Lg.dot(u_d) + r.alpha_h);
    if (r.Lg.norm() < cfg.lgh_eps) continue;  // degenerate rows cannot be enforced
    cs.push_back({r.Lg.transpose(), -(r.Lf + r.alpha_h)});
  }

  FilterResult out;
  out.psi = rows.empty() ? 0.0 : worst_psi;
  if (cs.empty()) {
    out.u = u_d;
    out.degenerate = !rows.empty();
    return out;
  }

  const int n = static_cast<int>(cs.size());
  const auto feasible = [&](const Vec2& u) {
    for (const auto& r : cs)
      if (r.a.dot(u) - r.b < -kFeasTol * (1.0 + std::abs(r.b))) return false;
    return true;
  };

  double best_obj = std::numeric_limits<double>::infinity();
  Vec2 best_u = u_d;
  int best_active = -1;
  const auto consider = [&](const Vec2& u, int active) {
    const double obj = (u - u_d).squaredNorm();
    if (obj < best_obj - kTieTol ||
        (std::abs(obj - best_obj) <= kTieTol && active < best_active)) {
      best_obj = obj;
      best_u = u;
      best_active = active;
    }
  };

  if (feasible(u_d)) consider(u_d, 0);

  for (int i = 0; i < n; ++i) {
    const double na2 = cs[i].a.squaredNorm();
    const double mu = (cs[i].b - cs[i].a.dot(u_d)) / na2;
    if (mu < -kFeasTol) continue;  // multiplier sign: active constraint must push
    const Vec2 u = u_d + mu * cs[i].a;
    if (feasible(u)) consider(u, 1);
  }

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Mat2 A;
      A.row(0) = cs[i].a.transpose();
      A.row(1) = cs[j].a.transpose();
      const double det = A.determinant();
      if (std::abs(det) < 1e-14 * cs[i].a.norm() * cs[j].a.norm()) continue;
      const Vec2 u = A.inverse() * Vec2(cs[i].b, cs[j].b);
      // u - u_d = mu_i a_i + mu_j a_j with mu >= 0 at a KKT point
      Mat2 G;
      G.col(0) = cs[i].a;
      G.col(1) = cs[j].a;
      const Vec2 mu = G.inverse() * (u - u_d);
      if (mu[0] < -kFeasTol || mu[1] < -kFeasTol) continue;
      if (feasible(u)) consider(u, 2);
    }
  }

  if (best_active < 0) throw InfeasibleQp("qp_filter: constraint set is empty");
  out.u = best_u;
  out.correction_norm = (best_u - u_d).norm();
  out.active_rows = best_active;
  return out;
}

}  // namespace icbf
