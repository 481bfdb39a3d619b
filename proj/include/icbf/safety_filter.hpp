#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "icbf/types.hpp"

namespace icbf {

// Directions with actuation weaker than this are treated as degenerate.
constexpr double kLghEps = 1e-10;

// LQR gain for the planar double integrator xdot = (v, u). The per-axis
// structure admits a closed-form Riccati solution:
//   K_axis = [ sqrt(qp/rho), sqrt(qv/rho + 2 sqrt(qp/rho)) ].
struct LqrGain {
  Eigen::Matrix<double, 2, 4> K = Eigen::Matrix<double, 2, 4>::Zero();
  double riccati_residual = 0.0;  // ||A'P + PA - PBR^-1B'P + Q|| over both axes
};

// Q = diag(qp_x, qp_y, qv_x, qv_y) with qp > 0, qv >= 0; R = diag(r_x, r_y), PD.
// Off-diagonal weights would break the per-axis structure and are rejected.
LqrGain lqr_gain(const Eigen::Matrix4d& Q, const Mat2& R);

struct FilterConfig {
  double c = 1.0;  // softplus sharpness; larger tracks the QP solution closer
  std::optional<Vec2> u_max;  // per-axis symmetric saturation of the nominal
  double lgh_eps = kLghEps;
};

// u_d = -K (x - goal), saturated per axis before any filtering.
Vec2 nominal_control(const State& x, const State& goal, const LqrGain& gain,
                     const FilterConfig& cfg);

// One relative-degree-1 constraint Lf + Lg u + alpha_h >= 0.
struct ConstraintRow {
  double Lf = 0.0;
  Eigen::RowVector2d Lg = Eigen::RowVector2d::Zero();
  double alpha_h = 0.0;
  std::string label;
};

struct FilterResult {
  Vec2 u = Vec2::Zero();
  double psi = 0.0;              // constraint margin at the nominal control
  double correction_norm = 0.0;  // ||u - u_d||
  bool degenerate = false;       // actuation below lgh_eps; nominal passed through
  int active_rows = 0;
};

// Closed-form filter for a single constraint:
//   u = u_d + softplus_c(-psi) Lg' / ||Lg||^2,  psi = Lf + Lg u_d + alpha_h.
// Smooth in the state and never weaker than the QP clip max(0, -psi).
FilterResult softplus_filter(const Vec2& u_d, const ConstraintRow& row,
                             const FilterConfig& cfg);

// Minimum-norm correction subject to up to 4 constraint rows:
//   min ||u - u_d||^2  s.t.  Lg_i u >= -(Lf_i + alpha_i).
// Exact active-set enumeration with KKT multiplier checks.
// Throws InfeasibleQp when no control satisfies all rows.
FilterResult qp_filter(const Vec2& u_d, const std::vector<ConstraintRow>& rows,
                       const FilterConfig& cfg);

// softplus(z)/c with the sharpness folded in; overflow-safe for any z.
double softplus_c(double z, double c);

}  // namespace icbf
