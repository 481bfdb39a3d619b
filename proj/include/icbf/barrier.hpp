#pragma once

#include <Eigen/Core>

#include "icbf/eigen_calculus.hpp"
#include "icbf/nls.hpp"
#include "icbf/types.hpp"

namespace icbf {

// Localize keeps lambda_min above lambda_s, Avoid keeps it below.
enum class BarrierMode { Localize, Avoid };

// Analytic: smoothed minimum eigenvalue barrier with a softplus filter.
// AntiCrossing: raw eigenvalue barrier plus a gap barrier, filtered by a QP.
enum class BarrierMethod { Analytic, AntiCrossing };

struct BarrierConfig {
  double lambda_s = 5.0;
  double kappa = 1.0;         // smooth-min sharpness
  double delta = 0.01;        // relative-degree lift margin
  double delta_cross = 0.01;  // minimum admissible eigenvalue gap
  double alpha_analytic = 10.0;
  double alpha_anticross = 10.0;
  double alpha_anticross_gap = 100.0;
  BarrierMode mode = BarrierMode::Localize;
  BarrierMethod method = BarrierMethod::Analytic;
  double simple_tol = kSimpleTol;
  double fd_step = 1e-5;          // central-difference step for barrier Hessians
  bool analytic_hessian = false;  // compose Hessians from eigenvector rates instead

  double alpha_main() const {
    return method == BarrierMethod::Analytic ? alpha_analytic : alpha_anticross;
  }
};

// Minimum eigenvalue of the information matrix as a differentiable field.
struct LambdaField {
  double lam = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
  EigenSystem eig;
};

LambdaField lambda_field(const Vec2& p, MeasurementModel model, const BeaconSet& beacons,
                         const BarrierConfig& cfg);

struct BarrierEval {
  double h = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
  double lam1 = 0.0;  // smallest eigenvalue
  double lam2 = 0.0;  // largest eigenvalue
  double gap = 0.0;
  bool near_coalescence = false;  // smooth path evaluated inside the simple_tol cluster
};

enum class BarrierKind { RawMin, SmoothMin, Gap };

// Shared field evaluations at p and the four central-difference shifts, so
// several barriers at the same point reuse one set of model evaluations.
struct BarrierStencil {
  InformationField center;
  std::array<InformationField, 4> shift;  // +x, -x, +y, -y
  double fd_step = 1e-5;
};

BarrierStencil barrier_stencil(const Vec2& p, MeasurementModel model,
                               const BeaconSet& beacons, double fd_step);
BarrierEval barrier_from_stencil(BarrierKind kind, const BarrierStencil& st,
                                 const BarrierConfig& cfg);

// Value and gradient from an already evaluated information field.
//   RawMin:    h = +-(lambda_min - lambda_s); needs a simple lambda_min.
//   SmoothMin: log-sum-exp under-approximation; Avoid mode subtracts the
//              ln(n)/kappa slack so h <= lambda_s - lambda_min still holds.
//   Gap:       h = (lambda_2 - lambda_1) - delta_cross; falls back to the
//              characteristic-polynomial gap when eigenvectors are unreliable.
// With need_grad = false only values and diagnostics are filled (never throws
// for coalescent spectra).
BarrierEval barrier_value_grad(BarrierKind kind, const InformationField& field,
                               const BarrierConfig& cfg, bool need_grad = true);

// Full evaluation including the position Hessian (central differences of the
// analytic gradient by default, eigenvector-rate composition when
// cfg.analytic_hessian is set).
BarrierEval barrier_eval(BarrierKind kind, const Vec2& p, MeasurementModel model,
                         const BeaconSet& beacons, const BarrierConfig& cfg);

BarrierEval h_raw(const Vec2& p, MeasurementModel model, const BeaconSet& beacons,
                  const BarrierConfig& cfg);
BarrierEval h_smooth(const Vec2& p, MeasurementModel model, const BeaconSet& beacons,
                     const BarrierConfig& cfg);
BarrierEval h_cross(const Vec2& p, MeasurementModel model, const BeaconSet& beacons,
                    const BarrierConfig& cfg);

// Position barriers have relative degree 2 under the double integrator, so the
// filtered constraint acts on
//   h_r(p, v) = h(p) (1 + sigmoid(grad_h . v)) - delta
// which has relative degree 1 wherever h_r >= 0 (there h >= delta/2 > 0).
struct LiftedBarrier {
  double h_r = 0.0;
  double base_h = 0.0;
  Vec4 grad_x = Vec4::Zero();          // d h_r / d(p, v)
  double Lf = 0.0;                     // grad_p h_r . v
  Eigen::RowVector2d Lg = Eigen::RowVector2d::Zero();  // d h_r / d v
};

LiftedBarrier lift_rd2(const BarrierEval& base, const State& x, double delta);

// Extended class-K rate: alpha(s) = gain * s * |s| (odd, strictly increasing).
double alpha_eval(double s, double gain);

double sigmoid(double z);

}  // namespace icbf
