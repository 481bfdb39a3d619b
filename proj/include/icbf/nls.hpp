#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>
#include <vector>

#include "icbf/eigen_calculus.hpp"
#include "icbf/measurement.hpp"
#include "icbf/types.hpp"

namespace icbf {

// Weighted localization cost J(p) = sum_k r_k^2 / sigma_k(p) with
// r_k = m_k - mhat_k(p) (angle residuals wrapped). Derivatives include the
// chain terms through sigma(p).
struct CostEval {
  double J = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
  int order = 0;
};

// Reusable scratch buffers so the solver's inner loop does not allocate.
struct CostWorkspace {
  ModelDerivs model;
  CovarianceDerivs cov;
};

CostEval cost_eval(const Vec2& p, const Eigen::VectorXd& m, MeasurementModel model,
                   const BeaconSet& beacons, int order);
CostEval cost_eval_into(CostWorkspace& ws, const Vec2& p, const Eigen::VectorXd& m,
                        MeasurementModel model, const BeaconSet& beacons, int order);

struct NlsOptions {
  double step = 1e-2;        // 1.0 suits the unit-covariance bearing model
  int max_iters = 500;
  double grad_tol = 1e-10;
  bool warm_start = true;    // callers seed p0 with the previous estimate
  bool record_trace = false; // keep per-iterate J for descent diagnostics
};

struct NlsResult {
  Vec2 p_hat = Vec2::Zero();
  int iters = 0;
  bool converged = false;
  bool diverged = false;     // J rose for 10 consecutive iterates
  std::vector<double> j_trace;
};

// Fixed-step gradient descent from p0. Returns the last iterate even when the
// iteration cap or the divergence guard fires.
NlsResult solve_nls(const Eigen::VectorXd& m, const Vec2& p0, const NlsOptions& opts,
                    MeasurementModel model, const BeaconSet& beacons);

// Curvature of the localization cost at zero residual, as a field over position:
//   H(p)  = hessian of J at m = mhat(p)  (evaluated through cost_eval itself)
//   dH[c] = dH/dp_c; d2H[c][d] = d2H/dp_c dp_d (optional, order-2 closed form)
//   eig   = eigendecomposition of H
struct InformationField {
  Mat2 H;
  std::array<Mat2, 2> dH;
  std::optional<std::array<std::array<Mat2, 2>, 2>> d2H;
  EigenSystem eig;
};

InformationField information_field(const Vec2& p, MeasurementModel model,
                                   const BeaconSet& beacons, bool with_second = false);

}  // namespace icbf
