#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "icbf/barrier.hpp"
#include "icbf/measurement.hpp"
#include "icbf/nls.hpp"
#include "icbf/safety_filter.hpp"
#include "icbf/types.hpp"

namespace icbf {

// A lifted barrier dipping below -violation_tol aborts the run.
constexpr double kViolationTol = 1e-3;

struct ScenarioConfig {
  std::string name = "custom";
  MeasurementModel model = MeasurementModel::Range;
  BeaconSet beacons;
  BarrierConfig barrier;
  FilterConfig filter;
  NlsOptions nls;
  Eigen::Matrix4d lqr_Q = Eigen::Matrix4d::Identity();
  Mat2 lqr_R = Mat2::Identity();
  State x0;
  State goal;
  double dt = 1e-3;
  double t_final = 10.0;
  // Empty: noiseless. One entry: common std. K entries: per-channel stds.
  Eigen::VectorXd noise_std;
  std::uint64_t seed = 0;
  bool eval_at_truth = false;  // diagnostic: bypass the estimator in the barrier
  double violation_tol = kViolationTol;

  void validate() const;
};

struct StepRecord {
  double t = 0.0;
  State x;
  Vec2 p_hat = Vec2::Zero();
  Vec2 u_d = Vec2::Zero();
  Vec2 u = Vec2::Zero();
  double lam1 = 0.0;
  double lam2 = 0.0;
  double gap = 0.0;
  double h_raw = 0.0;   // mode-signed raw eigenvalue barrier
  double h_main = 0.0;  // smooth barrier (Analytic) or gap barrier (AntiCrossing)
  double h_r = 0.0;     // lifted main barrier
  double h_r_cross = 0.0;  // lifted gap barrier; NaN outside AntiCrossing
  double psi = 0.0;     // tightest constraint margin at the nominal control
  double audit = 0.0;   // tightest constraint margin at the applied control
  double step_ms = 0.0;
  int nls_iters = 0;
  bool nls_converged = true;
  bool nls_diverged = false;
  bool filter_degenerate = false;
  bool qp_fallback = false;
};

struct RunSummary {
  double min_h_r = 0.0;
  double min_lam = 0.0;
  double max_lam = 0.0;
  double max_u_norm = 0.0;
  double max_correction = 0.0;
  double min_audit = 0.0;
  double min_gap = 0.0;
  double mean_step_ms = 0.0;
  std::optional<double> violation_time;  // first time the raw barrier went negative
  bool aborted = false;
  long violation_step = -1;
  std::string abort_reason;
};

struct TrajectoryLog {
  std::vector<StepRecord> records;
  RunSummary summary;
  bool baseline = false;
};

// Exact zero-order-hold step of the double integrator.
State step_dynamics(const State& x, const Vec2& u, double dt);

// Closed loop with the configured barrier filter in place.
TrajectoryLog simulate(const ScenarioConfig& cfg);

// Same loop with the raw LQR control applied; violations are recorded, not fatal.
TrajectoryLog simulate_baseline(const ScenarioConfig& cfg);

}  // namespace icbf
