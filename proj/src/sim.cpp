#include "icbf/sim.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace icbf {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void ScenarioConfig::validate() const {
  beacons.validate();
  if (!(dt > 0.0)) throw InvalidInput("scenario: dt must be positive");
  if (!(t_final >= 0.0)) throw InvalidInput("scenario: t_final must be nonnegative");
  if (!(barrier.kappa > 0.0)) throw InvalidInput("scenario: kappa must be positive");
  if (!(barrier.lambda_s > 0.0)) throw InvalidInput("scenario: lambda_s must be positive");
  if (barrier.delta < 0.0) throw InvalidInput("scenario: delta must be nonnegative");
  if (!(barrier.delta_cross > 0.0))
    throw InvalidInput("scenario: delta_cross must be positive");
  if (!(barrier.alpha_analytic > 0.0) || !(barrier.alpha_anticross > 0.0) ||
      !(barrier.alpha_anticross_gap > 0.0))
    throw InvalidInput("scenario: alpha gains must be positive");
  if (!(filter.c > 0.0)) throw InvalidInput("scenario: filter c must be positive");
  if (!(nls.step > 0.0)) throw InvalidInput("scenario: nls step must be positive");
  if (!(violation_tol > 0.0)) throw InvalidInput("scenario: violation_tol must be positive");
  if (!x0.p.allFinite() || !x0.v.allFinite() || !goal.p.allFinite() || !goal.v.allFinite())
    throw InvalidInput("scenario: non-finite state");
  const auto n = noise_std.size();
  if (n != 0 && n != 1 && n != beacons.K())
    throw InvalidInput("scenario: noise_std must have 0, 1, or K entries");
  for (Eigen::Index i = 0; i < n; ++i)
    if (noise_std[i] < 0.0) throw InvalidInput("scenario: noise_std must be nonnegative");
}

State step_dynamics(const State& x, const Vec2& u, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("step_dynamics: dt must be positive");
  if (!u.allFinite()) throw InvalidInput("step_dynamics: non-finite control");
  State out;
  out.p = x.p + dt * x.v + 0.5 * dt * dt * u;
  out.v = x.v + dt * u;
  return out;
}

namespace {

struct BarrierStep {
  BarrierEval main;
  LiftedBarrier lift_main;
  std::optional<BarrierEval> gap;
  std::optional<LiftedBarrier> lift_gap;
  double h_raw_value = 0.0;
  bool ok = true;  // false when gradients were unavailable (baseline diagnostics)
};

BarrierStep eval_barriers(const Vec2& p_eval, const State& est_state,
                          const ScenarioConfig& cfg, bool tolerate_failure) {
  const BarrierConfig& bc = cfg.barrier;
  const BarrierKind main_kind = (bc.method == BarrierMethod::Analytic)
                                    ? BarrierKind::SmoothMin
                                    : BarrierKind::RawMin;
  BarrierStep out;
  try {
    if (bc.analytic_hessian) {
      out.main = barrier_eval(main_kind, p_eval, cfg.model, cfg.beacons, bc);
      if (bc.method == BarrierMethod::AntiCrossing)
        out.gap = barrier_eval(BarrierKind::Gap, p_eval, cfg.model, cfg.beacons, bc);
      const InformationField center = information_field(p_eval, cfg.model, cfg.beacons);
      out.h_raw_value = barrier_value_grad(BarrierKind::RawMin, center, bc, false).h;
    } else {
      const BarrierStencil st = barrier_stencil(p_eval, cfg.model, cfg.beacons, bc.fd_step);
      out.main = barrier_from_stencil(main_kind, st, bc);
      if (bc.method == BarrierMethod::AntiCrossing)
        out.gap = barrier_from_stencil(BarrierKind::Gap, st, bc);
      out.h_raw_value = barrier_value_grad(BarrierKind::RawMin, st.center, bc, false).h;
    }
  } catch (const NonSimpleEigenvalue&) {
    if (!tolerate_failure) throw;
    out.ok = false;
  } catch (const SafetyViolation&) {
    if (!tolerate_failure) throw;
    out.ok = false;
  }
  if (!out.ok) {
    // Keep value-level diagnostics; gradients are undefined in the cluster.
    const InformationField center = information_field(p_eval, cfg.model, cfg.beacons);
    out.main = barrier_value_grad(main_kind, center, bc, false);
    out.h_raw_value = barrier_value_grad(BarrierKind::RawMin, center, bc, false).h;
    if (bc.method == BarrierMethod::AntiCrossing)
      out.gap = barrier_value_grad(BarrierKind::Gap, center, bc, false);
  }
  out.lift_main = lift_rd2(out.main, est_state, bc.delta);
  if (out.gap) out.lift_gap = lift_rd2(*out.gap, est_state, bc.delta);
  return out;
}

TrajectoryLog run_loop(const ScenarioConfig& cfg, bool filtered) {
  cfg.validate();
  const LqrGain gain = lqr_gain(cfg.lqr_Q, cfg.lqr_R);
  const bool anticross = cfg.barrier.method == BarrierMethod::AntiCrossing;
  const bool wrap = cfg.model == MeasurementModel::Bearing;

  TrajectoryLog log;
  log.baseline = !filtered;

  // Startup: the configured initial state must sit strictly inside the safe set.
  if (filtered) {
    const State est0{cfg.x0.p, cfg.x0.v};
    const BarrierStep b0 = eval_barriers(cfg.x0.p, est0, cfg, false);
    const bool gap_ok = !b0.lift_gap || b0.lift_gap->h_r > 0.0;
    if (!(b0.lift_main.h_r > 0.0) || !gap_ok) {
      log.summary.aborted = true;
      log.summary.violation_step = 0;
      log.summary.abort_reason = "startup: x0 outside the safe set (h_r(x0) <= 0)";
      return log;
    }
  }

  const long N = static_cast<long>(std::floor(cfg.t_final / cfg.dt + 1e-9));
  log.records.reserve(N + 1);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const bool noisy = cfg.noise_std.size() > 0;

  State state = cfg.x0;
  Vec2 p_hat_prev = cfg.x0.p;

  RunSummary& s = log.summary;
  s.min_h_r = std::numeric_limits<double>::infinity();
  s.min_lam = std::numeric_limits<double>::infinity();
  s.max_lam = -std::numeric_limits<double>::infinity();
  s.min_audit = std::numeric_limits<double>::infinity();
  s.min_gap = std::numeric_limits<double>::infinity();

  double total_ms = 0.0;

  for (long k = 0; k <= N; ++k) {
    const auto t_start = std::chrono::steady_clock::now();
    StepRecord rec;
    rec.t = static_cast<double>(k) * cfg.dt;
    rec.x = state;

    // Measure at the true position, estimate, then control from the estimate.
    Eigen::VectorXd m = eval_model(cfg.model, state.p, cfg.beacons, 0).value;
    if (noisy) {
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double std_i = cfg.noise_std.size() == 1 ? cfg.noise_std[0] : cfg.noise_std[i];
        m[i] += std_i * gauss(rng);
        if (wrap) m[i] = wrap_residual(m[i]);
      }
    }

    const Vec2 p0 = cfg.nls.warm_start ? p_hat_prev : cfg.x0.p;
    const NlsResult nls = solve_nls(m, p0, cfg.nls, cfg.model, cfg.beacons);
    p_hat_prev = nls.p_hat;
    rec.p_hat = nls.p_hat;
    rec.nls_iters = nls.iters;
    rec.nls_converged = nls.converged;
    rec.nls_diverged = nls.diverged;

    const Vec2 p_eval = cfg.eval_at_truth ? state.p : nls.p_hat;
    const State est_state{p_eval, state.v};
    const BarrierStep bs = eval_barriers(p_eval, est_state, cfg, !filtered);

    rec.lam1 = bs.main.lam1;
    rec.lam2 = bs.main.lam2;
    rec.gap = bs.main.gap;
    rec.h_raw = bs.h_raw_value;
    rec.h_main = anticross ? (bs.gap ? bs.gap->h : kNaN) : bs.main.h;
    rec.h_r = bs.ok ? bs.lift_main.h_r : kNaN;
    rec.h_r_cross = (anticross && bs.lift_gap && bs.ok) ? bs.lift_gap->h_r : kNaN;

    rec.u_d = nominal_control(est_state, cfg.goal, gain, cfg.filter);

    std::vector<ConstraintRow> rows;
    if (bs.ok) {
      rows.push_back({bs.lift_main.Lf, bs.lift_main.Lg,
                      alpha_eval(bs.lift_main.h_r, cfg.barrier.alpha_main()), "main"});
      if (anticross && bs.lift_gap)
        rows.push_back({bs.lift_gap->Lf, bs.lift_gap->Lg,
                        alpha_eval(bs.lift_gap->h_r, cfg.barrier.alpha_anticross_gap),
                        "gap"});
    }

    if (filtered) {
      FilterResult fr;
      if (!anticross) {
        fr = softplus_filter(rec.u_d, rows[0], cfg.filter);
      } else {
        try {
          fr = qp_filter(rec.u_d, rows, cfg.filter);
        } catch (const InfeasibleQp&) {
          // fall back to the single most violated row, handled smoothly
          size_t worst = 0;
          double worst_psi = std::numeric_limits<double>::infinity();
          for (size_t i = 0; i < rows.size(); ++i) {
            const double psi_i = rows[i].Lf + rows[i].Lg.dot(rec.u_d) + rows[i].alpha_h;
            if (psi_i < worst_psi) {
              worst_psi = psi_i;
              worst = i;
            }
          }
          fr = softplus_filter(rec.u_d, rows[worst], cfg.filter);
          rec.qp_fallback = true;
        }
      }
      rec.u = fr.u;
      rec.psi = fr.psi;
      rec.filter_degenerate = fr.degenerate;
      s.max_correction = std::max(s.max_correction, fr.correction_norm);
    } else {
      rec.u = rec.u_d;
      double worst_psi = std::numeric_limits<double>::infinity();
      for (const auto& row : rows)
        worst_psi = std::min(worst_psi, row.Lf + row.Lg.dot(rec.u_d) + row.alpha_h);
      rec.psi = rows.empty() ? kNaN : worst_psi;
    }

    double audit = std::numeric_limits<double>::infinity();
    for (const auto& row : rows)
      audit = std::min(audit, row.Lf + row.Lg.dot(rec.u) + row.alpha_h);
    rec.audit = rows.empty() ? kNaN : audit;

    rec.step_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
            .count();
    total_ms += rec.step_ms;

    s.min_lam = std::min(s.min_lam, rec.lam1);
    s.max_lam = std::max(s.max_lam, rec.lam2);
    s.max_u_norm = std::max(s.max_u_norm, rec.u.norm());
    s.min_gap = std::min(s.min_gap, rec.gap);
    if (bs.ok) {
      s.min_h_r = std::min(s.min_h_r, bs.lift_main.h_r);
      if (anticross && bs.lift_gap) s.min_h_r = std::min(s.min_h_r, bs.lift_gap->h_r);
      if (!std::isnan(rec.audit)) s.min_audit = std::min(s.min_audit, rec.audit);
    }
    if (!s.violation_time && rec.h_raw < 0.0) s.violation_time = rec.t;

    log.records.push_back(rec);

    if (filtered) {
      const bool main_bad = bs.lift_main.h_r < -cfg.violation_tol;
      const bool gap_bad = bs.lift_gap && bs.lift_gap->h_r < -cfg.violation_tol;
      if (main_bad || gap_bad) {
        s.aborted = true;
        s.violation_step = k;
        s.abort_reason = main_bad ? "lifted barrier below -violation_tol"
                                  : "lifted gap barrier below -violation_tol";
        break;
      }
    }

    if (k < N) state = step_dynamics(state, rec.u, cfg.dt);
  }

  if (!log.records.empty()) s.mean_step_ms = total_ms / log.records.size();
  return log;
}

}  // namespace

TrajectoryLog simulate(const ScenarioConfig& cfg) { return run_loop(cfg, true); }

TrajectoryLog simulate_baseline(const ScenarioConfig& cfg) { return run_loop(cfg, false); }

}  // namespace icbf
