#include "icbf/barrier.hpp"

#include <cmath>

namespace icbf {

double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-std::min(z, kExpClamp));
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(std::max(z, -kExpClamp));
  return e / (1.0 + e);
}

double alpha_eval(double s, double gain) {
  if (!(gain > 0.0)) throw InvalidInput("alpha_eval: gain must be positive");
  return gain * s * std::abs(s);
}

namespace {

// grad of eigenvalue i over position: component c is v_i' dH_c v_i.
Vec2 eigval_grad(const InformationField& f, int i) {
  const Vec2 v = f.eig.vectors.col(i).head<2>();
  return Vec2(v.dot(f.dH[0] * v), v.dot(f.dH[1] * v));
}

bool spectrum_simple(const InformationField& f, const BarrierConfig& cfg) {
  return f.eig.gapmin > cfg.simple_tol * f.H.norm();
}

void fill_diagnostics(BarrierEval& out, const InformationField& f) {
  out.lam1 = f.eig.values[0];
  out.lam2 = f.eig.values[1];
  out.gap = out.lam2 - out.lam1;
}

}  // namespace

BarrierEval barrier_value_grad(BarrierKind kind, const InformationField& field,
                               const BarrierConfig& cfg, bool need_grad) {
  BarrierEval out;
  fill_diagnostics(out, field);
  const double sign = (cfg.mode == BarrierMode::Localize) ? 1.0 : -1.0;

  switch (kind) {
    case BarrierKind::RawMin: {
      out.h = sign * (out.lam1 - cfg.lambda_s);
      if (!need_grad) return out;
      if (!spectrum_simple(field, cfg))
        throw NonSimpleEigenvalue("h_raw: lambda_min not simple at evaluation point");
      out.grad = sign * eigval_grad(field, 0);
      return out;
    }
    case BarrierKind::SmoothMin: {
      const int n = field.eig.dim();
      VecX8 shifted(n);
      for (int i = 0; i < n; ++i) shifted[i] = field.eig.values[i] - cfg.lambda_s;
      const SmoothMin sm = smooth_min_weights(shifted, cfg.kappa);
      const double slack = std::log(static_cast<double>(n)) / cfg.kappa;
      // Localize: soft-min under-approximates min(lambda) - lambda_s.
      // Avoid: soft-min over-approximates nothing by itself, so subtract the
      // full slack; then h <= lambda_s - lambda_min everywhere.
      out.h = (cfg.mode == BarrierMode::Localize) ? sm.value : (-sm.value - slack);
      out.near_coalescence = !spectrum_simple(field, cfg);
      if (!need_grad) return out;
      Vec2 g = Vec2::Zero();
      for (int i = 0; i < n; ++i) g += sm.weights[i] * eigval_grad(field, i);
      out.grad = sign * g;
      return out;
    }
    case BarrierKind::Gap: {
      out.h = out.gap - cfg.delta_cross;
      if (!need_grad) return out;
      if (spectrum_simple(field, cfg)) {
        out.grad = eigval_grad(field, 1) - eigval_grad(field, 0);
      } else {
        // Eigenvectors are unreliable in the cluster; use the closed-form gap
        // g = sqrt((H00 - H11)^2 + 4 H01^2) of the characteristic polynomial.
        const double a = field.H(0, 0) - field.H(1, 1);
        const double b = field.H(0, 1);
        const double g = std::sqrt(a * a + 4.0 * b * b);
        if (g == 0.0)
          throw SafetyViolation("h_cross: exact eigenvalue coalescence", -1);
        for (int c = 0; c < 2; ++c) {
          const double da = field.dH[c](0, 0) - field.dH[c](1, 1);
          const double db = field.dH[c](0, 1);
          out.grad[c] = (a * da + 4.0 * b * db) / g;
        }
      }
      return out;
    }
  }
  throw InvalidInput("barrier_value_grad: unknown kind");
}

BarrierStencil barrier_stencil(const Vec2& p, MeasurementModel model,
                               const BeaconSet& beacons, double fd_step) {
  BarrierStencil st;
  st.fd_step = fd_step;
  st.center = information_field(p, model, beacons, false);
  int idx = 0;
  for (int c = 0; c < 2; ++c) {
    for (const double s : {fd_step, -fd_step}) {
      Vec2 q = p;
      q[c] += s;
      st.shift[idx++] = information_field(q, model, beacons, false);
    }
  }
  return st;
}

namespace {

Mat2 analytic_hessian(BarrierKind kind, const InformationField& field,
                      const BarrierConfig& cfg) {
  if (!field.d2H)
    throw InvalidInput("analytic barrier Hessian needs second field derivatives");
  const SymMatrix h2 = SymMatrix::from_matrix(field.H);
  const int n = field.eig.dim();

  // hess(lambda_i)(c,d) = v' d2H_cd v + 2 vdot_c' dH_d v, then symmetrized.
  std::array<Mat2, 2> lam_hess{};
  std::array<EigenRates, 2> rates;
  for (int c = 0; c < 2; ++c)
    rates[c] = eig_rates(h2, SymMatrix::from_matrix(field.dH[c]), field.eig,
                         cfg.simple_tol);
  for (int i = 0; i < n; ++i) {
    const Vec2 v = field.eig.vectors.col(i).head<2>();
    Mat2 hm;
    for (int c = 0; c < 2; ++c) {
      const Vec2 vdot = rates[c].vec_dot.col(i).head<2>();
      for (int d = 0; d < 2; ++d) {
        hm(c, d) = v.dot((*field.d2H)[c][d] * v) + 2.0 * vdot.dot(field.dH[d] * v);
      }
    }
    lam_hess[i] = 0.5 * (hm + hm.transpose());
  }

  const double sign = (cfg.mode == BarrierMode::Localize) ? 1.0 : -1.0;
  switch (kind) {
    case BarrierKind::RawMin:
      return sign * lam_hess[0];
    case BarrierKind::Gap:
      return lam_hess[1] - lam_hess[0];
    case BarrierKind::SmoothMin: {
      VecX8 shifted(n);
      for (int i = 0; i < n; ++i) shifted[i] = field.eig.values[i] - cfg.lambda_s;
      const SmoothMin sm = smooth_min_weights(shifted, cfg.kappa);
      Mat2 avg_hess = Mat2::Zero();
      Mat2 second_moment = Mat2::Zero();
      Vec2 mean_grad = Vec2::Zero();
      for (int i = 0; i < n; ++i) {
        const Vec2 gi = eigval_grad(field, i);
        avg_hess += sm.weights[i] * lam_hess[i];
        second_moment += sm.weights[i] * (gi * gi.transpose());
        mean_grad += sm.weights[i] * gi;
      }
      const Mat2 smooth_hess =
          avg_hess - cfg.kappa * (second_moment - mean_grad * mean_grad.transpose());
      return sign * smooth_hess;
    }
  }
  throw InvalidInput("analytic_hessian: unknown kind");
}

}  // namespace

BarrierEval barrier_from_stencil(BarrierKind kind, const BarrierStencil& st,
                                 const BarrierConfig& cfg) {
  BarrierEval out = barrier_value_grad(kind, st.center, cfg, true);
  Mat2 hess;
  for (int c = 0; c < 2; ++c) {
    const Vec2 gp = barrier_value_grad(kind, st.shift[2 * c], cfg, true).grad;
    const Vec2 gm = barrier_value_grad(kind, st.shift[2 * c + 1], cfg, true).grad;
    hess.col(c) = (gp - gm) / (2.0 * st.fd_step);
  }
  out.hess = 0.5 * (hess + hess.transpose());
  return out;
}

BarrierEval barrier_eval(BarrierKind kind, const Vec2& p, MeasurementModel model,
                         const BeaconSet& beacons, const BarrierConfig& cfg) {
  if (cfg.analytic_hessian) {
    const InformationField field = information_field(p, model, beacons, true);
    BarrierEval out = barrier_value_grad(kind, field, cfg, true);
    out.hess = analytic_hessian(kind, field, cfg);
    return out;
  }
  const BarrierStencil st = barrier_stencil(p, model, beacons, cfg.fd_step);
  return barrier_from_stencil(kind, st, cfg);
}

BarrierEval h_raw(const Vec2& p, MeasurementModel model, const BeaconSet& beacons,
                  const BarrierConfig& cfg) {
  return barrier_eval(BarrierKind::RawMin, p, model, beacons, cfg);
}

BarrierEval h_smooth(const Vec2& p, MeasurementModel model, const BeaconSet& beacons,
                     const BarrierConfig& cfg) {
  return barrier_eval(BarrierKind::SmoothMin, p, model, beacons, cfg);
}

BarrierEval h_cross(const Vec2& p, MeasurementModel model, const BeaconSet& beacons,
                    const BarrierConfig& cfg) {
  return barrier_eval(BarrierKind::Gap, p, model, beacons, cfg);
}

LambdaField lambda_field(const Vec2& p, MeasurementModel model, const BeaconSet& beacons,
                         const BarrierConfig& cfg) {
  BarrierConfig local = cfg;
  local.mode = BarrierMode::Localize;
  const BarrierEval be = barrier_eval(BarrierKind::RawMin, p, model, beacons, local);
  LambdaField out;
  out.lam = be.h + cfg.lambda_s;
  out.grad = be.grad;
  out.hess = be.hess;
  out.eig = information_field(p, model, beacons, false).eig;
  return out;
}

LiftedBarrier lift_rd2(const BarrierEval& base, const State& x, double delta) {
  const double zeta = base.grad.dot(x.v);
  const double sig = sigmoid(zeta);
  const double dsig = sig * (1.0 - sig);

  LiftedBarrier out;
  out.base_h = base.h;
  out.h_r = base.h * (1.0 + sig) - delta;
  const Vec2 dp = base.grad * (1.0 + sig) + base.h * dsig * (base.hess * x.v);
  const Vec2 dv = base.h * dsig * base.grad;
  out.grad_x << dp, dv;
  out.Lf = dp.dot(x.v);
  out.Lg = dv.transpose();
  return out;
}

}  // namespace icbf
