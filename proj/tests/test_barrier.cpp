#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "icbf/barrier.hpp"

using namespace icbf;

namespace {

BeaconSet triangle() {
  return BeaconSet{{Vec2(0.0, 5.0), Vec2(-5.0, -3.0), Vec2(4.0, -4.0)}};
}

BarrierConfig base_cfg() {
  BarrierConfig cfg;
  cfg.lambda_s = 0.5;  // sits inside the range of lambda_min over the test box
  cfg.kappa = 10.0;
  cfg.delta = 0.01;
  cfg.delta_cross = 0.01;
  return cfg;
}

// Generic interior points with a comfortably simple spectrum.
struct PointSampler {
  std::mt19937 rng;
  std::uniform_real_distribution<double> u{-6.0, 6.0};
  BeaconSet bs = triangle();
  MeasurementModel mm;

  explicit PointSampler(unsigned seed, MeasurementModel m) : rng(seed), mm(m) {}

  Vec2 next() {
    for (;;) {
      const Vec2 p(u(rng), u(rng));
      bool ok = true;
      for (const auto& b : bs.positions)
        if ((p - b).norm() < 0.4) ok = false;
      if (!ok) continue;
      const auto f = information_field(p, mm, bs, false);
      if (f.eig.gapmin > 1e-3 * f.H.norm()) return p;
    }
  }
};

double barrier_value(BarrierKind kind, const Vec2& p, MeasurementModel mm,
                     const BeaconSet& bs, const BarrierConfig& cfg) {
  return barrier_value_grad(kind, information_field(p, mm, bs, false), cfg, false).h;
}

}  // namespace

TEST_CASE("sigmoid and alpha basics") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(1.0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-15));
  CHECK(sigmoid(1e6) == doctest::Approx(1.0));
  CHECK(sigmoid(-1e6) == doctest::Approx(0.0));
  CHECK(sigmoid(5.0) + sigmoid(-5.0) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK(alpha_eval(2.0, 10.0) == 40.0);
  CHECK(alpha_eval(-2.0, 10.0) == -40.0);
  CHECK(alpha_eval(0.0, 3.0) == 0.0);
  double prev = alpha_eval(-3.0, 7.0);
  for (double s = -2.5; s <= 3.0; s += 0.5) {
    const double cur = alpha_eval(s, 7.0);
    CHECK(cur > prev);
    prev = cur;
  }
  CHECK_THROWS_AS(alpha_eval(1.0, 0.0), InvalidInput);
}

TEST_CASE("barrier gradients match central differences of the value") {
  const BeaconSet bs = triangle();
  for (const auto mm : {MeasurementModel::Range, MeasurementModel::Bearing}) {
    PointSampler smp(401, mm);
    BarrierConfig cfg = base_cfg();
    if (mm == MeasurementModel::Bearing) {
      cfg.lambda_s = 0.01;
      cfg.kappa = 1000.0;
    }
    for (const auto mode : {BarrierMode::Localize, BarrierMode::Avoid}) {
      cfg.mode = mode;
      for (int draw = 0; draw < 40; ++draw) {
        const Vec2 p = smp.next();
        for (const auto kind : {BarrierKind::RawMin, BarrierKind::SmoothMin, BarrierKind::Gap}) {
          const auto be = barrier_value_grad(kind, information_field(p, mm, bs, false), cfg);
          const double h = 1e-6;
          for (int c = 0; c < 2; ++c) {
            Vec2 pp = p, pm = p;
            pp[c] += h;
            pm[c] -= h;
            const double fd = (barrier_value(kind, pp, mm, bs, cfg) -
                               barrier_value(kind, pm, mm, bs, cfg)) /
                              (2.0 * h);
            CHECK(std::abs(fd - be.grad[c]) <= 1e-5 * (1.0 + std::abs(be.grad[c])));
          }
        }
      }
    }
  }
}

TEST_CASE("finite-difference and eigenvector-rate hessians agree") {
  const BeaconSet bs = triangle();
  for (const auto mm : {MeasurementModel::Range, MeasurementModel::Bearing}) {
    PointSampler smp(402, mm);
    BarrierConfig fd_cfg = base_cfg();
    if (mm == MeasurementModel::Bearing) {
      fd_cfg.lambda_s = 0.01;
      fd_cfg.kappa = 100.0;
    }
    BarrierConfig an_cfg = fd_cfg;
    an_cfg.analytic_hessian = true;
    for (int draw = 0; draw < 15; ++draw) {
      const Vec2 p = smp.next();
      for (const auto kind : {BarrierKind::RawMin, BarrierKind::SmoothMin, BarrierKind::Gap}) {
        const auto fd = barrier_eval(kind, p, mm, bs, fd_cfg);
        const auto an = barrier_eval(kind, p, mm, bs, an_cfg);
        CHECK(fd.h == an.h);
        CHECK((fd.grad - an.grad).norm() <= 1e-12 * (1.0 + an.grad.norm()));
        CHECK((fd.hess - an.hess).norm() <= 1e-4 * (1.0 + an.hess.norm()));
        CHECK((fd.hess - fd.hess.transpose()).norm() <= 1e-12 * (1.0 + fd.hess.norm()));
      }
    }
  }
}

TEST_CASE("localize and avoid raw barriers are exact negatives") {
  const BeaconSet bs = triangle();
  PointSampler smp(403, MeasurementModel::Range);
  BarrierConfig cfg = base_cfg();
  for (int draw = 0; draw < 20; ++draw) {
    const Vec2 p = smp.next();
    cfg.mode = BarrierMode::Localize;
    const auto hl = h_raw(p, MeasurementModel::Range, bs, cfg);
    cfg.mode = BarrierMode::Avoid;
    const auto ha = h_raw(p, MeasurementModel::Range, bs, cfg);
    CHECK(hl.h + ha.h == 0.0);
    CHECK((hl.grad + ha.grad).norm() == 0.0);
  }
}

TEST_CASE("smooth barrier brackets the raw barrier from below") {
  const BeaconSet bs = triangle();
  for (const auto mm : {MeasurementModel::Range, MeasurementModel::Bearing}) {
    PointSampler smp(404, mm);
    for (const double kappa : {1.0, 10.0, 1000.0}) {
      BarrierConfig cfg = base_cfg();
      cfg.kappa = kappa;
      if (mm == MeasurementModel::Bearing) cfg.lambda_s = 0.01;
      const double slack = std::log(2.0) / kappa;
      for (const auto mode : {BarrierMode::Localize, BarrierMode::Avoid}) {
        cfg.mode = mode;
        for (int draw = 0; draw < 50; ++draw) {
          const Vec2 p = smp.next();
          const double raw = barrier_value(BarrierKind::RawMin, p, mm, bs, cfg);
          const double smooth = barrier_value(BarrierKind::SmoothMin, p, mm, bs, cfg);
          CHECK(smooth <= raw + 1e-12);
          CHECK(smooth >= raw - slack - 1e-12);
        }
      }
    }
  }
}

TEST_CASE("gap barrier diagnostics are consistent") {
  const BeaconSet bs = triangle();
  PointSampler smp(405, MeasurementModel::Range);
  const BarrierConfig cfg = base_cfg();
  for (int draw = 0; draw < 20; ++draw) {
    const Vec2 p = smp.next();
    const auto be = h_cross(p, MeasurementModel::Range, bs, cfg);
    CHECK(be.gap == be.lam2 - be.lam1);
    CHECK(be.h == be.gap - cfg.delta_cross);
    CHECK(be.lam2 >= be.lam1);
  }
}

TEST_CASE("coalescent spectrum: values survive, gradients refuse or fall back") {
  InformationField f;
  f.H = Mat2::Identity();
  f.dH[0] << 0.3, 0.1, 0.1, -0.2;
  f.dH[1] << -0.5, 0.0, 0.0, 0.4;
  f.eig = eig_sym(SymMatrix::from_matrix(f.H));
  REQUIRE(f.eig.gapmin == 0.0);
  const BarrierConfig cfg = base_cfg();

  const auto gap_val = barrier_value_grad(BarrierKind::Gap, f, cfg, false);
  CHECK(gap_val.h == -cfg.delta_cross);
  CHECK_THROWS_AS(barrier_value_grad(BarrierKind::Gap, f, cfg, true), SafetyViolation);
  CHECK_THROWS_AS(barrier_value_grad(BarrierKind::RawMin, f, cfg, true), NonSimpleEigenvalue);

  const auto sm = barrier_value_grad(BarrierKind::SmoothMin, f, cfg, true);
  CHECK(sm.near_coalescence);
  CHECK(std::isfinite(sm.h));
  // equal weights average the quadratic forms into trace/2, basis independent
  CHECK(sm.grad[0] == doctest::Approx(0.5 * f.dH[0].trace()).epsilon(1e-12));
  CHECK(sm.grad[1] == doctest::Approx(0.5 * f.dH[1].trace()).epsilon(1e-12));

  // an almost-coalescent diagonal still has a usable closed-form gap gradient
  InformationField g = f;
  g.H(1, 1) = 1.0 + 1e-12;
  g.eig = eig_sym(SymMatrix::from_matrix(g.H));
  const auto gg = barrier_value_grad(BarrierKind::Gap, g, cfg, true);
  CHECK(gg.grad.allFinite());
}

TEST_CASE("lambda field reports the smallest information eigenvalue") {
  const BeaconSet bs = triangle();
  PointSampler smp(406, MeasurementModel::Range);
  const BarrierConfig cfg = base_cfg();
  for (int draw = 0; draw < 10; ++draw) {
    const Vec2 p = smp.next();
    const auto lf = lambda_field(p, MeasurementModel::Range, bs, cfg);
    const auto f = information_field(p, MeasurementModel::Range, bs, false);
    CHECK(lf.lam == doctest::Approx(f.eig.values[0]).epsilon(1e-14));
    const double h = 1e-6;
    for (int c = 0; c < 2; ++c) {
      Vec2 pp = p, pm = p;
      pp[c] += h;
      pm[c] -= h;
      const double fd = (information_field(pp, MeasurementModel::Range, bs, false).eig.values[0] -
                         information_field(pm, MeasurementModel::Range, bs, false).eig.values[0]) /
                        (2.0 * h);
      CHECK(std::abs(fd - lf.grad[c]) <= 1e-5 * (1.0 + std::abs(lf.grad[c])));
    }
  }
}

TEST_CASE("lifted barrier matches state-space differences") {
  const BeaconSet bs = triangle();
  BarrierConfig cfg = base_cfg();
  PointSampler smp(407, MeasurementModel::Range);
  const double delta = cfg.delta;

  auto lift_at = [&](const Vec2& p, const Vec2& v) {
    const auto be = h_smooth(p, MeasurementModel::Range, bs, cfg);
    State x;
    x.p = p;
    x.v = v;
    return lift_rd2(be, x, delta);
  };

  for (int draw = 0; draw < 10; ++draw) {
    const Vec2 p = smp.next();
    const Vec2 v(0.7, -0.4);
    const auto lb = lift_at(p, v);

    const double h = 1e-6;
    for (int c = 0; c < 2; ++c) {
      Vec2 pp = p, pm = p;
      pp[c] += h;
      pm[c] -= h;
      const double fd = (lift_at(pp, v).h_r - lift_at(pm, v).h_r) / (2.0 * h);
      CHECK(std::abs(fd - lb.grad_x[c]) <= 2e-4 * (1.0 + std::abs(lb.grad_x[c])));
    }
    for (int c = 0; c < 2; ++c) {
      Vec2 vp = v, vm = v;
      vp[c] += h;
      vm[c] -= h;
      const double fd = (lift_at(p, vp).h_r - lift_at(p, vm).h_r) / (2.0 * h);
      CHECK(std::abs(fd - lb.grad_x[2 + c]) <= 1e-6 * (1.0 + std::abs(lb.grad_x[2 + c])));
      CHECK(lb.Lg[c] == lb.grad_x[2 + c]);
    }

    // along the double-integrator flow, d h_r / dt = Lf + Lg u
    const Vec2 u_in(0.3, -0.8);
    const double dt = 1e-6;
    const double forward = lift_at(p + dt * v, v + dt * u_in).h_r;
    const double backward = lift_at(p - dt * v, v - dt * u_in).h_r;
    const double fd_rate = (forward - backward) / (2.0 * dt);
    const double an_rate = lb.Lf + (lb.Lg * u_in)(0);
    CHECK(std::abs(fd_rate - an_rate) <= 2e-4 * (1.0 + std::abs(an_rate)));
  }
}

TEST_CASE("nonnegative lifted barrier forces a margin on the base barrier") {
  const BeaconSet bs = triangle();
  BarrierConfig cfg = base_cfg();
  std::mt19937 rng(408);
  std::uniform_real_distribution<double> uv(-3.0, 3.0);
  PointSampler smp(409, MeasurementModel::Range);
  int nonneg_seen = 0;
  for (int draw = 0; draw < 300; ++draw) {
    const Vec2 p = smp.next();
    const auto be = h_smooth(p, MeasurementModel::Range, bs, cfg);
    State x;
    x.p = p;
    x.v = Vec2(uv(rng), uv(rng));
    const auto lb = lift_rd2(be, x, cfg.delta);
    if (lb.h_r >= 0.0) {
      ++nonneg_seen;
      CHECK(be.h >= cfg.delta / 2.0 - 1e-15);
    }
  }
  CHECK(nonneg_seen > 20);  // the property must actually get exercised
}
