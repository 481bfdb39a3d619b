#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "icbf/nls.hpp"

using namespace icbf;

namespace {

BeaconSet triangle() {
  return BeaconSet{{Vec2(0.0, 5.0), Vec2(-5.0, -3.0), Vec2(4.0, -4.0)}};
}

Eigen::VectorXd measure_at(const Vec2& p, MeasurementModel mm, const BeaconSet& bs) {
  return eval_model(mm, p, bs, 0).value;
}

bool clear_of_beacons(const Vec2& p, const BeaconSet& bs, double r = 0.3) {
  for (const auto& b : bs.positions)
    if ((p - b).norm() < r) return false;
  return true;
}

}  // namespace

TEST_CASE("cost is zero at the generating position") {
  const BeaconSet bs = triangle();
  for (const auto mm : {MeasurementModel::Range, MeasurementModel::Bearing}) {
    const Vec2 p(1.2, -0.7);
    const auto ce = cost_eval(p, measure_at(p, mm, bs), mm, bs, 2);
    CHECK(ce.J == 0.0);  // residuals are exactly zero, so no rounding enters
    CHECK(ce.grad.norm() <= 1e-14);
    // curvature still positive semidefinite
    const auto es = eig_sym(SymMatrix::from_matrix(ce.hess));
    CHECK(es.values[0] >= -1e-12);
  }
}

TEST_CASE("cost gradient and hessian match central differences") {
  std::mt19937 rng(301);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  const BeaconSet bs = triangle();

  for (const auto mm : {MeasurementModel::Range, MeasurementModel::Bearing}) {
    int tested = 0;
    while (tested < 100) {
      const Vec2 p_true(u(rng), u(rng));
      const Vec2 p = p_true + Vec2(0.2, -0.15);  // nonzero residuals engage chain terms
      if (!clear_of_beacons(p_true, bs) || !clear_of_beacons(p, bs)) continue;
      ++tested;
      const Eigen::VectorXd m = measure_at(p_true, mm, bs);
      const auto ce = cost_eval(p, m, mm, bs, 2);

      const double h1 = 1e-6;
      for (int c = 0; c < 2; ++c) {
        Vec2 pp = p, pm = p;
        pp[c] += h1;
        pm[c] -= h1;
        const double fd = (cost_eval(pp, m, mm, bs, 0).J - cost_eval(pm, m, mm, bs, 0).J) /
                          (2.0 * h1);
        CHECK(std::abs(fd - ce.grad[c]) <= 1e-6 * (1.0 + std::abs(ce.grad[c])));
      }

      const double h2 = 1e-5;
      for (int c = 0; c < 2; ++c) {
        Vec2 pp = p, pm = p;
        pp[c] += h2;
        pm[c] -= h2;
        const Vec2 fd = (cost_eval(pp, m, mm, bs, 1).grad - cost_eval(pm, m, mm, bs, 1).grad) /
                        (2.0 * h2);
        CHECK((fd - ce.hess.col(c)).norm() <= 1e-4 * (1.0 + ce.hess.norm()));
      }
      CHECK(std::abs(ce.hess(0, 1) - ce.hess(1, 0)) <= 1e-12 * (1.0 + ce.hess.norm()));
    }
  }
}

TEST_CASE("cost_eval_into matches cost_eval bitwise") {
  const BeaconSet bs = triangle();
  CostWorkspace ws;
  const Vec2 p(2.0, 1.0);
  const Eigen::VectorXd m = measure_at(Vec2(1.5, 0.5), MeasurementModel::Range, bs);
  for (int rep = 0; rep < 3; ++rep) {  // workspace reuse must not leak state
    const auto a = cost_eval(p, m, MeasurementModel::Range, bs, 2);
    const auto b = cost_eval_into(ws, p, m, MeasurementModel::Range, bs, 2);
    CHECK(a.J == b.J);
    CHECK((a.grad - b.grad).norm() == 0.0);
    CHECK((a.hess - b.hess).norm() == 0.0);
  }
}

TEST_CASE("single range beacon: curvature closed form and flat direction") {
  // At zero residual H = 2 u u' / sigma(r): rank one, tangential eigenvalue 0.
  const BeaconSet bs{{Vec2(0.0, 0.0)}};
  const Vec2 p(3.0, 4.0);
  const auto fld = information_field(p, MeasurementModel::Range, bs, false);
  const Vec2 u = p.normalized();
  const double sigma = 1.0 + std::exp(5.0 - 10.0);
  const Mat2 expect = 2.0 / sigma * (u * u.transpose());
  CHECK((fld.H - expect).norm() <= 1e-14 * expect.norm());
  CHECK(fld.eig.values[0] <= 1e-12);
  CHECK(fld.eig.values[1] == doctest::Approx(2.0 / sigma).epsilon(1e-12));
}

TEST_CASE("bearing curvature is isotropic at an equilateral circumcenter") {
  // Beacons on a circle of radius R at 120 degree spacing; at the center
  // H = 2 * (3/2) / R^2 * I.
  const double R = 4.0;
  BeaconSet bs;
  for (int k = 0; k < 3; ++k) {
    const double th = M_PI / 2.0 + 2.0 * M_PI * k / 3.0;
    bs.positions.push_back(R * Vec2(std::cos(th), std::sin(th)));
  }
  const auto fld = information_field(Vec2::Zero(), MeasurementModel::Bearing, bs, false);
  const Mat2 expect = (3.0 / (R * R)) * Mat2::Identity();
  CHECK((fld.H - expect).norm() <= 1e-12 * expect.norm());
}

TEST_CASE("information field H agrees with the cost hessian bitwise") {
  const BeaconSet bs = triangle();
  std::mt19937 rng(302);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (const auto mm : {MeasurementModel::Range, MeasurementModel::Bearing}) {
    int tested = 0;
    while (tested < 25) {
      const Vec2 p(u(rng), u(rng));
      if (!clear_of_beacons(p, bs)) continue;
      ++tested;
      const auto fld = information_field(p, mm, bs, false);
      const auto ce = cost_eval(p, measure_at(p, mm, bs), mm, bs, 2);
      CHECK((fld.H - ce.hess).norm() == 0.0);
      // eigensystem belongs to H
      for (int i = 0; i < 2; ++i) {
        const Vec2 v = fld.eig.vectors.col(i);
        CHECK((fld.H * v - fld.eig.values[i] * v).norm() <= 1e-10 * (1.0 + fld.H.norm()));
      }
    }
  }
}

TEST_CASE("information field derivatives match central differences") {
  const BeaconSet bs = triangle();
  std::mt19937 rng(303);
  std::uniform_real_distribution<double> u(-6.0, 6.0);

  for (const auto mm : {MeasurementModel::Range, MeasurementModel::Bearing}) {
    int tested = 0;
    while (tested < 60) {
      const Vec2 p(u(rng), u(rng));
      if (!clear_of_beacons(p, bs)) continue;
      ++tested;
      const auto fld = information_field(p, mm, bs, true);
      REQUIRE(fld.d2H.has_value());

      const double h = 1e-5;
      for (int c = 0; c < 2; ++c) {
        Vec2 pp = p, pm = p;
        pp[c] += h;
        pm[c] -= h;
        const Mat2 fd = (information_field(pp, mm, bs, false).H -
                         information_field(pm, mm, bs, false).H) /
                        (2.0 * h);
        CHECK((fd - fld.dH[c]).norm() <= 1e-4 * (1.0 + fld.dH[c].norm()));
      }

      const double h2 = 1e-4;
      for (int c = 0; c < 2; ++c) {
        Vec2 pp = p, pm = p;
        pp[c] += h2;
        pm[c] -= h2;
        const auto fp = information_field(pp, mm, bs, false);
        const auto fm = information_field(pm, mm, bs, false);
        for (int d = 0; d < 2; ++d) {
          const Mat2 fd = (fp.dH[d] - fm.dH[d]) / (2.0 * h2);
          const Mat2& an = (*fld.d2H)[c][d];
          CHECK((fd - an).norm() <= 1e-3 * (1.0 + an.norm()));
        }
      }
      // symmetry of mixed partials
      CHECK((((*fld.d2H)[0][1]) - ((*fld.d2H)[1][0])).norm() <=
            1e-10 * (1.0 + (*fld.d2H)[0][1].norm()));
    }
  }
}

TEST_CASE("solver converges to the generating position") {
  const BeaconSet bs = triangle();
  NlsOptions opts;
  opts.record_trace = true;
  opts.max_iters = 5000;
  for (const auto mm : {MeasurementModel::Range, MeasurementModel::Bearing}) {
    opts.step = (mm == MeasurementModel::Range) ? 5e-2 : 1.0;
    const Vec2 p_true(1.0, 0.5);
    const Eigen::VectorXd m = measure_at(p_true, mm, bs);
    const auto res = solve_nls(m, p_true + Vec2(0.3, -0.2), opts, mm, bs);
    CHECK(res.converged);
    CHECK_FALSE(res.diverged);
    CHECK((res.p_hat - p_true).norm() <= 1e-6);
    REQUIRE(res.j_trace.size() >= 2);
    CHECK(res.j_trace.back() <= res.j_trace.front());
  }
}

TEST_CASE("divergence guard returns instead of spinning") {
  const BeaconSet bs = triangle();
  const Vec2 p_true(1.0, 0.5);

  // A step large enough to overflow the cost trips the guard and keeps the
  // last finite iterate.
  NlsOptions opts;
  opts.step = 1e300;
  const auto res =
      solve_nls(measure_at(p_true, MeasurementModel::Range, bs), p_true + Vec2(0.4, 0.0), opts,
                MeasurementModel::Range, bs);
  CHECK(res.diverged);
  CHECK_FALSE(res.converged);
  CHECK(res.p_hat.allFinite());

  // A merely unstable step must still terminate within the iteration budget;
  // the range cost flattens far out, so it need not register as divergence.
  opts.step = 50.0;
  opts.max_iters = 300;
  const auto wild =
      solve_nls(measure_at(p_true, MeasurementModel::Range, bs), p_true + Vec2(0.4, 0.0), opts,
                MeasurementModel::Range, bs);
  CHECK(wild.iters <= 300);
  CHECK(wild.p_hat.allFinite());
}

TEST_CASE("single range beacon has a circle of minimizers") {
  // Distinct starts settle on distinct zero-cost points at the measured radius.
  const BeaconSet bs{{Vec2(0.0, 0.0)}};
  Eigen::VectorXd m(1);
  m[0] = 5.0;
  NlsOptions opts;
  opts.max_iters = 2000;
  const auto a = solve_nls(m, Vec2(6.0, 0.5), opts, MeasurementModel::Range, bs);
  const auto b = solve_nls(m, Vec2(-0.5, 6.0), opts, MeasurementModel::Range, bs);
  CHECK(a.converged);
  CHECK(b.converged);
  CHECK(a.p_hat.norm() == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(b.p_hat.norm() == doctest::Approx(5.0).epsilon(1e-6));
  CHECK((a.p_hat - b.p_hat).norm() > 1.0);
}
