#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "icbf/field_map.hpp"
#include "icbf/nls.hpp"

using namespace icbf;

namespace {

BeaconSet scalene() {
  return BeaconSet{{Vec2(1.0, 4.5), Vec2(-4.0, -2.0), Vec2(3.5, -3.0)}};
}

}  // namespace

TEST_CASE("grid geometry is cell centered") {
  FieldGrid g;
  g.bounds = FieldBounds{0.0, 10.0, -5.0, 5.0};
  g.nx = 5;
  g.ny = 4;
  CHECK(g.cell_x(0) == doctest::Approx(1.0));
  CHECK(g.cell_x(4) == doctest::Approx(9.0));
  CHECK(g.cell_y(0) == doctest::Approx(-3.75));
  CHECK(g.cell_y(3) == doctest::Approx(3.75));
  CHECK(g.idx(2, 3) == 3 * 5 + 2);
}

TEST_CASE("parallel grid is bit-identical to the serial reference") {
  const BeaconSet bs = scalene();
  const FieldBounds b{-8.0, 8.0, -8.0, 8.0};
  for (const auto mm : {MeasurementModel::Range, MeasurementModel::Bearing}) {
    const FieldGrid s = lambda_grid_serial(mm, bs, b, 64, 48);
    const FieldGrid p = lambda_grid(mm, bs, b, 64, 48);
    REQUIRE(s.lam_min.size() == p.lam_min.size());
    for (size_t i = 0; i < s.lam_min.size(); ++i) {
      const bool nan_s = std::isnan(s.lam_min[i]);
      const bool nan_p = std::isnan(p.lam_min[i]);
      CHECK(nan_s == nan_p);
      if (!nan_s) {
        CHECK(s.lam_min[i] == p.lam_min[i]);
        CHECK(s.lam_max[i] == p.lam_max[i]);
      }
    }
  }
}

TEST_CASE("cells on a beacon hold NaN, the rest are ordered and finite") {
  // 2x2 grid over [-1,1]^2 has centers (+-0.5, +-0.5); park a beacon on one
  BeaconSet bs{{Vec2(0.5, 0.5), Vec2(5.0, 5.0)}};
  const FieldGrid g = lambda_grid_serial(MeasurementModel::Range, bs,
                                         FieldBounds{-1.0, 1.0, -1.0, 1.0}, 2, 2);
  int nan_cells = 0;
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) {
      const int at = g.idx(i, j);
      if (std::isnan(g.lam_min[at])) {
        ++nan_cells;
        CHECK(g.cell_x(i) == doctest::Approx(0.5));
        CHECK(g.cell_y(j) == doctest::Approx(0.5));
        CHECK(std::isnan(g.lam_max[at]));
      } else {
        CHECK(g.lam_min[at] >= 0.0);
        CHECK(g.lam_max[at] >= g.lam_min[at]);
      }
    }
  CHECK(nan_cells == 1);
}

TEST_CASE("grid cells agree with the information field spectrum") {
  const BeaconSet bs = scalene();
  const FieldBounds b{-6.0, 6.0, -6.0, 6.0};
  for (const auto mm : {MeasurementModel::Range, MeasurementModel::Bearing}) {
    const FieldGrid g = lambda_grid_serial(mm, bs, b, 16, 16);
    for (int j = 0; j < g.ny; j += 3)
      for (int i = 0; i < g.nx; i += 3) {
        const int at = g.idx(i, j);
        if (std::isnan(g.lam_min[at])) continue;
        const Vec2 p(g.cell_x(i), g.cell_y(j));
        const auto f = information_field(p, mm, bs, false);
        CHECK(g.lam_min[at] ==
              doctest::Approx(f.eig.values[0]).epsilon(1e-12).scale(1.0 + f.H.norm()));
        CHECK(g.lam_max[at] ==
              doctest::Approx(f.eig.values[1]).epsilon(1e-12).scale(1.0 + f.H.norm()));
      }
  }
}

TEST_CASE("grid input validation") {
  const BeaconSet bs = scalene();
  CHECK_THROWS_AS(lambda_grid_serial(MeasurementModel::Range, bs,
                                     FieldBounds{0.0, 1.0, 0.0, 1.0}, 0, 4),
                  InvalidInput);
  CHECK_THROWS_AS(lambda_grid_serial(MeasurementModel::Range, bs,
                                     FieldBounds{1.0, 0.0, 0.0, 1.0}, 4, 4),
                  InvalidInput);
  CHECK_THROWS_AS(
      lambda_grid_serial(MeasurementModel::Range, BeaconSet{},
                         FieldBounds{0.0, 1.0, 0.0, 1.0}, 4, 4),
      InvalidInput);
}
