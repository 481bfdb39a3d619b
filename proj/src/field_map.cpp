#include "icbf/field_map.hpp"

#include <cmath>
#include <limits>

#include "icbf/eigen_calculus.hpp"

namespace icbf {

namespace {

// Zero-residual information matrix, 2 sum_k D_k D_k' / sigma_k. Evaluating the
// closed form directly keeps grid cells independent and cheap.
bool information_at(const Vec2& p, MeasurementModel model, const BeaconSet& beacons,
                    Mat2& H) {
  H.setZero();
  for (const auto& b : beacons.positions) {
    const Vec2 d = p - b;
    const double r = d.norm();
    if (r < kBeaconGuardRadius) return false;
    Vec2 D;
    double sigma;
    if (model == MeasurementModel::Range) {
      D = d / r;
      sigma = 1.0 + std::exp(std::min(r - 10.0, kExpClamp));
    } else {
      D = Vec2(-d.y(), d.x()) / (r * r);
      sigma = 1.0;
    }
    H += (2.0 / sigma) * (D * D.transpose());
  }
  return true;
}

void fill_row(FieldGrid& g, int j, MeasurementModel model, const BeaconSet& beacons) {
  const double y = g.cell_y(j);
  Mat2 H;
  for (int i = 0; i < g.nx; ++i) {
    const Vec2 p(g.cell_x(i), y);
    const int at = g.idx(i, j);
    if (!information_at(p, model, beacons, H)) {
      g.lam_min[at] = std::numeric_limits<double>::quiet_NaN();
      g.lam_max[at] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const EigenSystem eig = eig_sym(SymMatrix::from_matrix(H));
    g.lam_min[at] = eig.values[0];
    g.lam_max[at] = eig.values[1];
  }
}

FieldGrid make_grid(const FieldBounds& bounds, int nx, int ny) {
  if (nx < 1 || ny < 1) throw InvalidInput("lambda_grid: grid must be at least 1x1");
  if (!(bounds.x1 > bounds.x0) || !(bounds.y1 > bounds.y0))
    throw InvalidInput("lambda_grid: empty bounds");
  FieldGrid g;
  g.bounds = bounds;
  g.nx = nx;
  g.ny = ny;
  g.lam_min.assign(static_cast<size_t>(nx) * ny, 0.0);
  g.lam_max.assign(static_cast<size_t>(nx) * ny, 0.0);
  return g;
}

}  // namespace

FieldGrid lambda_grid_serial(MeasurementModel model, const BeaconSet& beacons,
                             const FieldBounds& bounds, int nx, int ny) {
  beacons.validate();
  FieldGrid g = make_grid(bounds, nx, ny);
  for (int j = 0; j < ny; ++j) fill_row(g, j, model, beacons);
  return g;
}

FieldGrid lambda_grid(MeasurementModel model, const BeaconSet& beacons,
                      const FieldBounds& bounds, int nx, int ny) {
  beacons.validate();
  FieldGrid g = make_grid(bounds, nx, ny);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j) fill_row(g, j, model, beacons);
  return g;
}

}  // namespace icbf
