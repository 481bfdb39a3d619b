#pragma once

#include <vector>

#include "icbf/measurement.hpp"
#include "icbf/types.hpp"

namespace icbf {

struct FieldBounds {
  double x0 = -10.0, x1 = 10.0;
  double y0 = -10.0, y1 = 10.0;
};

// Cell-centered sampling of the information matrix spectrum over a rectangle.
// Cells inside a beacon guard radius hold NaN. Row-major, x fastest.
struct FieldGrid {
  FieldBounds bounds;
  int nx = 0, ny = 0;
  std::vector<double> lam_min;
  std::vector<double> lam_max;

  double cell_x(int i) const {
    return bounds.x0 + (i + 0.5) * (bounds.x1 - bounds.x0) / nx;
  }
  double cell_y(int j) const {
    return bounds.y0 + (j + 0.5) * (bounds.y1 - bounds.y0) / ny;
  }
  int idx(int i, int j) const { return j * nx + i; }
};

// Serial reference implementation.
FieldGrid lambda_grid_serial(MeasurementModel model, const BeaconSet& beacons,
                             const FieldBounds& bounds, int nx, int ny);

// OpenMP row-parallel kernel; bit-identical to the serial reference.
FieldGrid lambda_grid(MeasurementModel model, const BeaconSet& beacons,
                      const FieldBounds& bounds, int nx, int ny);

}  // namespace icbf
