#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "icbf/types.hpp"

namespace icbf {

enum class MeasurementModel { Range, Bearing };

// Beacons closer than this to an evaluation point make the model singular.
constexpr double kBeaconGuardRadius = 1e-6;

struct BeaconSet {
  std::vector<Vec2> positions;

  int K() const { return static_cast<int>(positions.size()); }
  // K >= 1, all finite, pairwise distinct (separation > 2 * guard radius).
  void validate() const;
};

// Per-beacon derivatives of the predicted measurement at a position p.
//   value[k]              measurement k
//   d1.row(k)             gradient                  (order >= 1)
//   d2[k]                 Hessian                   (order >= 2)
//   d3[k][c](a,b) = d^3 m_k / dp_a dp_b dp_c        (order >= 3)
struct ModelDerivs {
  Eigen::VectorXd value;
  Eigen::Matrix<double, Eigen::Dynamic, 2> d1;
  std::vector<Mat2> d2;
  std::vector<std::array<Mat2, 2>> d3;
  int order = 0;
};

ModelDerivs range_model(const Vec2& p, const BeaconSet& beacons, int order);
ModelDerivs bearing_model(const Vec2& p, const BeaconSet& beacons, int order);
ModelDerivs eval_model(MeasurementModel model, const Vec2& p, const BeaconSet& beacons,
                       int order);

// Principal angle in (-pi, pi]; the branch cut maps -pi to +pi.
double wrap_residual(double a);

// Diagonal measurement covariance Sigma(p) and its position derivatives.
struct CovarianceDerivs {
  Eigen::VectorXd sigma;
  Eigen::Matrix<double, Eigen::Dynamic, 2> d1;
  std::vector<Mat2> d2;
  int order = 0;
};

// Range noise grows with distance: sigma_k = 1 + exp(m_k - 10).
CovarianceDerivs range_covariance(const ModelDerivs& model, int order);
// Bearing noise is unit: Sigma = I, all derivatives zero.
CovarianceDerivs bearing_covariance(int K, int order);
CovarianceDerivs eval_covariance(MeasurementModel model, const ModelDerivs& md, int order);

// A measurement vector with the covariance implied by the predicted geometry.
struct MeasurementBundle {
  Eigen::VectorXd m;
  CovarianceDerivs cov;
};

}  // namespace icbf
