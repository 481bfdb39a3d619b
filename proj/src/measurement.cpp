#include "icbf/measurement.hpp"

#include <cmath>

namespace icbf {

void BeaconSet::validate() const {
  if (positions.empty()) throw InvalidInput("BeaconSet: at least one beacon required");
  for (const auto& b : positions) {
    if (!b.allFinite()) throw InvalidInput("BeaconSet: non-finite beacon position");
  }
  for (size_t i = 0; i < positions.size(); ++i) {
    for (size_t j = i + 1; j < positions.size(); ++j) {
      if ((positions[i] - positions[j]).norm() <= 2.0 * kBeaconGuardRadius)
        throw InvalidInput("BeaconSet: coincident beacons");
    }
  }
}

double wrap_residual(double a) {
  // (-pi, pi]: shift down by full turns of (a - pi], so -pi itself lands on +pi.
  return a - 2.0 * M_PI * std::ceil((a - M_PI) / (2.0 * M_PI));
}

namespace {

void check_order(int order) {
  if (order < 0 || order > 3) throw InvalidInput("model order must be in [0, 3]");
}

void size_derivs(ModelDerivs& out, int K, int order) {
  out.order = order;
  out.value.resize(K);
  if (order >= 1) out.d1.resize(K, 2);
  if (order >= 2) out.d2.resize(K);
  if (order >= 3) out.d3.resize(K);
}

}  // namespace

ModelDerivs range_model(const Vec2& p, const BeaconSet& beacons, int order) {
  check_order(order);
  const int K = beacons.K();
  ModelDerivs out;
  size_derivs(out, K, order);

  for (int k = 0; k < K; ++k) {
    const Vec2 d = p - beacons.positions[k];
    const double r = d.norm();
    if (r < kBeaconGuardRadius)
      throw BeaconSingularity("range_model: evaluation point at beacon");
    out.value[k] = r;
    if (order < 1) continue;
    const Vec2 u = d / r;
    out.d1.row(k) = u.transpose();
    if (order < 2) continue;
    out.d2[k] = (Mat2::Identity() - u * u.transpose()) / r;
    if (order < 3) continue;
    // d3[c](a,b) = (3 u_a u_b u_c - (d_ab u_c + d_ac u_b + d_bc u_a)) / r^2
    for (int c = 0; c < 2; ++c) {
      Mat2 t;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          double val = 3.0 * u[a] * u[b] * u[c];
          if (a == b) val -= u[c];
          if (a == c) val -= u[b];
          if (b == c) val -= u[a];
          t(a, b) = val / (r * r);
        }
      }
      out.d3[k][c] = t;
    }
  }
  return out;
}

ModelDerivs bearing_model(const Vec2& p, const BeaconSet& beacons, int order) {
  check_order(order);
  const int K = beacons.K();
  ModelDerivs out;
  size_derivs(out, K, order);

  for (int k = 0; k < K; ++k) {
    const Vec2 d = p - beacons.positions[k];
    const double s = d.squaredNorm();
    if (s < kBeaconGuardRadius * kBeaconGuardRadius)
      throw BeaconSingularity("bearing_model: evaluation point at beacon");
    const double x = d.x(), y = d.y();
    out.value[k] = std::atan2(y, x);
    if (order < 1) continue;
    out.d1.row(k) << -y / s, x / s;
    if (order < 2) continue;
    const double s2 = s * s;
    Mat2 h;
    h << 2.0 * x * y, y * y - x * x, y * y - x * x, -2.0 * x * y;
    out.d2[k] = h / s2;
    if (order < 3) continue;
    const double s3 = s2 * s;
    const double t_xxx = 2.0 * y * (y * y - 3.0 * x * x) / s3;
    const double t_xxy = 2.0 * x * (x * x - 3.0 * y * y) / s3;
    const double t_xyy = 2.0 * y * (3.0 * x * x - y * y) / s3;
    const double t_yyy = 2.0 * x * (3.0 * y * y - x * x) / s3;
    Mat2 tx, ty;
    tx << t_xxx, t_xxy, t_xxy, t_xyy;
    ty << t_xxy, t_xyy, t_xyy, t_yyy;
    out.d3[k][0] = tx;
    out.d3[k][1] = ty;
  }
  return out;
}

ModelDerivs eval_model(MeasurementModel model, const Vec2& p, const BeaconSet& beacons,
                       int order) {
  return model == MeasurementModel::Range ? range_model(p, beacons, order)
                                          : bearing_model(p, beacons, order);
}

CovarianceDerivs range_covariance(const ModelDerivs& model, int order) {
  if (order > model.order)
    throw InvalidInput("range_covariance: model order too low for requested order");
  const int K = static_cast<int>(model.value.size());
  CovarianceDerivs out;
  out.order = order;
  out.sigma.resize(K);
  if (order >= 1) out.d1.resize(K, 2);
  if (order >= 2) out.d2.resize(K);

  for (int k = 0; k < K; ++k) {
    const double z = std::min(model.value[k] - 10.0, kExpClamp);
    const double e = std::exp(z);
    out.sigma[k] = 1.0 + e;
    if (order < 1) continue;
    const Vec2 g = model.d1.row(k).transpose();
    out.d1.row(k) = (e * g).transpose();
    if (order < 2) continue;
    out.d2[k] = e * (g * g.transpose() + model.d2[k]);
  }
  return out;
}

CovarianceDerivs bearing_covariance(int K, int order) {
  CovarianceDerivs out;
  out.order = order;
  out.sigma = Eigen::VectorXd::Ones(K);
  if (order >= 1) out.d1 = Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(K, 2);
  if (order >= 2) out.d2.assign(K, Mat2::Zero());
  return out;
}

CovarianceDerivs eval_covariance(MeasurementModel model, const ModelDerivs& md, int order) {
  return model == MeasurementModel::Range
             ? range_covariance(md, order)
             : bearing_covariance(static_cast<int>(md.value.size()), order);
}

}  // namespace icbf
