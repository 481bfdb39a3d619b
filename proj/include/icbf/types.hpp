#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace icbf {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec4 = Eigen::Vector4d;

// Arguments of exp() are clamped at this magnitude throughout.
constexpr double kExpClamp = 500.0;

// Planar double integrator: p is position, v is velocity.
struct State {
  Vec2 p = Vec2::Zero();
  Vec2 v = Vec2::Zero();

  Vec4 vec() const {
    Vec4 x;
    x << p, v;
    return x;
  }
  static State from_vec(const Vec4& x) { return {x.head<2>(), x.tail<2>()}; }
};

struct InvalidMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when an operation needs a simple eigenvalue but the spectrum has a
// cluster tighter than the configured tolerance.
struct NonSimpleEigenvalue : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Evaluation point inside the guard radius of a beacon.
struct BeaconSingularity : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidWeight : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// No control satisfies the stacked barrier constraints.
struct InfeasibleQp : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SafetyViolation : std::runtime_error {
  SafetyViolation(const std::string& what, long step_index)
      : std::runtime_error(what), step(step_index) {}
  long step;
};

// Configuration file problem; `field` names the offending entry.
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& what, std::string field_path)
      : std::runtime_error(what), field(std::move(field_path)) {}
  std::string field;
};

}  // namespace icbf
