#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <optional>

#include "icbf/types.hpp"

namespace icbf {

// Fixed-capacity (n <= 8) dense types: stack storage, no allocation.
constexpr int kMaxDim = 8;
using MatX8 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using VecX8 = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;

// Default tolerances, both overridable per call:
//   simple_tol scales with ||A|| and gates operations that need a simple spectrum,
//   rank_tol decides which shifted eigenvalues count as zero in pinv_shift.
constexpr double kSimpleTol = 1e-8;
constexpr double kRankTol = 1e-9;

// Symmetric matrix with storage-enforced symmetry: set() writes both triangles,
// from_matrix() symmetrizes. Entries are always finite.
class SymMatrix {
 public:
  explicit SymMatrix(int dim);

  template <typename Derived>
  static SymMatrix from_matrix(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols()) throw InvalidMatrix("SymMatrix: input not square");
    SymMatrix s(static_cast<int>(m.rows()));
    s.m_ = 0.5 * (m + m.transpose());
    s.check_finite();
    return s;
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  void set(int i, int j, double v);
  const MatX8& mat() const { return m_; }
  double norm() const { return m_.norm(); }

 private:
  void check_finite() const;
  MatX8 m_;
};

// Eigenvalues ascending; vectors[:, i] is the unit eigenvector for values[i],
// sign-fixed so its first component with magnitude > 1e-12 is positive.
// gapmin is the smallest gap between adjacent eigenvalues (+inf for dim 1).
struct EigenSystem {
  VecX8 values;
  MatX8 vectors;
  double gapmin = std::numeric_limits<double>::infinity();

  int dim() const { return static_cast<int>(values.size()); }
};

struct EigenRates {
  VecX8 lam_dot;
  MatX8 vec_dot;
  std::optional<VecX8> lam_ddot;
};

// Full eigendecomposition. Closed form for dim 2, cyclic Jacobi otherwise.
EigenSystem eig_sym(const SymMatrix& a);

// Spectral pseudoinverse of (A - lam*I): modes with |lambda_i - lam| <= rank_tol*||A||
// are dropped rather than inverted.
SymMatrix pinv_shift(const SymMatrix& a, double lam, const EigenSystem& eig,
                     double rank_tol = kRankTol);

// First-order eigenpair rates along a matrix path A(t):
//   lam_dot_i = v_i' Adot v_i
//   vec_dot_i = pinv(A - lam_i I) (lam_dot_i I - Adot) v_i
// Requires a simple spectrum (gapmin > simple_tol*||A||).
EigenRates eig_rates(const SymMatrix& a, const SymMatrix& a_dot, const EigenSystem& eig,
                     double simple_tol = kSimpleTol, double rank_tol = kRankTol);

// Adds second-order rates: lam_ddot_i = vdot_i' Adot v_i + v_i' Addot v_i + v_i' Adot vdot_i.
EigenRates eig_accel(const SymMatrix& a, const SymMatrix& a_dot, const SymMatrix& a_ddot,
                     const EigenSystem& eig, double simple_tol = kSimpleTol,
                     double rank_tol = kRankTol);

// Log-sum-exp soft minimum, computed max-shifted so kappa up to ~5000 is safe:
//   smooth_min(v) = -(1/kappa) ln(sum_i exp(-kappa v_i)).
// Bounds: min(v) - ln(n)/kappa <= smooth_min(v) <= min(v); exact for n = 1.
double smooth_min(const VecX8& values, double kappa);

// Soft-min value together with the convex weights w_i = softmax(-kappa*v)_i;
// gradients of smooth_min are the w-weighted average of per-entry gradients.
struct SmoothMin {
  double value;
  VecX8 weights;
};
SmoothMin smooth_min_weights(const VecX8& values, double kappa);

namespace detail {
// General-path solver, exposed so tests can cross-check the dim-2 closed form.
EigenSystem eig_sym_jacobi(const SymMatrix& a);
}  // namespace detail

}  // namespace icbf
