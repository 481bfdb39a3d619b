#include "icbf/eigen_calculus.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace icbf {

SymMatrix::SymMatrix(int dim) {
  if (dim < 1 || dim > kMaxDim) throw InvalidMatrix("SymMatrix: dim out of range [1, 8]");
  m_ = MatX8::Zero(dim, dim);
}

void SymMatrix::set(int i, int j, double v) {
  if (!std::isfinite(v)) throw InvalidMatrix("SymMatrix: non-finite entry");
  m_(i, j) = v;
  m_(j, i) = v;
}

void SymMatrix::check_finite() const {
  if (!m_.allFinite()) throw InvalidMatrix("SymMatrix: non-finite entry");
}

namespace {

// Deterministic sign convention: first component with |x| > 1e-12 made positive.
void fix_signs(MatX8& vectors) {
  for (int c = 0; c < vectors.cols(); ++c) {
    for (int r = 0; r < vectors.rows(); ++r) {
      const double x = vectors(r, c);
      if (std::abs(x) > 1e-12) {
        if (x < 0.0) vectors.col(c) = -vectors.col(c);
        break;
      }
    }
  }
}

void sort_ascending(VecX8& values, MatX8& vectors) {
  const int n = static_cast<int>(values.size());
  std::array<int, kMaxDim> idx{};
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.begin() + n,
                   [&](int a, int b) { return values[a] < values[b]; });
  VecX8 sv(n);
  MatX8 svecs(n, n);
  for (int i = 0; i < n; ++i) {
    sv[i] = values[idx[i]];
    svecs.col(i) = vectors.col(idx[i]);
  }
  values = sv;
  vectors = svecs;
}

double min_gap(const VecX8& values) {
  const int n = static_cast<int>(values.size());
  if (n < 2) return std::numeric_limits<double>::infinity();
  double g = std::numeric_limits<double>::infinity();
  for (int i = 0; i + 1 < n; ++i) g = std::min(g, values[i + 1] - values[i]);
  return g;
}

// Stable 2x2 closed form: the larger-magnitude root comes from the quadratic
// formula without cancellation, the other from the determinant.
EigenSystem eig_sym_2(const MatX8& m) {
  const double a = m(0, 0), b = m(0, 1), d = m(1, 1);
  const double tr = a + d;
  const double det = a * d - b * b;
  const double disc = std::sqrt(std::max(0.0, (a - d) * (a - d) + 4.0 * b * b));

  double lam_big, lam_small;  // by magnitude
  if (tr >= 0.0) {
    lam_big = 0.5 * (tr + disc);
  } else {
    lam_big = 0.5 * (tr - disc);
  }
  lam_small = (lam_big != 0.0) ? det / lam_big : 0.0;

  EigenSystem out;
  out.values.resize(2);
  out.vectors.resize(2, 2);
  const double lo = std::min(lam_big, lam_small);
  const double hi = std::max(lam_big, lam_small);
  out.values << lo, hi;

  // Eigenvector for lo from whichever row of (A - lo*I) is better conditioned.
  const Vec2 c1(b, lo - a);
  const Vec2 c2(lo - d, b);
  Vec2 v1 = (c1.squaredNorm() >= c2.squaredNorm()) ? c1 : c2;
  if (v1.squaredNorm() == 0.0) {
    v1 = Vec2(1.0, 0.0);  // repeated eigenvalue, any orthonormal basis works
  } else {
    v1.normalize();
  }
  const Vec2 v2(-v1.y(), v1.x());
  out.vectors.col(0) = v1;
  out.vectors.col(1) = v2;

  fix_signs(out.vectors);
  out.gapmin = hi - lo;
  return out;
}

}  // namespace

namespace detail {

EigenSystem eig_sym_jacobi(const SymMatrix& sym) {
  const int n = sym.dim();
  MatX8 a = sym.mat();
  MatX8 v = MatX8::Identity(n, n);
  const double scale = a.norm();

  if (scale > 0.0) {
    const double stop = 1e-15 * scale;
    for (int sweep = 0; sweep < 64; ++sweep) {
      double off = 0.0;
      for (int p = 0; p < n - 1; ++p)
        for (int q = p + 1; q < n; ++q) off += 2.0 * a(p, q) * a(p, q);
      if (std::sqrt(off) <= stop) break;

      for (int p = 0; p < n - 1; ++p) {
        for (int q = p + 1; q < n; ++q) {
          const double apq = a(p, q);
          if (std::abs(apq) <= 1e-300) continue;
          const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
          const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          const double s = t * c;

          for (int k = 0; k < n; ++k) {
            const double akp = a(k, p), akq = a(k, q);
            a(k, p) = c * akp - s * akq;
            a(k, q) = s * akp + c * akq;
          }
          for (int k = 0; k < n; ++k) {
            const double apk = a(p, k), aqk = a(q, k);
            a(p, k) = c * apk - s * aqk;
            a(q, k) = s * apk + c * aqk;
          }
          for (int k = 0; k < n; ++k) {
            const double vkp = v(k, p), vkq = v(k, q);
            v(k, p) = c * vkp - s * vkq;
            v(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
  }

  EigenSystem out;
  out.values = a.diagonal();
  out.vectors = v;
  sort_ascending(out.values, out.vectors);
  fix_signs(out.vectors);
  out.gapmin = min_gap(out.values);
  return out;
}

}  // namespace detail

EigenSystem eig_sym(const SymMatrix& a) {
  if (!a.mat().allFinite()) throw InvalidMatrix("eig_sym: non-finite entry");
  if (a.dim() == 1) {
    EigenSystem out;
    out.values.resize(1);
    out.values[0] = a(0, 0);
    out.vectors = MatX8::Identity(1, 1);
    out.gapmin = std::numeric_limits<double>::infinity();
    return out;
  }
  if (a.dim() == 2) return eig_sym_2(a.mat());
  return detail::eig_sym_jacobi(a);
}

SymMatrix pinv_shift(const SymMatrix& a, double lam, const EigenSystem& eig,
                     double rank_tol) {
  const int n = a.dim();
  const double cutoff = rank_tol * a.norm();
  MatX8 b = MatX8::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double d = eig.values[i] - lam;
    if (std::abs(d) <= cutoff) continue;
    b += (eig.vectors.col(i) * eig.vectors.col(i).transpose()) / d;
  }
  return SymMatrix::from_matrix(b);
}

EigenRates eig_rates(const SymMatrix& a, const SymMatrix& a_dot, const EigenSystem& eig,
                     double simple_tol, double rank_tol) {
  const int n = a.dim();
  if (a_dot.dim() != n) throw InvalidMatrix("eig_rates: dimension mismatch");
  if (eig.gapmin <= simple_tol * a.norm())
    throw NonSimpleEigenvalue("eig_rates: eigenvalue gap below simple_tol * ||A||");

  EigenRates out;
  out.lam_dot.resize(n);
  out.vec_dot.resize(n, n);
  for (int i = 0; i < n; ++i) {
    const VecX8 vi = eig.vectors.col(i);
    out.lam_dot[i] = vi.dot(a_dot.mat() * vi);
    const SymMatrix pinv = pinv_shift(a, eig.values[i], eig, rank_tol);
    out.vec_dot.col(i) = pinv.mat() * (out.lam_dot[i] * vi - a_dot.mat() * vi);
  }
  return out;
}

EigenRates eig_accel(const SymMatrix& a, const SymMatrix& a_dot, const SymMatrix& a_ddot,
                     const EigenSystem& eig, double simple_tol, double rank_tol) {
  if (a_ddot.dim() != a.dim()) throw InvalidMatrix("eig_accel: dimension mismatch");
  EigenRates out = eig_rates(a, a_dot, eig, simple_tol, rank_tol);
  const int n = a.dim();
  VecX8 ddot(n);
  for (int i = 0; i < n; ++i) {
    const VecX8 vi = eig.vectors.col(i);
    const VecX8 vdi = out.vec_dot.col(i);
    ddot[i] = vdi.dot(a_dot.mat() * vi) + vi.dot(a_ddot.mat() * vi) +
              vi.dot(a_dot.mat() * vdi);
  }
  out.lam_ddot = ddot;
  return out;
}

SmoothMin smooth_min_weights(const VecX8& values, double kappa) {
  const int n = static_cast<int>(values.size());
  if (n < 1) throw InvalidInput("smooth_min: empty input");
  if (!(kappa > 0.0)) throw InvalidInput("smooth_min: kappa must be positive");
  const double m = values.minCoeff();
  VecX8 w(n);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    w[i] = std::exp(-kappa * (values[i] - m));
    s += w[i];
  }
  SmoothMin out;
  out.value = m - std::log(s) / kappa;
  out.weights = w / s;
  return out;
}

double smooth_min(const VecX8& values, double kappa) {
  return smooth_min_weights(values, kappa).value;
}

}  // namespace icbf
