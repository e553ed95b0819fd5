#ifndef SPME_LINALG_HPP
#define SPME_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "spme/errors.hpp"

namespace spme {

// In-place lower Cholesky factor of a dense SPD matrix stored row-major.
// Throws NumericalError naming the offending pivot if the matrix is not
// numerically positive definite.
inline void cholesky_lower(std::vector<double>& a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0))
      throw NumericalError("cholesky: non-positive pivot " + std::to_string(d) +
                           " at index " + std::to_string(j));
    const double ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
    for (std::size_t k = j + 1; k < n; ++k) a[j * n + k] = 0.0;
  }
}

// Tridiagonal solve with partial pivoting (LAPACK gtsv-style).
// sub[i] couples row i to i-1 (sub[0] unused), sup[i] couples row i to i+1
// (sup[n-1] unused). All inputs are overwritten.
inline std::vector<double> solve_tridiag(std::vector<double> sub, std::vector<double> diag,
                                         std::vector<double> sup, std::vector<double> rhs) {
  const std::size_t n = diag.size();
  if (n == 0) return {};
  std::vector<double> sup2(n, 0.0); // second superdiagonal created by row swaps
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(diag[i]) >= std::abs(sub[i + 1])) {
      if (diag[i] == 0.0) throw NumericalError("tridiagonal solve: zero pivot at row " + std::to_string(i));
      const double m = sub[i + 1] / diag[i];
      diag[i + 1] -= m * sup[i];
      rhs[i + 1] -= m * rhs[i];
      sub[i + 1] = 0.0;
    } else {
      const double m = diag[i] / sub[i + 1];
      std::swap(diag[i], sub[i + 1]);
      double t = sup[i];
      sup[i] = diag[i + 1];
      diag[i + 1] = t - m * diag[i + 1];
      if (i + 2 < n) {
        sup2[i] = sup[i + 1];
        sup[i + 1] = -m * sup[i + 1];
      }
      std::swap(rhs[i], rhs[i + 1]);
      rhs[i + 1] -= m * rhs[i];
    }
  }
  if (diag[n - 1] == 0.0) throw NumericalError("tridiagonal solve: zero pivot at last row");
  std::vector<double> x(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  if (n >= 2) x[n - 2] = (rhs[n - 2] - sup[n - 2] * x[n - 1]) / diag[n - 2];
  for (std::size_t k = n; k-- > 2;) {
    const std::size_t i = k - 2;
    x[i] = (rhs[i] - sup[i] * x[i + 1] - sup2[i] * x[i + 2]) / diag[i];
  }
  return x;
}

using MatVec = std::function<void(const std::vector<double>&, std::vector<double>&)>;

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// Preconditioned conjugate gradient for SPD systems. `diag` is the Jacobi
// preconditioner. Solves to ||r|| <= tol (absolute). Throws on stagnation.
inline std::vector<double> pcg(const MatVec& apply, const std::vector<double>& diag,
                               const std::vector<double>& b, double tol, std::size_t max_iter) {
  const std::size_t n = b.size();
  std::vector<double> x(n, 0.0), r = b, z(n), p(n), ap(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = dot(r, z);
  double rnorm = norm2(r);
  for (std::size_t it = 0; it < max_iter; ++it) {
    if (rnorm <= tol) return x;
    apply(p, ap);
    const double alpha = rz / dot(p, ap);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    rnorm = norm2(r);
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  if (rnorm <= tol) return x;
  throw NumericalError("pcg: no convergence, residual " + std::to_string(rnorm) +
                       " after " + std::to_string(max_iter) + " iterations");
}

// Jacobi-preconditioned BiCGStab for the (nonsymmetric) Newton systems in 2-d.
inline std::vector<double> bicgstab(const MatVec& apply, const std::vector<double>& diag,
                                    const std::vector<double>& b, double tol,
                                    std::size_t max_iter) {
  const std::size_t n = b.size();
  std::vector<double> x(n, 0.0), r = b;
  std::vector<double> r0 = r, p(n, 0.0), v(n, 0.0), s(n), t(n), phat(n), shat(n);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  double rnorm = norm2(r);
  for (std::size_t it = 0; it < max_iter; ++it) {
    if (rnorm <= tol) return x;
    const double rho_new = dot(r0, r);
    if (rho_new == 0.0) break;
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    for (std::size_t i = 0; i < n; ++i) phat[i] = p[i] / diag[i];
    apply(phat, v);
    alpha = rho / dot(r0, v);
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    if (norm2(s) <= tol) {
      for (std::size_t i = 0; i < n; ++i) x[i] += alpha * phat[i];
      return x;
    }
    for (std::size_t i = 0; i < n; ++i) shat[i] = s[i] / diag[i];
    apply(shat, t);
    omega = dot(t, s) / dot(t, t);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * phat[i] + omega * shat[i];
      r[i] = s[i] - omega * t[i];
    }
    rnorm = norm2(r);
    if (omega == 0.0) break;
  }
  if (rnorm <= tol) return x;
  throw NumericalError("bicgstab: no convergence, residual " + std::to_string(rnorm));
}

} // namespace spme

#endif
