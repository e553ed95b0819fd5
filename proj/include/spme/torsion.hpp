#ifndef SPME_TORSION_HPP
#define SPME_TORSION_HPP

#include <cmath>
#include <vector>

#include "spme/field.hpp"
#include "spme/grid.hpp"
#include "spme/linalg.hpp"

namespace spme {

// Torsion weight: Lap_h phi = -1 at interior nodes, phi = 0 on the boundary.
// Direct tridiagonal solve in 1-d, Jacobi-preconditioned CG in 2-d, both to
// residual <= 1e-12 * ||rhs||.
inline Field solve_torsion_weight(const GridPtr& grid) {
  const Grid& g = *grid;
  const double ihh = 1.0 / (g.spacing() * g.spacing());
  Field phi(grid);
  if (g.dim() == 1) {
    const int n = g.nodes(0) - 2;
    std::vector<double> sub(n, -ihh), diag(n, 2.0 * ihh), sup(n, -ihh), rhs(n, 1.0);
    std::vector<double> x = solve_tridiag(sub, diag, sup, rhs);
    for (int i = 0; i < n; ++i) phi[i + 1] = x[i];
    return phi;
  }
  const int nx = g.nodes(0), ny = g.nodes(1);
  const int mx = nx - 2, my = ny - 2;
  const std::size_t n = std::size_t(mx) * my;
  auto at = [&](const std::vector<double>& v, int i, int k) -> double {
    if (i < 0 || i >= mx || k < 0 || k >= my) return 0.0;
    return v[std::size_t(k) * mx + i];
  };
  MatVec apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (int k = 0; k < my; ++k)
      for (int i = 0; i < mx; ++i)
        out[std::size_t(k) * mx + i] =
            ihh * (4.0 * at(v, i, k) - at(v, i - 1, k) - at(v, i + 1, k) - at(v, i, k - 1) -
                   at(v, i, k + 1));
  };
  std::vector<double> rhs(n, 1.0), diag(n, 4.0 * ihh);
  const double tol = 1e-12 * norm2(rhs);
  std::vector<double> x = pcg(apply, diag, rhs, tol, 50 * n);
  for (int k = 0; k < my; ++k)
    for (int i = 0; i < mx; ++i) phi[g.index(i + 1, k + 1)] = x[std::size_t(k) * mx + i];
  return phi;
}

} // namespace spme

#endif
