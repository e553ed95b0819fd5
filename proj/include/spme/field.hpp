#ifndef SPME_FIELD_HPP
#define SPME_FIELD_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "spme/errors.hpp"
#include "spme/grid.hpp"

namespace spme {

// One real value per grid node. Arithmetic requires identical grids.
class Field {
public:
  Field() = default;
  explicit Field(GridPtr grid, double fill = 0.0)
      : grid_(std::move(grid)), v_(grid_->size(), fill) {}
  Field(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), v_(std::move(values)) {
    if (v_.size() != grid_->size()) throw ParameterError("field: value count does not match grid");
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return v_.size(); }
  double& operator[](std::size_t j) { return v_[j]; }
  double operator[](std::size_t j) const { return v_[j]; }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }

  void check_same_grid(const Field& o) const {
    if (grid_.get() != o.grid_.get() && !grid_->same_as(*o.grid_))
      throw ParameterError("field: grids differ");
  }

  Field& operator+=(const Field& o) {
    check_same_grid(o);
    for (std::size_t j = 0; j < v_.size(); ++j) v_[j] += o.v_[j];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_same_grid(o);
    for (std::size_t j = 0; j < v_.size(); ++j) v_[j] -= o.v_[j];
    return *this;
  }
  Field& operator*=(double c) {
    for (double& x : v_) x *= c;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double c, Field a) { return a *= c; }

  double min() const { return *std::min_element(v_.begin(), v_.end()); }
  double max() const { return *std::max_element(v_.begin(), v_.end()); }
  double max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }

private:
  GridPtr grid_;
  std::vector<double> v_;
};

inline Field hadamard(const Field& a, const Field& b) {
  a.check_same_grid(b);
  Field out(a.grid_ptr());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] * b[j];
  return out;
}

inline Field map_field(const Field& a, const std::function<double(double)>& f) {
  Field out(a.grid_ptr());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = f(a[j]);
  return out;
}

// Sample a closed-form function at the nodes.
inline Field sample(const GridPtr& grid, const std::function<double(double, double)>& f) {
  Field out(grid);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = f(grid->x(j), grid->y(j));
  return out;
}

// Centered second-difference Laplacian at interior nodes; zero on boundary rows.
inline Field laplacian(const Field& u) {
  const Grid& g = u.grid();
  Field out(u.grid_ptr());
  const double ihh = 1.0 / (g.spacing() * g.spacing());
  const int nx = g.nodes(0);
  if (g.dim() == 1) {
    for (int i = 1; i + 1 < nx; ++i)
      out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * ihh;
  } else {
    const int ny = g.nodes(1);
    for (int k = 1; k + 1 < ny; ++k)
      for (int i = 1; i + 1 < nx; ++i) {
        const std::size_t j = g.index(i, k);
        out[j] = (u[j - 1] + u[j + 1] + u[j - nx] + u[j + nx] - 4.0 * u[j]) * ihh;
      }
  }
  return out;
}

// Nodal gradient: centered differences at interior nodes, one-sided at the boundary.
inline std::array<Field, 2> gradient_nodal(const Field& u) {
  const Grid& g = u.grid();
  const double h = g.spacing();
  const int nx = g.nodes(0), ny = g.dim() == 2 ? g.nodes(1) : 1;
  std::array<Field, 2> out{Field(u.grid_ptr()), Field(u.grid_ptr())};
  for (int k = 0; k < ny; ++k)
    for (int i = 0; i < nx; ++i) {
      const std::size_t j = g.index(i, k);
      if (i == 0)
        out[0][j] = (u[j + 1] - u[j]) / h;
      else if (i == nx - 1)
        out[0][j] = (u[j] - u[j - 1]) / h;
      else
        out[0][j] = (u[j + 1] - u[j - 1]) / (2.0 * h);
      if (g.dim() == 2) {
        if (k == 0)
          out[1][j] = (u[j + nx] - u[j]) / h;
        else if (k == ny - 1)
          out[1][j] = (u[j] - u[j - nx]) / h;
        else
          out[1][j] = (u[j + nx] - u[j - nx]) / (2.0 * h);
      }
    }
  return out;
}

// Squared-gradient energy on links: sum over grid edges of h^d |(u_b - u_a)/h|^2.
// For fields vanishing on the boundary this equals <u, -Lap_h u> h^d exactly.
inline double link_energy_total(const Field& u) {
  const Grid& g = u.grid();
  const double h = g.spacing();
  const double vol = g.cell_volume();
  const int nx = g.nodes(0), ny = g.dim() == 2 ? g.nodes(1) : 1;
  double s = 0.0;
  for (int k = 0; k < ny; ++k)
    for (int i = 0; i + 1 < nx; ++i) {
      const double d = (u[g.index(i + 1, k)] - u[g.index(i, k)]) / h;
      s += d * d;
    }
  if (g.dim() == 2)
    for (int k = 0; k + 1 < ny; ++k)
      for (int i = 0; i < nx; ++i) {
        const double d = (u[g.index(i, k + 1)] - u[g.index(i, k)]) / h;
        s += d * d;
      }
  return s * vol;
}

// Distributes each link's energy half to each endpoint, giving a per-node
// density whose plain node sum times h^d reproduces link_energy_total exactly.
inline Field link_energy_node_density(const Field& u) {
  const Grid& g = u.grid();
  const double h = g.spacing();
  const int nx = g.nodes(0), ny = g.dim() == 2 ? g.nodes(1) : 1;
  Field out(u.grid_ptr());
  for (int k = 0; k < ny; ++k)
    for (int i = 0; i + 1 < nx; ++i) {
      const double d = (u[g.index(i + 1, k)] - u[g.index(i, k)]) / h;
      out[g.index(i, k)] += 0.5 * d * d;
      out[g.index(i + 1, k)] += 0.5 * d * d;
    }
  if (g.dim() == 2)
    for (int k = 0; k + 1 < ny; ++k)
      for (int i = 0; i < nx; ++i) {
        const double d = (u[g.index(i, k + 1)] - u[g.index(i, k)]) / h;
        out[g.index(i, k)] += 0.5 * d * d;
        out[g.index(i, k + 1)] += 0.5 * d * d;
      }
  return out;
}

// (sum_j w_j |u_j|^p h^d)^(1/p) with boundary nodes weighted by half cells.
inline double weighted_lp_norm(const Field& u, const Field& weight, double p) {
  u.check_same_grid(weight);
  if (p < 1.0) throw ParameterError("weighted_lp_norm: p must be >= 1");
  const Grid& g = u.grid();
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (weight[j] < 0.0) throw ParameterError("weighted_lp_norm: weight must be nonnegative");
    s += weight[j] * std::pow(std::abs(u[j]), p) * g.cell_weight(j);
  }
  return std::pow(s * g.cell_volume(), 1.0 / p);
}

inline double lp_norm(const Field& u, double p) {
  return weighted_lp_norm(u, Field(u.grid_ptr(), 1.0), p);
}

inline double l2_sq(const Field& u) {
  const double n = lp_norm(u, 2.0);
  return n * n;
}

// 1 / λ_min(-Lap_h): exact on tensor-product Dirichlet grids.
inline double poincare_constant(const Grid& g) {
  const double h = g.spacing();
  double lambda = 0.0;
  for (int a = 0; a < g.dim(); ++a)
    lambda += (2.0 / (h * h)) * (1.0 - std::cos(M_PI * h / g.extent(a)));
  return 1.0 / lambda;
}

} // namespace spme

#endif
