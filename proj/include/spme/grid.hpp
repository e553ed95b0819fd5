#ifndef SPME_GRID_HPP
#define SPME_GRID_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>

#include "spme/errors.hpp"

namespace spme {

// Uniform Dirichlet grid on a rectangle (0,Lx) or (0,Lx)x(0,Ly). The spacing
// is the same along every axis; boundary nodes carry the Dirichlet data.
class Grid {
public:
  Grid(int dim, std::array<double, 2> extent, std::array<int, 2> nodes)
      : dim_(dim), extent_(extent), nodes_(nodes) {
    if (dim != 1 && dim != 2) throw ParameterError("grid: dimension must be 1 or 2");
    for (int a = 0; a < dim; ++a) {
      if (nodes_[a] < 3)
        throw ParameterError("grid: need at least 3 nodes per axis, got " +
                             std::to_string(nodes_[a]));
      if (!(extent_[a] > 0.0)) throw ParameterError("grid: extent must be positive");
    }
    if (dim == 1) {
      nodes_[1] = 1;
      extent_[1] = 0.0;
    }
    h_ = extent_[0] / (nodes_[0] - 1);
    if (dim == 2) {
      const double hy = extent_[1] / (nodes_[1] - 1);
      if (std::abs(hy - h_) > 1e-12 * h_)
        throw ParameterError("grid: spacing must be uniform across axes (hx=" +
                             std::to_string(h_) + ", hy=" + std::to_string(hy) + ")");
    }
  }

  int dim() const { return dim_; }
  double spacing() const { return h_; }
  double extent(int axis) const { return extent_[axis]; }
  int nodes(int axis) const { return nodes_[axis]; }
  std::size_t size() const { return std::size_t(nodes_[0]) * nodes_[1]; }

  std::size_t index(int ix, int iy = 0) const { return std::size_t(iy) * nodes_[0] + ix; }
  int ix(std::size_t j) const { return int(j % nodes_[0]); }
  int iy(std::size_t j) const { return int(j / nodes_[0]); }

  double x(std::size_t j) const { return ix(j) * h_; }
  double y(std::size_t j) const { return iy(j) * h_; }

  bool boundary(std::size_t j) const {
    const int i = ix(j);
    if (i == 0 || i == nodes_[0] - 1) return true;
    if (dim_ == 2) {
      const int k = iy(j);
      if (k == 0 || k == nodes_[1] - 1) return true;
    }
    return false;
  }

  // Trapezoid cell weight: boundary nodes own half cells along each axis.
  double cell_weight(std::size_t j) const {
    double w = 1.0;
    const int i = ix(j);
    if (i == 0 || i == nodes_[0] - 1) w *= 0.5;
    if (dim_ == 2) {
      const int k = iy(j);
      if (k == 0 || k == nodes_[1] - 1) w *= 0.5;
    }
    return w;
  }

  double cell_volume() const { return dim_ == 1 ? h_ : h_ * h_; }

  bool same_as(const Grid& o) const {
    return dim_ == o.dim_ && nodes_ == o.nodes_ && extent_ == o.extent_;
  }

private:
  int dim_;
  std::array<double, 2> extent_;
  std::array<int, 2> nodes_;
  double h_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr build_grid(int dim, std::array<double, 2> extent, std::array<int, 2> nodes) {
  return std::make_shared<const Grid>(dim, extent, nodes);
}

inline GridPtr build_grid(double length, int nodes) {
  return build_grid(1, {length, 0.0}, {nodes, 1});
}

} // namespace spme

#endif
