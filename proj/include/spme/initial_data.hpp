#ifndef SPME_INITIAL_DATA_HPP
#define SPME_INITIAL_DATA_HPP

#include <cmath>

#include "spme/errors.hpp"
#include "spme/field.hpp"
#include "spme/grid.hpp"
#include "spme/rough_paths.hpp"

namespace spme {

// Closed-form initial data catalog; every experiment is reproducible from the
// config text alone.

inline Field sine_mode(const GridPtr& grid, int k, double amp) {
  if (k < 1) throw ParameterError("sine mode: k must be >= 1");
  Field u = sample(grid, [&](double x, double y) {
    double v = amp * std::sin(k * M_PI * x / grid->extent(0));
    if (grid->dim() == 2) v *= std::sin(k * M_PI * y / grid->extent(1));
    return v;
  });
  for (std::size_t j = 0; j < u.size(); ++j)
    if (grid->boundary(j)) u[j] = 0.0; // the analytic trace is zero
  return u;
}

// Smooth bump amp * prod_a exp(-1/(1 - ((x_a-c_a)/w_a)^2)), compact support.
inline Field bump_profile(const GridPtr& grid, double center_x, double width_x, double amp,
                          double center_y = 0.5, double width_y = 0.25) {
  if (!(width_x > 0.0)) throw ParameterError("bump: width must be positive");
  return sample(grid, [&](double x, double y) {
    double v = amp * detail::bump_raw((x - center_x) / width_x);
    if (grid->dim() == 2) v *= detail::bump_raw((y - center_y) / width_y);
    return v;
  });
}

inline Field two_bump_profile(const GridPtr& grid, double c1, double w1, double a1, double c2,
                              double w2, double a2) {
  Field u = bump_profile(grid, c1, w1, a1);
  Field v = bump_profile(grid, c2, w2, a2);
  return u + v;
}

// Source-type self-similar solution of du = Lap u^m in one dimension, m > 1:
//   u(x,t) = t^-a (C - k (x-xc)^2 t^-2a)_+^(1/(m-1)),
// a = 1/(m+1), k = (m-1) / (2 m (m+1)). Mass is conserved for every C > 0.
struct BarenblattProfile {
  double m;
  double C;
  double center;

  BarenblattProfile(double m, double C, double center) : m(m), C(C), center(center) {
    if (!(m > 1.0)) throw ParameterError("barenblatt: requires m > 1");
    if (!(C > 0.0)) throw ParameterError("barenblatt: C must be positive");
  }

  double alpha() const { return 1.0 / (m + 1.0); }
  double k() const { return (m - 1.0) / (2.0 * m * (m + 1.0)); }

  double value(double x, double t) const {
    const double a = alpha();
    const double ta = std::pow(t, -a);
    const double yy = (x - center) * std::pow(t, -a);
    const double inner = C - k() * yy * yy;
    if (inner <= 0.0) return 0.0;
    return ta * std::pow(inner, 1.0 / (m - 1.0));
  }

  double support_radius(double t) const { return std::sqrt(C / k()) * std::pow(t, alpha()); }

  Field sample_at(const GridPtr& grid, double t) const {
    if (grid->dim() != 1) throw ParameterError("barenblatt: one-dimensional profile");
    if (support_radius(t) + 1e-12 >= std::min(center, grid->extent(0) - center))
      throw ParameterError("barenblatt: support reaches the boundary at t = " +
                           std::to_string(t));
    return sample(grid, [&](double x, double) { return value(x, t); });
  }
};

} // namespace spme

#endif
