#ifndef SPME_CHARACTERISTICS_HPP
#define SPME_CHARACTERISTICS_HPP

#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include "spme/coefficients.hpp"
#include "spme/errors.hpp"
#include "spme/field.hpp"
#include "spme/rough_paths.hpp"
#include "spme/torsion.hpp"

namespace spme {

// Driving signal seen by the characteristics: either the raw path or its
// mollification, selected at construction.
class PathAccessor {
public:
  explicit PathAccessor(const SamplePath* raw) : raw_(raw) {}
  explicit PathAccessor(const MollifiedPath* mollified) : mollified_(mollified) {}

  std::size_t n_channels() const {
    return raw_ ? raw_->n_channels() : mollified_->base().n_channels();
  }
  double horizon() const { return raw_ ? raw_->horizon() : mollified_->base().horizon(); }

  std::vector<double> increment(double s, double t) const {
    return raw_ ? raw_->increment(s, t) : mollified_->increment(s, t);
  }

  // Derivative of the smoothed signal; only defined on the mollified route.
  std::vector<double> derivative(double t) const {
    if (!mollified_) throw ParameterError("path accessor: raw paths have no derivative");
    return mollified_->derivative(t);
  }

  bool has_derivative() const { return mollified_ != nullptr; }

private:
  const SamplePath* raw_ = nullptr;
  const MollifiedPath* mollified_ = nullptr;
};

// Everything the explicit characteristics need: coefficients, a driving
// signal, and the grid. All evaluations are deterministic in (x, xi, s, t).
class CharacteristicContext {
public:
  CharacteristicContext(const CoefficientSet* coeffs, PathAccessor path)
      : coeffs_(coeffs), path_(std::move(path)) {
    if (coeffs_->n() != path_.n_channels())
      throw ParameterError("characteristics: coefficient count differs from path channels");
  }

  const CoefficientSet& coefficients() const { return *coeffs_; }
  const PathAccessor& path() const { return path_; }
  const GridPtr& grid_ptr() const { return coeffs_->grid_ptr(); }

  std::vector<double> increments(double s, double t) const {
    check_times(s, t);
    return path_.increment(s, t);
  }

  // S_{s,t}(x) = sum_k f_k(x) z^k_{s,t}.
  double noise_sum(double x, double y, const std::vector<double>& incr) const {
    return coeffs_->weighted_sum(x, y, incr);
  }

  // Forward flow: xi exp(S_{s,t}(x)). Preserves the sign of xi.
  double forward(double x, double y, double xi, double s, double t) const {
    return xi * std::exp(noise_sum(x, y, increments(s, t)));
  }

  // Inverse flow: xi exp(-S_{s,t}(x)).
  double backward(double x, double y, double xi, double s, double t) const {
    return xi * std::exp(-noise_sum(x, y, increments(s, t)));
  }

  // Change-of-measure weight v_{s,t}(x) = exp(-S_{s,t}(x)) = (d forward/d xi)^-1.
  // Independent of the velocity variable by construction.
  double weight(double x, double y, double s, double t) const {
    return std::exp(-noise_sum(x, y, increments(s, t)));
  }

  Field weight_field(double s, double t) const {
    const auto incr = increments(s, t);
    Field sums = coeffs_->weighted_sum_field(incr);
    return map_field(sums, [](double v) { return std::exp(-v); });
  }

  void check_times(double s, double t) const {
    if (s < -1e-12 || t < -1e-12 || s > path_.horizon() + 1e-12 || t > path_.horizon() + 1e-12)
      throw ParameterError("characteristics: times outside the path horizon");
    if (s > t + 1e-12) throw ParameterError("characteristics: need s <= t");
  }

private:
  const CoefficientSet* coeffs_;
  PathAccessor path_;
};

// Smooth compactly supported bump in (x[,y],xi): product of 1-d bumps
// exp(-1/(1-((q-c)/w)^2)). `with_xi == false` drops the velocity factor.
struct BumpTestFunction {
  std::array<double, 2> center{0.5, 0.5};
  std::array<double, 2> width{0.25, 0.25};
  double xi_center = 0.5;
  double xi_width = 0.5;
  bool with_xi = true;
  double amplitude = 1.0;

  static double bump1(double q) { return detail::bump_raw(q); }
  static double dbump1(double q) {
    const double t = 1.0 - q * q;
    return t > 0.0 ? detail::bump_raw(q) * (-2.0 * q / (t * t)) : 0.0;
  }

  void check_supported(const Grid& g) const {
    for (int a = 0; a < g.dim(); ++a)
      if (center[a] - width[a] <= 0.0 || center[a] + width[a] >= g.extent(a))
        throw ParameterError("test function: spatial support must stay inside the domain");
  }

  double value(double x, double y, double xi) const {
    return amplitude * bump1((x - center[0]) / width[0]) * factor_y(y) * factor_xi(xi);
  }

  double factor_y(double y) const { return use_y_ ? bump1((y - center[1]) / width[1]) : 1.0; }
  double factor_xi(double xi) const {
    return with_xi ? bump1((xi - xi_center) / xi_width) : 1.0;
  }

  double d_xi(double x, double y, double xi) const {
    if (!with_xi) return 0.0;
    return amplitude * bump1((x - center[0]) / width[0]) * factor_y(y) *
           dbump1((xi - xi_center) / xi_width) / xi_width;
  }

  std::array<double, 2> gradient_x(double x, double y, double xi) const {
    const double fx = bump1((x - center[0]) / width[0]);
    const double dfx = dbump1((x - center[0]) / width[0]) / width[0];
    const double fy = factor_y(y);
    const double fxi = factor_xi(xi);
    std::array<double, 2> out{amplitude * dfx * fy * fxi, 0.0};
    if (use_y_) {
      const double dfy = dbump1((y - center[1]) / width[1]) / width[1];
      out[1] = amplitude * fx * dfy * fxi;
    }
    return out;
  }

  // Mass in xi at fixed x: amplitude * bump_x * bump_y * w_xi * int bump.
  double xi_mass(double x, double y) const {
    static const double bump_integral = [] {
      const std::size_t n = 20001;
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        s += bump1(-1.0 + (2.0 * (double(i) + 0.5)) / double(n));
      return s * 2.0 / double(n);
    }();
    if (!with_xi) throw ParameterError("test function: xi mass needs a xi factor");
    return amplitude * bump1((x - center[0]) / width[0]) * factor_y(y) * xi_width *
           bump_integral;
  }

  bool use_y_ = false;
};

inline BumpTestFunction make_test_function(const Grid& g, std::array<double, 2> center,
                                           std::array<double, 2> width, double xi_center,
                                           double xi_width, bool with_xi = true) {
  BumpTestFunction f;
  f.center = center;
  f.width = width;
  f.xi_center = xi_center;
  f.xi_width = xi_width;
  f.with_xi = with_xi;
  f.use_y_ = g.dim() == 2;
  f.check_supported(g);
  return f;
}

// Test function transported along the inverse characteristic and weighted by
// the change of measure: rho_{s,t}(x,xi) = rho0(x, backward(xi)) v_{s,t}(x).
class TransportedTestFunction {
public:
  TransportedTestFunction(const CharacteristicContext& ctx, BumpTestFunction rho0, double s,
                          double t)
      : ctx_(&ctx), rho0_(rho0), s_(s), t_(t), incr_(ctx.increments(s, t)) {
    rho0_.check_supported(*ctx.grid_ptr());
  }

  double s() const { return s_; }
  double t() const { return t_; }
  const BumpTestFunction& base() const { return rho0_; }

  double value(double x, double y, double xi) const {
    const double S = ctx_->noise_sum(x, y, incr_);
    const double v = std::exp(-S);
    return rho0_.value(x, y, xi * v) * v;
  }

  // d/dxi rho = rho0_xi(x, Pi) * exp(-S) * v.
  double d_xi(double x, double y, double xi) const {
    const double S = ctx_->noise_sum(x, y, incr_);
    const double v = std::exp(-S);
    return rho0_.d_xi(x, y, xi * v) * v * v;
  }

  // Spatial gradient through Pi and v by the chain rule.
  std::array<double, 2> gradient_x(double x, double y, double xi) const {
    const double S = ctx_->noise_sum(x, y, incr_);
    const auto gS = ctx_->coefficients().weighted_sum_gradient(x, y, incr_);
    const double v = std::exp(-S);
    const double pi = xi * v;
    const auto g0 = rho0_.gradient_x(x, y, pi);
    const double dxi0 = rho0_.d_xi(x, y, pi);
    const double r0 = rho0_.value(x, y, pi);
    std::array<double, 2> out{};
    for (int a = 0; a < 2; ++a)
      out[a] = (g0[a] + dxi0 * (-pi * gS[a])) * v + r0 * (-v * gS[a]);
    return out;
  }

  // Node/bin sampling of the transported function at fixed xi.
  Field slice(double xi) const {
    const GridPtr& grid = ctx_->grid_ptr();
    Field out(grid);
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] = value(grid->x(j), grid->y(j), xi);
    return out;
  }

private:
  const CharacteristicContext* ctx_;
  BumpTestFunction rho0_;
  double s_, t_;
  std::vector<double> incr_;
};

inline TransportedTestFunction transport_test_function(const CharacteristicContext& ctx,
                                                       const BumpTestFunction& rho0, double s,
                                                       double t) {
  return TransportedTestFunction(ctx, rho0, s, t);
}

// Largest grid time t* <= T with max over interior nodes of
// Lap_h(v_{0,r} phi) <= 0 for every recorded r <= t*. Returns 0 if the
// condition already fails at the first step.
inline double small_time_horizon(const CharacteristicContext& ctx, const Field& phi, double T,
                                 double dt) {
  if (!(dt > 0.0)) throw ParameterError("small_time_horizon: dt must be positive");
  const Grid& g = phi.grid();
  const long n = std::lround(T / dt);
  double t_star = 0.0;
  for (long k = 1; k <= n; ++k) {
    const double r = double(k) * dt;
    Field w = hadamard(ctx.weight_field(0.0, r), phi);
    Field lap = laplacian(w);
    double worst = 0.0;
    for (std::size_t j = 0; j < lap.size(); ++j)
      if (!g.boundary(j)) worst = std::max(worst, lap[j]);
    if (worst > 1e-12) return t_star;
    t_star = r;
  }
  return t_star;
}

} // namespace spme

#endif
