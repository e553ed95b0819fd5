#ifndef SPME_COEFFICIENTS_HPP
#define SPME_COEFFICIENTS_HPP

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "spme/errors.hpp"
#include "spme/field.hpp"
#include "spme/grid.hpp"

namespace spme {

// Closed-form noise coefficient f_k in C^2_b. Values, gradients and Hessians
// are exact; the catalog is fixed (constant, cosine bump in x, centered
// Gaussian bump).
struct Coefficient {
  enum class Kind { Constant, Cosine, Gaussian };
  Kind kind = Kind::Constant;
  double c = 0.0;                    // constant
  double a = 0.0, b = 0.0;           // cosine: a + b cos(2 pi x / length)
  double length = 1.0;
  double amp = 0.0, width = 1.0;     // gaussian: amp exp(-r^2 / (2 width^2))
  double cx = 0.0, cy = 0.0;

  double value(double x, double y) const {
    switch (kind) {
      case Kind::Constant: return c;
      case Kind::Cosine: return a + b * std::cos(2.0 * M_PI * x / length);
      case Kind::Gaussian: {
        const double dx = x - cx, dy = y - cy;
        return amp * std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
      }
    }
    return 0.0;
  }

  std::array<double, 2> gradient(double x, double y) const {
    switch (kind) {
      case Kind::Constant: return {0.0, 0.0};
      case Kind::Cosine: {
        const double w = 2.0 * M_PI / length;
        return {-b * w * std::sin(w * x), 0.0};
      }
      case Kind::Gaussian: {
        const double v = value(x, y), iw2 = 1.0 / (width * width);
        return {-(x - cx) * iw2 * v, -(y - cy) * iw2 * v};
      }
    }
    return {0.0, 0.0};
  }

  // Row-major 2x2 Hessian (the second row/column is zero in 1-d).
  std::array<double, 4> hessian(double x, double y) const {
    switch (kind) {
      case Kind::Constant: return {0.0, 0.0, 0.0, 0.0};
      case Kind::Cosine: {
        const double w = 2.0 * M_PI / length;
        return {-b * w * w * std::cos(w * x), 0.0, 0.0, 0.0};
      }
      case Kind::Gaussian: {
        const double v = value(x, y), iw2 = 1.0 / (width * width);
        const double dx = x - cx, dy = y - cy;
        return {(dx * dx * iw2 - 1.0) * iw2 * v, dx * dy * iw2 * iw2 * v,
                dx * dy * iw2 * iw2 * v, (dy * dy * iw2 - 1.0) * iw2 * v};
      }
    }
    return {0.0, 0.0, 0.0, 0.0};
  }

  double sup_bound() const {
    switch (kind) {
      case Kind::Constant: return std::abs(c);
      case Kind::Cosine: return std::abs(a) + std::abs(b);
      case Kind::Gaussian: return std::abs(amp);
    }
    return 0.0;
  }
};

inline Coefficient constant_coefficient(double c) {
  Coefficient f;
  f.kind = Coefficient::Kind::Constant;
  f.c = c;
  return f;
}

inline Coefficient cosine_coefficient(double a, double b, double length) {
  if (!(length > 0.0)) throw ParameterError("cosine coefficient: length must be positive");
  Coefficient f;
  f.kind = Coefficient::Kind::Cosine;
  f.a = a;
  f.b = b;
  f.length = length;
  return f;
}

inline Coefficient gaussian_coefficient(double amp, double width, double cx, double cy = 0.0) {
  if (!(width > 0.0)) throw ParameterError("gaussian coefficient: width must be positive");
  Coefficient f;
  f.kind = Coefficient::Kind::Gaussian;
  f.amp = amp;
  f.width = width;
  f.cx = cx;
  f.cy = cy;
  return f;
}

// The noise coefficients {f_k} with node-cached values, gradients and
// Hessians. Immutable after construction.
class CoefficientSet {
public:
  CoefficientSet(GridPtr grid, std::vector<Coefficient> coeffs)
      : grid_(std::move(grid)), coeffs_(std::move(coeffs)) {
    for (const auto& f : coeffs_) {
      Field val(grid_);
      std::array<Field, 2> gr{Field(grid_), Field(grid_)};
      for (std::size_t j = 0; j < val.size(); ++j) {
        const double x = grid_->x(j), y = grid_->y(j);
        val[j] = f.value(x, y);
        const auto g = f.gradient(x, y);
        gr[0][j] = g[0];
        gr[1][j] = g[1];
      }
      values_.push_back(std::move(val));
      gradients_.push_back(std::move(gr));
      sup_bounds_.push_back(f.sup_bound());
    }
  }

  std::size_t n() const { return coeffs_.size(); }
  const GridPtr& grid_ptr() const { return grid_; }
  const Coefficient& descriptor(std::size_t k) const { return coeffs_[k]; }
  const Field& value_field(std::size_t k) const { return values_[k]; }
  const Field& gradient_field(std::size_t k, int axis) const { return gradients_[k][axis]; }
  double sup_bound(std::size_t k) const { return sup_bounds_[k]; }

  Field hessian_field(std::size_t k, int a, int b) const {
    Field out(grid_);
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] = coeffs_[k].hessian(grid_->x(j), grid_->y(j))[a * 2 + b];
    return out;
  }

  // sum_k w_k f_k(x) and its spatial gradient.
  double weighted_sum(double x, double y, const std::vector<double>& w) const {
    double s = 0.0;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) s += w[k] * coeffs_[k].value(x, y);
    return s;
  }

  std::array<double, 2> weighted_sum_gradient(double x, double y,
                                              const std::vector<double>& w) const {
    std::array<double, 2> s{0.0, 0.0};
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      const auto g = coeffs_[k].gradient(x, y);
      s[0] += w[k] * g[0];
      s[1] += w[k] * g[1];
    }
    return s;
  }

  // Node field of sum_k w_k f_k using the cached values.
  Field weighted_sum_field(const std::vector<double>& w) const {
    Field out(grid_);
    for (std::size_t k = 0; k < coeffs_.size(); ++k)
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += w[k] * values_[k][j];
    return out;
  }

  double total_sup_bound() const {
    double s = 0.0;
    for (double b : sup_bounds_) s += b;
    return s;
  }

private:
  GridPtr grid_;
  std::vector<Coefficient> coeffs_;
  std::vector<Field> values_;
  std::vector<std::array<Field, 2>> gradients_;
  std::vector<double> sup_bounds_;
};

inline CoefficientSet build_coefficients(const GridPtr& grid, std::vector<Coefficient> coeffs) {
  return CoefficientSet(grid, std::move(coeffs));
}

} // namespace spme

#endif
