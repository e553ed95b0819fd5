#ifndef SPME_ROUGH_PATHS_HPP
#define SPME_ROUGH_PATHS_HPP

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "spme/csv.hpp"
#include "spme/errors.hpp"
#include "spme/linalg.hpp"

namespace spme {

// Longest driving signal the generators will produce.
inline constexpr double kMaxPathHorizon = 64.0;

// Discrete rough driving signal z : [0, N dt] -> R^n with z_0 = 0 in every
// channel. Off-node times are linearly interpolated; queries outside the
// horizon clamp to the nearest endpoint (the left clamp realizes z_{s v 0}).
class SamplePath {
public:
  SamplePath(std::vector<std::vector<double>> values, double dt_path)
      : values_(std::move(values)), dt_(dt_path) {
    if (values_.empty()) throw ParameterError("path: need at least one channel");
    if (!(dt_ > 0.0)) throw ParameterError("path: dt must be positive");
    const std::size_t len = values_[0].size();
    if (len == 0) throw ParameterError("path: channels must hold the initial node");
    for (auto& ch : values_) {
      if (ch.size() != len)
        throw ParameterError("path: channels have different lengths (" +
                             std::to_string(ch.size()) + " vs " + std::to_string(len) + ")");
      const double z0 = ch[0];
      for (double& v : ch) v -= z0;
    }
  }

  std::size_t n_channels() const { return values_.size(); }
  std::size_t n_steps() const { return values_[0].size() - 1; }
  double dt() const { return dt_; }
  double horizon() const { return double(n_steps()) * dt_; }
  const std::vector<double>& channel(std::size_t k) const { return values_[k]; }

  // Linear interpolation with clamping at both ends of the record.
  double value_clamped(std::size_t k, double t) const {
    const auto& ch = values_[k];
    if (t <= 0.0) return ch.front();
    const double s = t / dt_;
    const double fi = std::floor(s);
    const std::size_t i = std::size_t(fi);
    if (i + 1 >= ch.size()) return ch.back();
    const double w = s - fi;
    return ch[i] * (1.0 - w) + ch[i + 1] * w;
  }

  std::vector<double> at(double t) const {
    require_in_horizon(t);
    std::vector<double> out(n_channels());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = value_clamped(k, t);
    return out;
  }

  // z_{s,t} = z_t - z_s componentwise.
  std::vector<double> increment(double s, double t) const {
    require_in_horizon(s);
    require_in_horizon(t);
    std::vector<double> out(n_channels());
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = value_clamped(k, t) - value_clamped(k, s);
    return out;
  }

  void require_in_horizon(double t) const {
    if (t < -1e-12 || t > horizon() + 1e-12)
      throw ParameterError("path: time " + std::to_string(t) + " outside horizon [0, " +
                           std::to_string(horizon()) + "]");
  }

private:
  std::vector<std::vector<double>> values_;
  double dt_;
};

inline SamplePath from_samples(std::vector<std::vector<double>> values, double dt_path) {
  return SamplePath(std::move(values), dt_path);
}

// Exact-covariance fBM sampling through a dense Cholesky factor of
// C(s,t) = (t^2H + s^2H - |t-s|^2H) / 2 over the positive nodes. The factor
// is built once; repeated draws reuse it.
class FbmGenerator {
public:
  FbmGenerator(double hurst, std::size_t n_steps, double dt_path,
               double max_horizon = kMaxPathHorizon)
      : hurst_(hurst), n_(n_steps), dt_(dt_path) {
    if (!(hurst > 0.0 && hurst < 1.0))
      throw ParameterError("fbm: hurst must lie in (0,1), got " + std::to_string(hurst));
    if (!(dt_path > 0.0)) throw ParameterError("fbm: dt must be positive");
    if (double(n_steps) * dt_path > max_horizon)
      throw ParameterError("fbm: requested horizon exceeds the configured maximum " +
                           std::to_string(max_horizon));
    if (n_ == 0) return;
    factor_.resize(n_ * n_);
    const double twoH = 2.0 * hurst;
    for (std::size_t i = 0; i < n_; ++i) {
      const double ti = double(i + 1) * dt_path;
      for (std::size_t j = 0; j <= i; ++j) {
        const double tj = double(j + 1) * dt_path;
        const double c =
            0.5 * (std::pow(ti, twoH) + std::pow(tj, twoH) - std::pow(ti - tj, twoH));
        factor_[i * n_ + j] = c;
        factor_[j * n_ + i] = c;
      }
    }
    cholesky_lower(factor_, n_);
  }

  double hurst() const { return hurst_; }
  std::size_t n_steps() const { return n_; }
  double dt() const { return dt_; }

  // One channel: z = L g with g standard normal.
  std::vector<double> draw_channel(std::mt19937_64& rng) const {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> g(n_), ch(n_ + 1, 0.0);
    for (std::size_t i = 0; i < n_; ++i) g[i] = gauss(rng);
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      const double* row = factor_.data() + i * n_;
      for (std::size_t j = 0; j <= i; ++j) s += row[j] * g[j];
      ch[i + 1] = s;
    }
    return ch;
  }

  SamplePath draw(std::size_t n_channels, std::mt19937_64& rng) const {
    if (n_channels == 0) throw ParameterError("fbm: need at least one channel");
    std::vector<std::vector<double>> values;
    values.reserve(n_channels);
    for (std::size_t k = 0; k < n_channels; ++k) values.push_back(draw_channel(rng));
    return SamplePath(std::move(values), dt_);
  }

private:
  double hurst_;
  std::size_t n_;
  double dt_;
  std::vector<double> factor_;
};

// Channels are independent and the result is deterministic for a fixed seed.
inline SamplePath sample_fbm(double hurst, std::size_t n_channels, std::size_t n_steps,
                             double dt_path, std::uint64_t seed,
                             double max_horizon = kMaxPathHorizon) {
  FbmGenerator gen(hurst, n_steps, dt_path, max_horizon);
  std::mt19937_64 rng(seed);
  return gen.draw(n_channels, rng);
}

// omega(delta;T): max-norm modulus of continuity over node pairs.
inline double modulus_of_continuity(const SamplePath& path, double delta, double T) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw ParameterError("modulus_of_continuity: delta must lie in (0,1]");
  if (T > path.horizon() + 1e-12)
    throw ParameterError("modulus_of_continuity: T exceeds the path horizon");
  const std::size_t n_t = std::min<std::size_t>(path.n_steps(), std::size_t(T / path.dt() + 1e-9));
  const std::size_t lag_max = std::size_t(delta / path.dt() + 1e-9);
  double w = 0.0;
  for (std::size_t i = 0; i <= n_t; ++i)
    for (std::size_t l = 1; l <= lag_max && i + l <= n_t; ++l)
      for (std::size_t k = 0; k < path.n_channels(); ++k)
        w = std::max(w, std::abs(path.channel(k)[i + l] - path.channel(k)[i]));
  return w;
}

namespace detail {

// Bump rho(s) ~ exp(-1/(1-s^2)) on (-1,1), unit mass; the constant is fixed
// numerically once.
inline double bump_raw(double y) {
  const double t = 1.0 - y * y;
  return t > 0.0 ? std::exp(-1.0 / t) : 0.0;
}

inline double bump_norm_constant() {
  static const double c = [] {
    const std::size_t n = 20001;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double y = -1.0 + (2.0 * (double(i) + 0.5)) / double(n);
      s += bump_raw(y);
    }
    return 1.0 / (s * (2.0 / double(n)));
  }();
  return c;
}

inline double bump(double y) { return bump_norm_constant() * bump_raw(y); }

inline double bump_derivative(double y) {
  const double t = 1.0 - y * y;
  if (t <= 0.0) return 0.0;
  return bump(y) * (-2.0 * y / (t * t));
}

// Cumulative kernel tables P(y) = int_{-1}^{y} rho and Q(y) = int_{-1}^{y} u rho(u) du,
// accumulated by composite midpoint on a fine uniform grid and normalized to
// unit total mass. They turn the convolution with a piecewise-linear path
// into an exact segment-by-segment product integration.
struct BumpTables {
  static constexpr std::size_t n = 1u << 15;
  std::vector<double> P, Q;

  BumpTables() : P(n + 1, 0.0), Q(n + 1, 0.0) {
    const double dy = 2.0 / double(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double y = -1.0 + (double(i) + 0.5) * dy;
      const double r = bump_raw(y) * dy;
      P[i + 1] = P[i] + r;
      Q[i + 1] = Q[i] + y * r;
    }
    const double mass = P[n];
    for (std::size_t i = 0; i <= n; ++i) {
      P[i] /= mass;
      Q[i] /= mass;
    }
  }

  static const BumpTables& get() {
    static const BumpTables t;
    return t;
  }

  static double interp(const std::vector<double>& tab, double y) {
    if (y <= -1.0) return tab.front();
    if (y >= 1.0) return tab.back();
    const double s = (y + 1.0) / 2.0 * double(n);
    const double fi = std::floor(s);
    const std::size_t i = std::size_t(fi);
    const double w = s - fi;
    return tab[i] * (1.0 - w) + tab[i + 1] * w;
  }

  double cdf(double y) const { return interp(P, y); }
  double moment(double y) const { return interp(Q, y); }
};

} // namespace detail

// Mollification z^eps = z * rho^eps with the compactly supported bump kernel.
// The path is piecewise linear between its nodes (constant outside the
// record), so within each segment the convolution reduces to kernel mass and
// first-moment increments; those come from cumulative tables built once by
// composite midpoint at high resolution. The result is exact on the
// interpolated path up to the table interpolation error.
class MollifiedPath {
public:
  MollifiedPath(SamplePath base, double epsilon)
      : base_(std::move(base)), eps_(epsilon) {
    if (!(eps_ >= 2.0 * base_.dt()))
      throw ParameterError("mollify: epsilon must be >= 2*dt of the path (kernel unresolved)");
  }

  const SamplePath& base() const { return base_; }
  double epsilon() const { return eps_; }

  // z^eps_t = int z_{(s v 0)} rho^eps(s - t) ds; the derivative integrates
  // the segment slopes against the kernel (integration by parts).
  void eval(double t, std::vector<double>& z_eps, std::vector<double>& dz_eps) const {
    base_.require_in_horizon(t);
    const auto& tab = detail::BumpTables::get();
    const std::size_t n = base_.n_channels();
    z_eps.assign(n, 0.0);
    dz_eps.assign(n, 0.0);
    const double dt = base_.dt();
    const double horizon = base_.horizon();
    // Segment breakpoints covering [t - eps, t + eps]: path nodes clipped to
    // [0, horizon]; outside the record the extension is constant.
    double a = t - eps_;
    const double end = t + eps_;
    while (a < end - 1e-15 * eps_) {
      double b;
      if (a < 0.0) {
        b = std::min(0.0, end);
      } else if (a >= horizon) {
        b = end;
      } else {
        const double cell = std::floor(a / dt + 1e-12) + 1.0;
        b = std::min({cell * dt, horizon, end});
      }
      const double ya = (a - t) / eps_, yb = (b - t) / eps_;
      const double dP = tab.cdf(yb) - tab.cdf(ya);
      const double dQ = tab.moment(yb) - tab.moment(ya);
      const double mid = 0.5 * (a + b);
      for (std::size_t k = 0; k < n; ++k) {
        double slope = 0.0;
        if (a >= 0.0 && a < horizon) {
          const std::size_t i = std::size_t(std::floor(mid / dt));
          slope = (base_.channel(k)[i + 1] - base_.channel(k)[i]) / dt;
        }
        const double z_mid = base_.value_clamped(k, mid);
        // int_seg (z_mid + slope (s - mid)) rho^eps(s - t) ds
        z_eps[k] += z_mid * dP + slope * ((t - mid) * dP + eps_ * dQ);
        dz_eps[k] += slope * dP;
      }
      a = b;
    }
  }

  std::vector<double> value(double t) const {
    std::vector<double> z, dz;
    eval(t, z, dz);
    return z;
  }

  std::vector<double> derivative(double t) const {
    std::vector<double> z, dz;
    eval(t, z, dz);
    return dz;
  }

  std::vector<double> increment(double s, double t) const {
    std::vector<double> zs = value(s), zt = value(t);
    for (std::size_t k = 0; k < zs.size(); ++k) zt[k] -= zs[k];
    return zt;
  }

private:
  SamplePath base_;
  double eps_;
};

// CSV interface: header `t,z1,...,zn`, one row per node, full precision.
inline void export_path_csv(const SamplePath& path, std::ostream& out) {
  out << "t";
  for (std::size_t k = 0; k < path.n_channels(); ++k) out << ",z" << (k + 1);
  out << "\n";
  for (std::size_t i = 0; i <= path.n_steps(); ++i) {
    out << format_double(double(i) * path.dt());
    for (std::size_t k = 0; k < path.n_channels(); ++k)
      out << "," << format_double(path.channel(k)[i]);
    out << "\n";
  }
}

inline SamplePath import_path_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParameterError("path csv: empty input");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "t")
    throw ParameterError("path csv: header must be t,z1,...,zn");
  const std::size_t n = header.size() - 1;
  std::vector<double> times;
  std::vector<std::vector<double>> values(n);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != n + 1)
      throw ParameterError("path csv: row with " + std::to_string(cells.size()) +
                           " cells, expected " + std::to_string(n + 1));
    times.push_back(parse_double(cells[0], "path time"));
    for (std::size_t k = 0; k < n; ++k)
      values[k].push_back(parse_double(cells[k + 1], "path value"));
  }
  if (times.size() < 2) throw ParameterError("path csv: need at least two rows");
  const double dt = times[1] - times[0];
  if (!(dt > 0.0)) throw ParameterError("path csv: times must increase");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (std::abs(times[i] - times[i - 1] - dt) > 1e-9 * std::max(1.0, dt))
      throw ParameterError("path csv: time grid must be uniform");
  return SamplePath(std::move(values), dt);
}

} // namespace spme

#endif
