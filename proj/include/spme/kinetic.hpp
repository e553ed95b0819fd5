#ifndef SPME_KINETIC_HPP
#define SPME_KINETIC_HPP

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "spme/characteristics.hpp"
#include "spme/csv.hpp"
#include "spme/errors.hpp"
#include "spme/field.hpp"
#include "spme/pme_solver.hpp"

namespace spme {

// Uniform velocity lattice on [-xi_max, xi_max]. The bin count is even, so
// centers sit at +-dxi/2, ... and never at the origin.
class XiGrid {
public:
  XiGrid(double xi_max, std::size_t n_bins = 256) : xi_max_(xi_max), n_(n_bins) {
    if (!(xi_max > 0.0)) throw ParameterError("xi grid: range must be positive");
    if (n_ < 2 || n_ % 2 != 0)
      throw ParameterError("xi grid: bin count must be even (offset lattice), got " +
                           std::to_string(n_));
  }

  double xi_max() const { return xi_max_; }
  std::size_t n_bins() const { return n_; }
  double dxi() const { return 2.0 * xi_max_ / double(n_); }
  double center(std::size_t i) const { return -xi_max_ + (double(i) + 0.5) * dxi(); }

  std::size_t bin_of(double u) const {
    const double s = (u + xi_max_) / dxi();
    long i = long(std::floor(s));
    if (i < 0) i = 0;
    if (i >= long(n_)) i = long(n_) - 1;
    return std::size_t(i);
  }

  void require_covers(double umax) const {
    if (umax > xi_max_)
      throw ParameterError("xi grid: range " + std::to_string(xi_max_) +
                           " does not cover max|u| = " + std::to_string(umax));
  }

private:
  double xi_max_;
  std::size_t n_;
};

// Velocity range with margin for the characteristic expansion, 1.5 sup|u|.
inline XiGrid xi_grid_for(const Trajectory& traj, std::size_t n_bins = 256) {
  double sup = 0.0;
  for (const auto& u : traj.states) sup = std::max(sup, u.max_abs());
  return XiGrid(sup > 0.0 ? 1.5 * sup : 1.0, n_bins);
}

// chi(s,xi) = 1_{0<xi<s} - 1_{s<xi<0} sampled at bin centers.
inline std::vector<std::int8_t> kinetic_function(const Field& u, const XiGrid& xi) {
  xi.require_covers(u.max_abs());
  std::vector<std::int8_t> chi(u.size() * xi.n_bins(), 0);
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double uj = u[j];
    for (std::size_t i = 0; i < xi.n_bins(); ++i) {
      const double c = xi.center(i);
      std::int8_t v = 0;
      if (0.0 < c && c < uj) v = 1;
      else if (uj < c && c < 0.0) v = -1;
      chi[j * xi.n_bins() + i] = v;
    }
  }
  return chi;
}

// chi plus the entropy (p) and parabolic (q) defect densities on the lattice.
// Each node's dissipation mass lands in the bin containing u(x), divided by
// dxi, so bin sums reproduce the node masses exactly.
struct KineticSnapshot {
  GridPtr grid;
  XiGrid xi;
  std::vector<std::int8_t> chi;
  std::vector<double> p, q; // densities per (node, bin), node-major

  double chi_at(std::size_t j, std::size_t i) const { return double(chi[j * xi.n_bins() + i]); }
  double pq_at(std::size_t j, std::size_t i) const {
    return p[j * xi.n_bins() + i] + q[j * xi.n_bins() + i];
  }
};

inline KineticSnapshot defect_measures(const Field& u, const SolverConfig& cfg,
                                       const XiGrid& xi) {
  KineticSnapshot snap{u.grid_ptr(), xi, kinetic_function(u, xi),
                       std::vector<double>(u.size() * xi.n_bins(), 0.0),
                       std::vector<double>(u.size() * xi.n_bins(), 0.0)};
  const double m = cfg.m;
  Field upow = map_field(u, [&](double v) { return signed_power(v, 0.5 * (m + 1.0)); });
  Field qdens = link_energy_node_density(upow);
  const double qcoef = 4.0 * m / ((m + 1.0) * (m + 1.0));
  Field pdens = cfg.eta > 0.0 ? link_energy_node_density(u) : Field(u.grid_ptr());
  for (std::size_t j = 0; j < u.size(); ++j) {
    const std::size_t b = xi.bin_of(u[j]);
    snap.q[j * xi.n_bins() + b] += qcoef * qdens[j] / xi.dxi();
    if (cfg.eta > 0.0) snap.p[j * xi.n_bins() + b] += cfg.eta * pdens[j] / xi.dxi();
  }
  return snap;
}

// Plain (x,xi) integral of a per-(node,bin) quantity; the defect quantities
// vanish against the boundary half-cell correction, so no trapezoid factors.
inline double xi_x_integral(const KineticSnapshot& snap,
                            const std::function<double(std::size_t, std::size_t)>& f) {
  double s = 0.0;
  for (std::size_t j = 0; j < snap.grid->size(); ++j)
    for (std::size_t i = 0; i < snap.xi.n_bins(); ++i) s += f(j, i);
  return s * snap.xi.dxi() * snap.grid->cell_volume();
}

// int int |xi|^(delta-1) (p + q) for one snapshot.
inline double singular_moment(const KineticSnapshot& snap, double delta) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw ParameterError("singular_moment: delta must lie in (0,1]");
  return xi_x_integral(snap, [&](std::size_t j, std::size_t i) {
    return std::pow(std::abs(snap.xi.center(i)), delta - 1.0) * snap.pq_at(j, i);
  });
}

// psi-weighted |xi|^-1 moment; psi must vanish near the boundary.
inline double log_moment(const KineticSnapshot& snap, const Field& psi) {
  for (std::size_t j = 0; j < psi.size(); ++j)
    if (psi[j] < 0.0) throw ParameterError("log_moment: psi must be nonnegative");
  return xi_x_integral(snap, [&](std::size_t j, std::size_t i) {
    return psi[j] / std::abs(snap.xi.center(i)) * snap.pq_at(j, i);
  });
}

// Accumulated over the recorded steps with dt weights (states n >= 1).
inline double singular_moment(const Trajectory& traj, double delta, const XiGrid& xi) {
  const double wdt = traj.uniform_record_dt();
  double s = 0.0;
  for (std::size_t n = 1; n < traj.states.size(); ++n)
    s += wdt * singular_moment(defect_measures(traj.states[n], traj.config, xi), delta);
  return s;
}

inline double log_moment(const Trajectory& traj, const Field& psi, const XiGrid& xi) {
  if (traj.states.front().min() < 0.0)
    throw ParameterError("log_moment: the governing run must have nonnegative initial data");
  const double wdt = traj.uniform_record_dt();
  double s = 0.0;
  for (std::size_t n = 1; n < traj.states.size(); ++n)
    s += wdt * log_moment(defect_measures(traj.states[n], traj.config, xi), psi);
  return s;
}

namespace detail {

// Transported test function sampled on the lattice for one (s, r) pair:
// rho(x_j, xi_i) = rho0(x_j, xi_i v_j) v_j with v_j = exp(-S_j).
struct TransportedLattice {
  Field v;
  const BumpTestFunction* rho0;

  TransportedLattice(const CharacteristicContext& ctx, const BumpTestFunction& rho0, double s,
                     double r)
      : v(ctx.weight_field(s, r)), rho0(&rho0) {}

  double value(const Grid& g, std::size_t j, double xi) const {
    return rho0->value(g.x(j), g.y(j), xi * v[j]) * v[j];
  }
  double d_xi(const Grid& g, std::size_t j, double xi) const {
    return rho0->d_xi(g.x(j), g.y(j), xi * v[j]) * v[j] * v[j];
  }
};

} // namespace detail

// Residual of the transported weak form between the recorded times s and t:
//   [int chi rho]_{r=s}^{t} - int_s^t int (m|xi|^{m-1} + eta) chi Lap_h rho
//                           + int_s^t int (p+q) d_xi rho.
// Space and velocity integrals use the module quadratures; the time integral
// is a trapezoid over the recorded steps.
inline double transport_residual(const Trajectory& traj, const BumpTestFunction& rho0, double s,
                                 double t, const CharacteristicContext& ctx,
                                 const XiGrid& xi) {
  rho0.check_supported(*traj.grid);
  const std::size_t is = traj.index_of_time(s), it = traj.index_of_time(t);
  if (is >= it) throw ParameterError("transport_residual: need s < t on the record grid");
  const Grid& g = *traj.grid;
  const double m = traj.config.m, eta = traj.config.eta;
  const std::size_t nb = xi.n_bins();

  auto boundary_term = [&](std::size_t n) {
    detail::TransportedLattice rho(ctx, rho0, s, traj.times[n]);
    const auto chi = kinetic_function(traj.states[n], xi);
    double acc = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j)
      for (std::size_t i = 0; i < nb; ++i)
        if (chi[j * nb + i] != 0)
          acc += double(chi[j * nb + i]) * rho.value(g, j, xi.center(i));
    return acc * xi.dxi() * g.cell_volume();
  };

  auto interior_terms = [&](std::size_t n, double& diffusion, double& defect) {
    detail::TransportedLattice rho(ctx, rho0, s, traj.times[n]);
    const auto snap = defect_measures(traj.states[n], traj.config, xi);
    diffusion = 0.0;
    defect = 0.0;
    Field slice(traj.grid);
    for (std::size_t i = 0; i < nb; ++i) {
      const double c = xi.center(i);
      for (std::size_t j = 0; j < g.size(); ++j) slice[j] = rho.value(g, j, c);
      Field lap = laplacian(slice);
      const double coef = m * std::pow(std::abs(c), m - 1.0) + eta;
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (snap.chi[j * nb + i] != 0)
          diffusion += coef * double(snap.chi[j * nb + i]) * lap[j];
        const double pq = snap.pq_at(j, i);
        if (pq != 0.0) defect += pq * rho.d_xi(g, j, c);
      }
    }
    const double scale = xi.dxi() * g.cell_volume();
    diffusion *= scale;
    defect *= scale;
  };

  const double lhs = boundary_term(it) - boundary_term(is);
  double diffusion_int = 0.0, defect_int = 0.0;
  const double wdt = traj.uniform_record_dt();
  for (std::size_t n = is; n <= it; ++n) {
    double diffusion = 0.0, defect = 0.0;
    interior_terms(n, diffusion, defect);
    const double w = (n == is || n == it) ? 0.5 * wdt : wdt;
    diffusion_int += w * diffusion;
    defect_int += w * defect;
  }
  return std::abs(lhs - diffusion_int + defect_int);
}

// Residual of the integration-by-parts identity over [0, T]:
//   int ((m+1)/2) |xi|^{(m-1)/2} chi grad psi = - int grad_h u^{[(m+1)/2]} psi(x, u).
// Returns the worst component of |LHS + RHS|.
inline double ibp_residual(const Trajectory& traj, const BumpTestFunction& psi,
                           const XiGrid& xi) {
  psi.check_supported(*traj.grid);
  const Grid& g = *traj.grid;
  const double m = traj.config.m;
  const double mexp = 0.5 * (m + 1.0);
  const std::size_t nb = xi.n_bins();
  const double wdt = traj.uniform_record_dt();
  std::array<double, 2> lhs{0.0, 0.0}, rhs{0.0, 0.0};
  for (std::size_t n = 0; n < traj.states.size(); ++n) {
    const double w = (n == 0 || n + 1 == traj.states.size()) ? 0.5 * wdt : wdt;
    const Field& u = traj.states[n];
    const auto chi = kinetic_function(u, xi);
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double x = g.x(j), y = g.y(j);
      for (std::size_t i = 0; i < nb; ++i) {
        if (chi[j * nb + i] == 0) continue;
        const double c = xi.center(i);
        const auto gp = psi.gradient_x(x, y, c);
        const double coef =
            mexp * std::pow(std::abs(c), 0.5 * (m - 1.0)) * double(chi[j * nb + i]);
        lhs[0] += w * coef * gp[0] * xi.dxi() * g.cell_volume();
        lhs[1] += w * coef * gp[1] * xi.dxi() * g.cell_volume();
      }
    }
    Field upow = map_field(u, [&](double v) { return signed_power(v, mexp); });
    const auto grad = gradient_nodal(upow);
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double pv = psi.value(g.x(j), g.y(j), u[j]);
      rhs[0] += w * grad[0][j] * pv * g.cell_volume();
      rhs[1] += w * grad[1][j] * pv * g.cell_volume();
    }
  }
  double worst = 0.0;
  for (int a = 0; a < g.dim(); ++a) worst = std::max(worst, std::abs(lhs[a] + rhs[a]));
  return worst;
}

// Snapshot CSV: x[,y],xi,chi,p,q.
inline void export_snapshot_csv(const KineticSnapshot& snap, std::ostream& out) {
  const Grid& g = *snap.grid;
  out << (g.dim() == 2 ? "x,y,xi,chi,p,q" : "x,xi,chi,p,q") << "\n";
  for (std::size_t j = 0; j < g.size(); ++j)
    for (std::size_t i = 0; i < snap.xi.n_bins(); ++i) {
      out << format_double(g.x(j));
      if (g.dim() == 2) out << "," << format_double(g.y(j));
      out << "," << format_double(snap.xi.center(i)) << ","
          << int(snap.chi[j * snap.xi.n_bins() + i]) << ","
          << format_double(snap.p[j * snap.xi.n_bins() + i]) << ","
          << format_double(snap.q[j * snap.xi.n_bins() + i]) << "\n";
    }
}

} // namespace spme

#endif
