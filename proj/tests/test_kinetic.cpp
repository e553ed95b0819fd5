#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "spme/initial_data.hpp"
#include "spme/kinetic.hpp"
#include "spme/pme_solver.hpp"

using namespace spme;

namespace {

struct NoiseSetup {
  GridPtr grid;
  CoefficientSet coeffs;
  SamplePath raw;
  MollifiedPath mollified;

  NoiseSetup(GridPtr g, std::vector<Coefficient> cs, SamplePath p, double eps)
      : grid(g), coeffs(build_coefficients(g, std::move(cs))), raw(p), mollified(p, eps) {}

  CharacteristicContext ctx() const { return {&coeffs, PathAccessor(&mollified)}; }
};

double chibar(double s, double xi) {
  if (0.0 < xi && xi < s) return 1.0;
  if (s < xi && xi < 0.0) return -1.0;
  return 0.0;
}

} // namespace

TEST_CASE("kinetic function matches the indicator definition") {
  CHECK(chibar(2.0, 1.0) == 1.0);
  CHECK(chibar(-2.0, -1.0) == -1.0);
  CHECK(chibar(1.0, 3.0) == 0.0);

  auto grid = build_grid(1.0, 33);
  XiGrid xi(4.0, 64);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> uni(-3.0, 3.0);
  Field u(grid);
  for (std::size_t j = 0; j < u.size(); ++j)
    if (!grid->boundary(j)) u[j] = uni(rng);
  const auto chi = kinetic_function(u, xi);
  for (std::size_t j = 0; j < u.size(); ++j)
    for (std::size_t i = 0; i < xi.n_bins(); ++i) {
      const double expected = chibar(u[j], xi.center(i));
      CHECK(double(chi[j * xi.n_bins() + i]) == expected);
      CHECK(std::abs(chi[j * xi.n_bins() + i]) <= 1);
    }

  // bin sums reproduce u to bin resolution
  for (std::size_t j = 0; j < u.size(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < xi.n_bins(); ++i) s += double(chi[j * xi.n_bins() + i]);
    s *= xi.dxi();
    CHECK(std::abs(s - u[j]) <= xi.dxi());
  }

  Field zero(grid);
  const auto chi0 = kinetic_function(zero, xi);
  for (auto c : chi0) CHECK(c == 0);

  Field big(grid);
  for (std::size_t j = 0; j < big.size(); ++j)
    if (!grid->boundary(j)) big[j] = 10.0;
  CHECK_THROWS_WITH_AS(kinetic_function(big, xi), doctest::Contains("max|u|"), ParameterError);
}

TEST_CASE("xi grid avoids the origin and stays even") {
  XiGrid xi(1.0, 8);
  for (std::size_t i = 0; i < xi.n_bins(); ++i) CHECK(std::abs(xi.center(i)) > 1e-12);
  CHECK_THROWS_AS(XiGrid(1.0, 7), ParameterError);
  CHECK_THROWS_AS(XiGrid(0.0, 8), ParameterError);
}

TEST_CASE("defect deposits conserve the dissipation bookkeeping") {
  auto grid = build_grid(1.0, 65);
  SolverConfig cfg;
  cfg.m = 2.0;
  cfg.eta = 0.3;
  cfg.dt = 1e-3;
  Field u = bump_profile(grid, 0.5, 0.3, 1.2);
  XiGrid xi(2.0, 128);
  KineticSnapshot snap = defect_measures(u, cfg, xi);

  for (double d : snap.p) CHECK(d >= 0.0);
  for (double d : snap.q) CHECK(d >= 0.0);

  Field upow = map_field(u, [&](double v) { return signed_power(v, 1.5); });
  const double q_exact = (4.0 * cfg.m / ((cfg.m + 1.0) * (cfg.m + 1.0))) * link_energy_total(upow);
  const double p_exact = cfg.eta * link_energy_total(u);
  const double q_total = xi_x_integral(snap, [&](std::size_t j, std::size_t i) {
    return snap.q[j * xi.n_bins() + i];
  });
  const double p_total = xi_x_integral(snap, [&](std::size_t j, std::size_t i) {
    return snap.p[j * xi.n_bins() + i];
  });
  CHECK(q_total == doctest::Approx(q_exact).epsilon(1e-12));
  CHECK(p_total == doctest::Approx(p_exact).epsilon(1e-12));

  // the identity is insensitive to the bin count
  XiGrid coarse(2.0, 16);
  KineticSnapshot snap2 = defect_measures(u, cfg, coarse);
  const double q2 = xi_x_integral(snap2, [&](std::size_t j, std::size_t i) {
    return snap2.q[j * coarse.n_bins() + i];
  });
  CHECK(q2 == doctest::Approx(q_exact).epsilon(1e-12));

  // eta = 0 leaves no entropy deposit
  SolverConfig inviscid = cfg;
  inviscid.eta = 0.0;
  KineticSnapshot snap3 = defect_measures(u, inviscid, xi);
  for (double d : snap3.p) CHECK(d == 0.0);

  // m = 1: the parabolic coefficient collapses to 1
  SolverConfig heat = cfg;
  heat.m = 1.0;
  heat.eta = 0.0;
  KineticSnapshot snap4 = defect_measures(u, heat, xi);
  const double q4 = xi_x_integral(snap4, [&](std::size_t j, std::size_t i) {
    return snap4.q[j * xi.n_bins() + i];
  });
  CHECK(q4 == doctest::Approx(link_energy_total(u)).epsilon(1e-12));
}

TEST_CASE("kinetic L1 identity") {
  auto grid = build_grid(1.0, 65);
  XiGrid xi(2.0, 256);
  Field u = two_bump_profile(grid, 0.35, 0.15, 1.1, 0.65, 0.2, -0.7);
  const auto chi = kinetic_function(u, xi);
  double sum = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j)
    for (std::size_t i = 0; i < xi.n_bins(); ++i)
      sum += double(chi[j * xi.n_bins() + i]) * (xi.center(i) > 0 ? 1.0 : -1.0);
  sum *= xi.dxi() * grid->cell_volume();
  CHECK(std::abs(sum - lp_norm(u, 1.0)) <= xi.dxi());
}

TEST_CASE("singular moments") {
  auto grid = build_grid(1.0, 65);
  SolverConfig cfg;
  cfg.m = 0.5;
  cfg.dt = 1e-3;
  Field u = bump_profile(grid, 0.5, 0.3, 1.0);
  XiGrid xi(2.0, 256);
  KineticSnapshot snap = defect_measures(u, cfg, xi);

  // delta = 1 recovers the total defect mass
  const double total = xi_x_integral(snap, [&](std::size_t j, std::size_t i) {
    return snap.pq_at(j, i);
  });
  CHECK(singular_moment(snap, 1.0) == doctest::Approx(total).epsilon(1e-12));
  CHECK_THROWS_AS(singular_moment(snap, 0.0), ParameterError);

  Field zero(grid);
  KineticSnapshot sz = defect_measures(zero, cfg, xi);
  CHECK(singular_moment(sz, 0.5) == 0.0);

  // psi weighting: zero weight kills the moment, interior bump keeps it finite
  CHECK(log_moment(sz, zero) == 0.0);
  Field psi = bump_profile(grid, 0.5, 0.3, 1.0);
  CHECK(log_moment(snap, psi) >= 0.0);
  CHECK(std::isfinite(log_moment(snap, psi)));
}

TEST_CASE("trajectory moments tie out with the energy report") {
  auto grid = build_grid(1.0, 129);
  SolverConfig cfg;
  cfg.m = 2.0;
  cfg.eta = 0.1;
  cfg.dt = 1e-3;
  Field u0 = bump_profile(grid, 0.5, 0.25, 1.0);
  Trajectory traj = solve(u0, 0.02, cfg);
  XiGrid xi = xi_grid_for(traj);
  const double moment1 = singular_moment(traj, 1.0, xi);
  EnergyReport rep = energy_report(traj);
  const double expected =
      rep.dissipation_viscous + (4.0 * cfg.m / ((cfg.m + 1.0) * (cfg.m + 1.0))) * rep.dissipation_power;
  CHECK(moment1 == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("log moment refuses signed initial data") {
  auto grid = build_grid(1.0, 65);
  SolverConfig cfg;
  cfg.m = 0.5;
  cfg.dt = 1e-3;
  Field u0 = bump_profile(grid, 0.5, 0.2, -1.0); // negative bump
  Trajectory traj = solve(u0, 0.002, cfg);
  XiGrid xi = xi_grid_for(traj);
  Field psi = bump_profile(grid, 0.5, 0.3, 1.0);
  CHECK_THROWS_WITH_AS(log_moment(traj, psi, xi), doctest::Contains("nonnegative"),
                       ParameterError);
}

TEST_CASE("transport residual: zero trajectory and heat refinement") {
  SUBCASE("zero trajectory gives zero residual") {
    auto grid = build_grid(1.0, 65);
    NoiseSetup ns(grid, {cosine_coefficient(0.3, 0.3, 1.0)},
                  sample_fbm(0.5, 1, 256, 1.0 / 128.0, 4), 0.0625);
    auto ctx = ns.ctx();
    SolverConfig cfg;
    cfg.m = 2.0;
    cfg.dt = 1e-3;
    Field zero(grid);
    Trajectory traj = solve(zero, 0.02, cfg, &ctx);
    XiGrid xi(1.0, 64);
    auto rho0 = make_test_function(*grid, {0.5, 0.5}, {0.3, 0.3}, 0.2, 0.5);
    CHECK(transport_residual(traj, rho0, 0.0, 0.02, ctx, xi) < 1e-14);
  }

  SUBCASE("heat run residual decreases under refinement") {
    double prev = 1e100;
    for (int level = 0; level < 3; ++level) {
      const int n = 64 << level;
      auto grid = build_grid(1.0, n + 1);
      NoiseSetup ns(grid, {constant_coefficient(0.0)},
                    sample_fbm(0.5, 1, 128, 1.0 / 64.0, 4), 0.25);
      auto ctx = ns.ctx();
      SolverConfig cfg;
      cfg.m = 1.0;
      cfg.dt = 4e-3 / (1 << level);
      Field u0 = bump_profile(grid, 0.45, 0.3, 1.0);
      Trajectory traj = solve(u0, 0.032, cfg, &ctx);
      XiGrid xi(1.5, 128 << level);
      auto rho0 = make_test_function(*grid, {0.55, 0.5}, {0.35, 0.35}, 0.4, 0.45);
      const double res = transport_residual(traj, rho0, 0.0, 0.032, ctx, xi);
      CHECK(res < prev / 1.5);
      prev = res;
    }
  }
}

TEST_CASE("ibp residual: zero trajectory and heat refinement") {
  SUBCASE("zero trajectory") {
    auto grid = build_grid(1.0, 65);
    SolverConfig cfg;
    cfg.m = 1.0;
    cfg.dt = 1e-3;
    Field zero(grid);
    Trajectory traj = solve(zero, 0.01, cfg);
    XiGrid xi(1.0, 64);
    auto psi = make_test_function(*grid, {0.5, 0.5}, {0.3, 0.3}, 0.3, 0.6);
    CHECK(ibp_residual(traj, psi, xi) == 0.0);
  }

  SUBCASE("xi-independent weight, m = 2") {
    double prev = 1e100;
    for (int level = 0; level < 3; ++level) {
      const int n = 32 << level;
      auto grid = build_grid(1.0, n + 1);
      SolverConfig cfg;
      cfg.m = 2.0;
      cfg.dt = 4e-3 / (1 << level);
      Field u0 = bump_profile(grid, 0.45, 0.3, 1.0);
      Trajectory traj = solve(u0, 0.032, cfg);
      XiGrid xi(1.5, 64 << level);
      auto psi = make_test_function(*grid, {0.6, 0.5}, {0.3, 0.3}, 0.0, 1.0, false);
      const double res = ibp_residual(traj, psi, xi);
      CHECK(res < prev);
      prev = res;
    }
  }

  SUBCASE("residual decreases under refinement, m = 1 and m = 2") {
    for (double m : {1.0, 2.0}) {
      double prev = 1e100;
      for (int level = 0; level < 3; ++level) {
        const int n = 32 << level;
        auto grid = build_grid(1.0, n + 1);
        SolverConfig cfg;
        cfg.m = m;
        cfg.dt = 4e-3 / (1 << level);
        // asymmetric data against an off-center weight so neither side
        // vanishes by symmetry
        Field u0 = bump_profile(grid, 0.45, 0.3, 1.0);
        Trajectory traj = solve(u0, 0.032, cfg);
        XiGrid xi(1.5, 64 << level);
        auto psi = make_test_function(*grid, {0.6, 0.5}, {0.3, 0.3}, 0.2, 0.3);
        const double res = ibp_residual(traj, psi, xi);
        CHECK(res < prev);
        prev = res;
      }
    }
  }
}

TEST_CASE("snapshot csv export shape") {
  auto grid = build_grid(1.0, 5);
  SolverConfig cfg;
  cfg.m = 2.0;
  cfg.dt = 1e-3;
  Field u = bump_profile(grid, 0.5, 0.3, 1.0);
  XiGrid xi(2.0, 4);
  KineticSnapshot snap = defect_measures(u, cfg, xi);
  std::ostringstream out;
  export_snapshot_csv(snap, out);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "x,xi,chi,p,q");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == grid->size() * xi.n_bins());

  auto g2 = build_grid(2, {1.0, 1.0}, {5, 5});
  Field u2 = bump_profile(g2, 0.5, 0.3, 1.0);
  KineticSnapshot snap2 = defect_measures(u2, cfg, xi);
  std::ostringstream out2;
  export_snapshot_csv(snap2, out2);
  CHECK(out2.str().rfind("x,y,xi,chi,p,q", 0) == 0);

  // deposit conservation also holds on the 2-d grid
  Field upow = map_field(u2, [&](double v) { return signed_power(v, 1.5); });
  const double q_exact = (4.0 * cfg.m / 9.0) * link_energy_total(upow);
  const double q_total = xi_x_integral(snap2, [&](std::size_t j, std::size_t i) {
    return snap2.q[j * xi.n_bins() + i];
  });
  CHECK(q_total == doctest::Approx(q_exact).epsilon(1e-12));
}
