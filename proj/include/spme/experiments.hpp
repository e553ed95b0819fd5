#ifndef SPME_EXPERIMENTS_HPP
#define SPME_EXPERIMENTS_HPP

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "spme/characteristics.hpp"
#include "spme/config.hpp"
#include "spme/initial_data.hpp"
#include "spme/kinetic.hpp"
#include "spme/pme_solver.hpp"
#include "spme/report.hpp"
#include "spme/rough_paths.hpp"
#include "spme/torsion.hpp"

namespace spme {

namespace detail {

// Bounded fan-out over independent tasks; the first exception wins.
inline void parallel_run(std::vector<std::function<void()>> tasks, int workers) {
  if (workers < 1) workers = 1;
  std::exception_ptr first_error;
  std::mutex guard;
  std::size_t next = 0;
  auto body = [&] {
    for (;;) {
      std::size_t mine;
      {
        std::lock_guard<std::mutex> lock(guard);
        if (next >= tasks.size() || first_error) return;
        mine = next++;
      }
      try {
        tasks[mine]();
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1 || tasks.size() <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    const int n = int(std::min<std::size_t>(workers, tasks.size()));
    for (int i = 0; i < n; ++i) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

inline int path_refinements(const ExperimentConfig& cfg) {
  if (cfg.experiment == "convergence") return cfg.levels > 0 ? cfg.levels : 4;
  if (cfg.experiment == "cocycle") return (cfg.levels > 0 ? cfg.levels : 3) - 1;
  return 0;
}

} // namespace detail

// Materialized experiment environment: grid, coefficients, driving path (raw
// and mollified), torsion weight, and the initial data.
struct Lab {
  ExperimentConfig cfg;
  GridPtr grid;
  CoefficientSet coeffs;
  SamplePath raw;
  std::optional<MollifiedPath> mollified;
  Field phi;
  Field u0_a, u0_b;

  CharacteristicContext ctx() const { return {&coeffs, PathAccessor(&*mollified)}; }
  CharacteristicContext raw_ctx() const { return {&coeffs, PathAccessor(&raw)}; }
};

inline Field materialize_init(const GridPtr& grid, const InitSpec& spec, double m) {
  switch (spec.kind) {
    case InitSpec::Kind::Sine:
      return sine_mode(grid, int(spec.params.at("k")), spec.params.at("amp"));
    case InitSpec::Kind::Barenblatt: {
      BarenblattProfile bb(m, spec.params.at("c"), spec.params.at("center"));
      return bb.sample_at(grid, spec.params.at("t0"));
    }
    case InitSpec::Kind::Bump:
      return bump_profile(grid, spec.params.at("center"), spec.params.at("width"),
                          spec.params.at("amp"), spec.params.at("center_y"),
                          spec.params.at("width_y"));
    case InitSpec::Kind::TwoBumps:
      return two_bump_profile(grid, spec.params.at("c1"), spec.params.at("w1"),
                              spec.params.at("a1"), spec.params.at("c2"), spec.params.at("w2"),
                              spec.params.at("a2"));
  }
  throw ParameterError("initial data: unknown kind");
}

inline Lab build_lab(ExperimentConfig cfg) {
  validate_config(cfg);
  GridPtr grid = cfg.dim == 1
                     ? build_grid(cfg.length_x, cfg.nodes_x)
                     : build_grid(2, {cfg.length_x, cfg.length_y}, {cfg.nodes_x, cfg.nodes_y});

  std::vector<Coefficient> coeffs = cfg.noise;
  if (coeffs.empty()) coeffs.push_back(constant_coefficient(0.0));

  // The smallest mollification scale any refinement level will request fixes
  // the path resolution. The path does not depend on the solver dt.
  const double eps_base = cfg.eps0 > 0.0 && cfg.experiment == "convergence"
                              ? cfg.eps0
                              : cfg.solver.epsilon;
  const double eps_min = eps_base / double(1 << detail::path_refinements(cfg));
  if (cfg.path_dt < 0.0) {
    cfg.path_dt = eps_min / 2.0;
    if (cfg.split_s > 0.0) // keep the split on a path node
      cfg.path_dt = cfg.split_s / std::ceil(cfg.split_s / cfg.path_dt - 1e-9);
  } else if (cfg.path_dt > eps_min / 2.0) {
    throw ConfigError("path_dt too coarse for the smallest mollification scale " +
                      std::to_string(eps_min));
  }
  if (cfg.path_horizon < 0.0) cfg.path_horizon = cfg.T + 1.0;

  SamplePath raw = [&]() -> SamplePath {
    const std::size_t n_steps = std::size_t(std::ceil(cfg.path_horizon / cfg.path_dt - 1e-9));
    switch (cfg.path.kind) {
      case PathSpec::Kind::Zero: {
        std::vector<std::vector<double>> v(coeffs.size(),
                                           std::vector<double>(n_steps + 1, 0.0));
        return from_samples(std::move(v), cfg.path_dt);
      }
      case PathSpec::Kind::Fbm:
        return sample_fbm(cfg.path.hurst, coeffs.size(), n_steps, cfg.path_dt, cfg.path.seed);
      case PathSpec::Kind::Csv: {
        std::ifstream in(cfg.path.file);
        if (!in) throw ConfigError("cannot open path file '" + cfg.path.file + "'");
        SamplePath p = import_path_csv(in);
        if (p.n_channels() != coeffs.size())
          throw ConfigError("path file has " + std::to_string(p.n_channels()) +
                            " channels, coefficients need " + std::to_string(coeffs.size()));
        if (p.horizon() + 1e-12 < cfg.path_horizon)
          throw ConfigError("path file horizon " + std::to_string(p.horizon()) +
                            " is shorter than required " + std::to_string(cfg.path_horizon));
        return p;
      }
    }
    throw ConfigError("unhandled path kind");
  }();

  Lab lab{std::move(cfg), grid, build_coefficients(grid, std::move(coeffs)), std::move(raw),
          std::nullopt, solve_torsion_weight(grid), Field(grid), Field(grid)};
  lab.mollified.emplace(lab.raw, lab.cfg.solver.epsilon);
  lab.u0_a = materialize_init(grid, lab.cfg.u0, lab.cfg.solver.m);
  if (lab.cfg.has_u0_b) lab.u0_b = materialize_init(grid, lab.cfg.u0_b, lab.cfg.solver.m);
  return lab;
}

inline nlohmann::json config_echo(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["experiment"] = cfg.experiment;
  j["d"] = cfg.dim;
  j["Lx"] = cfg.length_x;
  if (cfg.dim == 2) j["Ly"] = cfg.length_y;
  j["nx"] = cfg.nodes_x;
  if (cfg.dim == 2) j["ny"] = cfg.nodes_y;
  j["m"] = cfg.solver.m;
  j["eta"] = cfg.solver.eta;
  j["epsilon"] = cfg.solver.epsilon;
  j["dt"] = cfg.solver.dt;
  j["T"] = cfg.T;
  j["newton_tol"] = cfg.solver.newton_tol;
  j["newton_max_iter"] = cfg.solver.newton_max_iter;
  j["power_floor"] = cfg.solver.floor();
  j["record_every"] = cfg.solver.record_every;
  j["n_xi"] = cfg.n_xi;
  j["path"] = cfg.path.text.empty() ? "zero" : cfg.path.text;
  j["path_dt"] = cfg.path_dt;
  j["path_horizon"] = cfg.path_horizon;
  for (std::size_t k = 0; k < cfg.noise_text.size(); ++k)
    j["f" + std::to_string(k + 1)] = cfg.noise_text[k];
  if (cfg.has_u0) j["u0"] = cfg.u0.text;
  if (cfg.has_u0_b) j["u0_b"] = cfg.u0_b.text;
  if (cfg.split_s > 0.0) j["split_s"] = cfg.split_s;
  if (cfg.levels > 0) j["levels"] = cfg.levels;
  if (cfg.eps0 > 0.0) j["eps0"] = cfg.eps0;
  if (cfg.eta0 >= 0.0) j["eta0"] = cfg.eta0;
  if (cfg.delta > 0.0) j["delta"] = cfg.delta;
  return j;
}

inline void base_report(ExperimentReport& rep, const Lab& lab) {
  rep.experiment = lab.cfg.experiment;
  rep.config_echo = config_echo(lab.cfg);
  if (lab.cfg.path.kind == PathSpec::Kind::Fbm) rep.seeds.push_back(lab.cfg.path.seed);
  rep.provenance["path"] = lab.cfg.path.text.empty() ? "zero" : lab.cfg.path.text;
}

inline void export_field_csv(const Field& u, std::ostream& out) {
  const Grid& g = u.grid();
  out << (g.dim() == 2 ? "x,y,value" : "x,value") << "\n";
  for (std::size_t j = 0; j < u.size(); ++j) {
    out << format_double(g.x(j));
    if (g.dim() == 2) out << "," << format_double(g.y(j));
    out << "," << format_double(u[j]) << "\n";
  }
}

// One CSV per recorded time plus a manifest block inside the report.
inline void export_trajectory(const Trajectory& traj, const std::string& directory,
                              ExperimentReport& rep) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(directory) / "states", ec);
  if (ec) throw NumericalError("cannot create '" + directory + "/states'");
  nlohmann::json manifest = nlohmann::json::array();
  for (std::size_t n = 0; n < traj.n_recorded(); ++n) {
    char name[64];
    std::snprintf(name, sizeof(name), "states/state_%06zu.csv", n);
    auto out = open_output((fs::path(directory) / name).string());
    export_field_csv(traj.states[n], out);
    manifest.push_back({{"time", traj.times[n]}, {"file", name}});
  }
  rep.config_echo["state_files"] = manifest;
}

// ---------------------------------------------------------------------------
// contraction: two nonnegative data, one path; weighted L1 distance decay.
inline ExperimentReport run_contraction(const ExperimentConfig& cfg_in) {
  Lab lab = build_lab(cfg_in);
  const ExperimentConfig& cfg = lab.cfg;
  if (lab.u0_a.min() < 0.0 || lab.u0_b.min() < 0.0)
    throw ParameterError(
        "contraction: both initial data must be nonnegative (uniqueness holds on L2_+)");

  auto ctx = lab.ctx();
  Trajectory t1, t2;
  detail::parallel_run({[&] { t1 = solve(lab.u0_a, cfg.T, cfg.solver, &ctx); },
                        [&] { t2 = solve(lab.u0_b, cfg.T, cfg.solver, &ctx); }},
                       cfg.workers);

  const double t_star = small_time_horizon(ctx, lab.phi, cfg.T, cfg.solver.dt);

  ExperimentReport rep;
  base_report(rep, lab);
  Series& dist = rep.add_series("distance", {"t", "weighted", "phi_only"});
  std::vector<double> weighted, phi_only;
  for (std::size_t n = 0; n < t1.n_recorded(); ++n) {
    Field diff = t1.states[n] - t2.states[n];
    Field vphi = hadamard(ctx.weight_field(0.0, t1.times[n]), lab.phi);
    const double dw = weighted_lp_norm(diff, vphi, 1.0);
    const double dp = weighted_lp_norm(diff, lab.phi, 1.0);
    weighted.push_back(dw);
    phi_only.push_back(dp);
    dist.rows.push_back({t1.times[n], dw, dp});
  }

  const double slack = 10.0 * cfg.solver.newton_tol;
  double worst_increment = 0.0;
  for (std::size_t n = 0; n + 1 < weighted.size(); ++n) {
    if (t1.times[n + 1] > t_star + 1e-12) break;
    worst_increment = std::max(worst_increment, weighted[n + 1] - weighted[n]);
  }
  rep.add_verdict("weighted_distance_nonincreasing_until_t_star", worst_increment <= slack,
                  worst_increment, slack, "<=");

  double c_obs = 0.0;
  bool finite = true;
  if (phi_only.front() > 0.0) {
    for (double d : phi_only) c_obs = std::max(c_obs, d / phi_only.front());
    finite = std::isfinite(c_obs);
  } else {
    for (double d : phi_only) finite = finite && d <= slack;
  }
  rep.add_verdict("phi_distance_bounded", finite, c_obs, 0.0, "finite");

  rep.metrics["t_star"] = t_star;
  rep.metrics["c_obs"] = c_obs;
  rep.metrics["initial_weighted_distance"] = weighted.front();
  rep.metrics["final_weighted_distance"] = weighted.back();
  return rep;
}

// ---------------------------------------------------------------------------
// convergence: the (eta_k, eps_k) ladder and its Cauchy differences.
inline ExperimentReport run_convergence(const ExperimentConfig& cfg_in) {
  Lab lab = build_lab(cfg_in);
  const ExperimentConfig& cfg = lab.cfg;
  const int K = cfg.levels > 0 ? cfg.levels : 4;
  if (K < 3) throw ConfigError("convergence needs at least 3 levels");
  const double eps0 = cfg.eps0 > 0.0 ? cfg.eps0 : cfg.solver.epsilon;
  const double eta0 = cfg.eta0 >= 0.0 ? cfg.eta0 : cfg.solver.eta;

  std::vector<Trajectory> runs(K + 1);
  std::vector<std::optional<MollifiedPath>> paths(K + 1);
  std::vector<std::function<void()>> tasks;
  for (int k = 0; k <= K; ++k)
    tasks.push_back([&, k] {
      SolverConfig sc = cfg.solver;
      sc.epsilon = eps0 * std::pow(0.5, k);
      sc.eta = eta0 * std::pow(0.5, k);
      paths[k].emplace(lab.raw, sc.epsilon);
      CoefficientSet const& coeffs = lab.coeffs;
      CharacteristicContext ctx(&coeffs, PathAccessor(&*paths[k]));
      try {
        runs[k] = solve(lab.u0_a, cfg.T, sc, &ctx);
      } catch (const SolverError& e) {
        throw SolverError(std::string(e.what()) + " (ladder level " + std::to_string(k) + ")",
                          e.residual, e.step);
      }
    });
  detail::parallel_run(std::move(tasks), cfg.workers);

  ExperimentReport rep;
  base_report(rep, lab);
  Series& cauchy = rep.add_series("cauchy", {"k", "eps", "eta", "e_k"});
  Series& energy = rep.add_series("energy", {"k", "sup_l2_sq", "dissipation_power",
                                             "dissipation_viscous"});
  std::vector<double> e(K);
  for (int k = 0; k < K; ++k) {
    double acc = 0.0;
    const double wdt = runs[k].uniform_record_dt();
    for (std::size_t n = 0; n < runs[k].n_recorded(); ++n) {
      const double w = (n == 0 || n + 1 == runs[k].n_recorded()) ? 0.5 * wdt : wdt;
      acc += w * lp_norm(runs[k].states[n] - runs[k + 1].states[n], 1.0);
    }
    e[k] = acc;
    cauchy.rows.push_back({double(k), eps0 * std::pow(0.5, k), eta0 * std::pow(0.5, k), e[k]});
  }
  for (int k = 0; k <= K; ++k) {
    EnergyReport er = energy_report(runs[k]);
    energy.rows.push_back({double(k), er.sup_l2_sq, er.dissipation_power,
                           er.dissipation_viscous});
    if (k == 0) rep.metrics["sup_l2_sq_level0"] = er.sup_l2_sq;
  }

  double worst_ratio = 0.0; // e_{k+1} - e_k, should stay <= 0
  for (int k = 1; k + 1 < K; ++k) worst_ratio = std::max(worst_ratio, e[k + 1] - e[k]);
  const double slack = 1e-12 + 1e-9 * e[0];
  rep.add_verdict("cauchy_differences_nonincreasing", worst_ratio <= slack, worst_ratio, slack,
                  "<=");
  rep.add_verdict("last_difference_halved", e[K - 1] <= 0.5 * e[1] + slack, e[K - 1],
                  0.5 * e[1], "<=");
  for (int k = 0; k < K; ++k) rep.metrics["e_" + std::to_string(k)] = e[k];
  return rep;
}

// ---------------------------------------------------------------------------
// cocycle: restart at split_s with the shifted, freshly mollified path.
inline ExperimentReport run_cocycle(const ExperimentConfig& cfg_in) {
  Lab lab = build_lab(cfg_in);
  const ExperimentConfig& cfg = lab.cfg;
  const int levels = cfg.levels > 0 ? cfg.levels : (cfg.has_noise() ? 3 : 1);
  const double s = cfg.split_s;

  // split must sit on the step grid and on the path nodes
  const double steps_to_s = s / cfg.solver.dt;
  if (std::abs(steps_to_s - std::round(steps_to_s)) > 1e-9)
    throw ConfigError("split_s must be a multiple of dt");
  const double nodes_to_s = s / cfg.path_dt;
  if (std::abs(nodes_to_s - std::round(nodes_to_s)) > 1e-9)
    throw ConfigError("split_s must be a multiple of path_dt");

  // theta_s z: tail of the raw samples re-based at the split.
  const std::size_t shift = std::size_t(std::lround(nodes_to_s));
  std::vector<std::vector<double>> tail(lab.raw.n_channels());
  for (std::size_t k = 0; k < tail.size(); ++k)
    tail[k].assign(lab.raw.channel(k).begin() + shift, lab.raw.channel(k).end());
  SamplePath shifted = from_samples(std::move(tail), cfg.path_dt);

  ExperimentReport rep;
  base_report(rep, lab);
  Series& mismatch = rep.add_series("mismatch", {"level", "dt", "eps", "M", "omega_eps"});
  std::vector<double> M(levels);
  for (int l = 0; l < levels; ++l) {
    SolverConfig sc = cfg.solver;
    sc.dt = cfg.solver.dt * std::pow(0.5, l);
    sc.epsilon = cfg.solver.epsilon * std::pow(0.5, l);
    MollifiedPath full(lab.raw, sc.epsilon);
    MollifiedPath part(shifted, sc.epsilon);
    CharacteristicContext ctx_full(&lab.coeffs, PathAccessor(&full));
    CharacteristicContext ctx_part(&lab.coeffs, PathAccessor(&part));
    Trajectory whole = solve(lab.u0_a, cfg.T, sc, &ctx_full);
    Trajectory head = solve(lab.u0_a, s, sc, &ctx_full);
    Trajectory tail_run = solve(head.final_state(), cfg.T - s, sc, &ctx_part);
    M[l] = lp_norm(whole.final_state() - tail_run.final_state(), 1.0);
    mismatch.rows.push_back({double(l), sc.dt, sc.epsilon, M[l],
                             modulus_of_continuity(lab.raw, sc.epsilon, cfg.T + 1.0)});
  }

  if (!cfg.has_noise()) {
    rep.add_verdict("restart_reproduces_run", M[0] <= cfg.solver.newton_tol, M[0],
                    cfg.solver.newton_tol, "<=");
  } else {
    double min_ratio = 1e300;
    for (int l = 0; l + 1 < levels; ++l)
      min_ratio = std::min(min_ratio, M[l] / std::max(M[l + 1], 1e-300));
    if (levels > 1)
      rep.add_verdict("mismatch_halves_with_dt_eps", min_ratio >= 1.5, min_ratio, 1.5, ">=");
  }
  for (int l = 0; l < levels; ++l) rep.metrics["M_" + std::to_string(l)] = M[l];
  return rep;
}

// ---------------------------------------------------------------------------
// positivity: nonnegative data stay nonnegative; phi-weighted envelope.
inline ExperimentReport run_positivity(const ExperimentConfig& cfg_in) {
  Lab lab = build_lab(cfg_in);
  const ExperimentConfig& cfg = lab.cfg;
  if (lab.u0_a.min() < 0.0)
    throw ParameterError("positivity: initial data must be nonnegative");
  auto ctx = lab.ctx();
  Trajectory traj = solve(lab.u0_a, cfg.T, cfg.solver, &ctx);

  double min_value = lab.u0_a.min();
  for (const auto& d : traj.diagnostics) min_value = std::min(min_value, d.min_value);

  ExperimentReport rep;
  base_report(rep, lab);
  Series& mins = rep.add_series("step_minima", {"t", "min_value"});
  for (const auto& d : traj.diagnostics) mins.rows.push_back({d.time, d.min_value});
  Series& env = rep.add_series("envelope", {"t", "phi_weighted_l1"});
  double c_obs = 0.0;
  double d0 = 0.0;
  for (std::size_t n = 0; n < traj.n_recorded(); ++n) {
    const double d = weighted_lp_norm(traj.states[n], lab.phi, 1.0);
    if (n == 0) d0 = d;
    if (d0 > 0.0) c_obs = std::max(c_obs, d / d0);
    env.rows.push_back({traj.times[n], d});
  }
  const double slack = 10.0 * cfg.solver.newton_tol;
  rep.add_verdict("min_value_nonnegative", min_value >= -slack, min_value, -slack, ">=");
  rep.metrics["min_value"] = min_value;
  rep.metrics["c_obs"] = c_obs;
  return rep;
}

// ---------------------------------------------------------------------------
// solve: a single run with full trajectory export.
inline ExperimentReport run_solve(const ExperimentConfig& cfg_in) {
  Lab lab = build_lab(cfg_in);
  const ExperimentConfig& cfg = lab.cfg;
  auto ctx = lab.ctx();
  Trajectory traj = solve(lab.u0_a, cfg.T, cfg.solver, &ctx);

  ExperimentReport rep;
  base_report(rep, lab);
  Series& diag = rep.add_series("diagnostics", {"t", "newton_iterations", "residual",
                                                "min_value"});
  for (const auto& d : traj.diagnostics)
    diag.rows.push_back({d.time, double(d.newton_iterations), d.residual, d.min_value});
  EnergyReport er = energy_report(traj);
  rep.metrics["sup_l2_sq"] = er.sup_l2_sq;
  rep.metrics["dissipation_power"] = er.dissipation_power;
  rep.metrics["dissipation_viscous"] = er.dissipation_viscous;
  rep.metrics["min_value"] = traj.min_over_run();
  export_trajectory(traj, cfg.out_dir, rep);
  {
    auto out = open_output((std::filesystem::path(cfg.out_dir) / "path.csv").string());
    export_path_csv(lab.raw, out);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// diagnose: kinetic-formulation diagnostics on one run.
inline ExperimentReport run_diagnose(const ExperimentConfig& cfg_in) {
  Lab lab = build_lab(cfg_in);
  const ExperimentConfig& cfg = lab.cfg;
  auto ctx = lab.ctx();
  Trajectory traj = solve(lab.u0_a, cfg.T, cfg.solver, &ctx);

  XiGrid xi = xi_grid_for(traj, cfg.n_xi);
  const double delta = cfg.delta > 0.0 ? cfg.delta : std::min(cfg.solver.m, 1.0);

  ExperimentReport rep;
  base_report(rep, lab);
  rep.metrics["t_star"] = small_time_horizon(ctx, lab.phi, cfg.T, cfg.solver.dt);
  rep.metrics["xi_max"] = xi.xi_max();
  rep.metrics["n_xi"] = double(xi.n_bins());
  rep.metrics["dxi"] = xi.dxi();
  rep.metrics["delta"] = delta;
  rep.metrics["singular_moment"] = singular_moment(traj, delta, xi);

  Field psi = bump_profile(lab.grid, 0.5 * cfg.length_x, 0.3 * cfg.length_x, 1.0,
                           0.5 * cfg.length_y, 0.3 * cfg.length_y);
  if (traj.states.front().min() >= 0.0)
    rep.metrics["log_moment"] = log_moment(traj, psi, xi);

  double sup_u = 0.0;
  for (const auto& u : traj.states) sup_u = std::max(sup_u, u.max_abs());
  if (sup_u > 0.0) {
    auto rho0 = make_test_function(*lab.grid, {0.5 * cfg.length_x, 0.5 * cfg.length_y},
                                   {0.3 * cfg.length_x, 0.3 * cfg.length_y}, 0.5 * sup_u,
                                   1.1 * sup_u);
    rep.metrics["transport_residual"] = transport_residual(traj, rho0, 0.0, cfg.T, ctx, xi);
    rep.metrics["ibp_residual"] = ibp_residual(traj, rho0, xi);
  }

  EnergyReport er = energy_report(traj);
  rep.metrics["sup_l2_sq"] = er.sup_l2_sq;
  rep.metrics["dissipation_power"] = er.dissipation_power;
  rep.metrics["dissipation_viscous"] = er.dissipation_viscous;
  rep.metrics["chain_rule_mismatch_final"] =
      chain_rule_mismatch_l1(traj.final_state(), cfg.solver.m, cfg.solver.floor());
  rep.metrics["poincare_constant"] = poincare_constant(*lab.grid);

  // bookkeeping identity: the delta = 1 moment equals the dissipation totals
  const double m1 = singular_moment(traj, 1.0, xi);
  const double coef = 4.0 * cfg.solver.m / ((cfg.solver.m + 1.0) * (cfg.solver.m + 1.0));
  const double expected = er.dissipation_viscous + coef * er.dissipation_power;
  const double defect = std::abs(m1 - expected);
  const double tol = 1e-12 * std::max(1.0, expected);
  rep.add_verdict("defect_mass_matches_energy", defect <= tol, defect, tol, "<=");

  KineticSnapshot snap = defect_measures(traj.final_state(), cfg.solver, xi);
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (!ec) {
    auto out = open_output((std::filesystem::path(cfg.out_dir) / "snapshot_final.csv").string());
    export_snapshot_csv(snap, out);
  }
  return rep;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment == "contraction") return run_contraction(cfg);
  if (cfg.experiment == "convergence") return run_convergence(cfg);
  if (cfg.experiment == "cocycle") return run_cocycle(cfg);
  if (cfg.experiment == "positivity") return run_positivity(cfg);
  if (cfg.experiment == "solve") return run_solve(cfg);
  if (cfg.experiment == "diagnose") return run_diagnose(cfg);
  throw ConfigError("unknown experiment '" + cfg.experiment + "'");
}

} // namespace spme

#endif
