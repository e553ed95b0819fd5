// Acceptance suite: one pass/fail line per criterion, exit 0 only if all pass.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "spme/experiments.hpp"

using namespace spme;

namespace {

int failures = 0;

void verdict(int number, const std::string& name, bool pass, const std::string& detail) {
  std::printf("criterion %02d %-42s %s  (%s)\n", number, name.c_str(), pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

std::filesystem::path work_dir() {
  auto dir = std::filesystem::temp_directory_path() / "spme_acceptance";
  std::filesystem::create_directories(dir);
  return dir;
}

// Rough driving signal with a Holder-3/4 cusp at t_c plus a smooth sweep;
// its modulus of continuity decays like delta^(3/4) deterministically.
std::string write_cusp_path(double t_c, double horizon, double path_dt,
                            const std::string& name) {
  const std::size_t n = std::size_t(std::llround(horizon / path_dt));
  std::vector<double> v(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = double(i) * path_dt;
    v[i] = 0.6 * std::pow(std::abs(t_c - t), 0.75) + 0.2 * std::sin(2.0 * t);
  }
  const auto file = work_dir() / name;
  std::ofstream out(file);
  export_path_csv(from_samples({v}, path_dt), out);
  return file.string();
}

// 1. m=1 heat run against the separable solution.
void criterion_heat() {
  const auto t0 = std::chrono::steady_clock::now();
  auto grid = build_grid(1.0, 257);
  SolverConfig cfg;
  cfg.m = 1.0;
  cfg.dt = 1e-4;
  Field u0 = sine_mode(grid, 1, 1.0);
  Trajectory traj = solve(u0, 0.1, cfg);
  double worst = 0.0;
  for (std::size_t n = 0; n < traj.n_recorded(); ++n) {
    const double decay = std::exp(-M_PI * M_PI * traj.times[n]);
    for (std::size_t j = 0; j < u0.size(); ++j)
      worst = std::max(worst,
                       std::abs(traj.states[n][j] - decay * std::sin(M_PI * grid->x(j))));
  }
  const double runtime = seconds_since(t0);
  verdict(1, "heat-equation oracle", worst <= 5e-3 && runtime <= 10.0,
          fmt("sup error %.3e <= 5e-3, runtime %.2fs <= 10s", worst, runtime));
}

// 2. m=2 Barenblatt profile evolved, closed-form oracle, h/dt refinement.
void criterion_barenblatt() {
  BarenblattProfile bb(2.0, 0.02, 0.5);
  const double t0 = 0.1, T = 0.05;
  double errors[2];
  for (int lev = 0; lev < 2; ++lev) {
    auto grid = build_grid(1.0, 512 * (1 << lev) + 1);
    SolverConfig cfg;
    cfg.m = 2.0;
    cfg.dt = 1e-4 / (1 << lev);
    Trajectory traj = solve(bb.sample_at(grid, t0), T, cfg);
    Field exact = bb.sample_at(grid, t0 + T);
    errors[lev] = lp_norm(traj.final_state() - exact, 1.0) / lp_norm(exact, 1.0);
  }
  verdict(2, "barenblatt oracle", errors[0] <= 0.02 && errors[1] < errors[0],
          fmt("rel L1 error %.3e <= 2e-2, refined %.3e < coarse", errors[0], errors[1]));
}

// 3. characteristic flow identities at 1e-12 over randomized samples.
void criterion_characteristics() {
  const auto t0 = std::chrono::steady_clock::now();
  auto grid = build_grid(1.0, 65);
  auto coeffs = build_coefficients(
      grid, {cosine_coefficient(0.5, 0.5, 1.0), gaussian_coefficient(0.8, 0.15, 0.4)});
  SamplePath path = sample_fbm(0.5, 2, 256, 1.0 / 256.0, 17);
  CharacteristicContext ctx(&coeffs, PathAccessor(&path));
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> ux(0.0, 1.0), uxi(-5.0, 5.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = ux(rng), xi = uxi(rng);
    double s = ux(rng), t = ux(rng);
    if (s > t) std::swap(s, t);
    const auto incr = ctx.increments(s, t);
    const double S = ctx.noise_sum(x, 0.0, incr);
    const double fwd = xi * std::exp(S);
    const double scale = std::max(1.0, std::abs(xi));
    worst = std::max(worst, std::abs(ctx.backward(x, 0.0, fwd, s, t) - xi) / scale);
    worst = std::max(worst,
                     std::abs(ctx.forward(x, 0.0, ctx.backward(x, 0.0, xi, s, t), s, t) - xi) /
                         scale);
    // v * d_xi(forward) with the exact linear-in-xi derivative
    worst = std::max(worst, std::abs(ctx.weight(x, 0.0, s, t) * std::exp(S) - 1.0));
    // weight cocycle across a midpoint
    const double mid = s + ux(rng) * (t - s);
    worst = std::max(worst, std::abs(ctx.weight(x, 0.0, s, t) -
                                     ctx.weight(x, 0.0, s, mid) * ctx.weight(x, 0.0, mid, t)) /
                                ctx.weight(x, 0.0, s, t));
  }
  const double runtime = seconds_since(t0);
  verdict(3, "characteristics identities", worst <= 1e-12 && runtime < 1.0,
          fmt("worst identity error %.3e <= 1e-12, runtime %.2fs < 1s", worst, runtime));
}

// 4. contraction of the weighted L1 distance.
void criterion_contraction() {
  bool pass_a = true;
  double worst_inc = 0.0;
  for (double m : {0.5, 1.0, 2.0, 3.0}) {
    ExperimentConfig cfg = parse_config(fmt("experiment = contraction\n"
                                            "m = %g\n"
                                            "dt = 1e-3\n"
                                            "T = 0.03\n"
                                            "nodes = 129\n"
                                            "u0 = bump:center=0.45,width=0.2,amp=1\n"
                                            "u0_b = bump:center=0.55,width=0.25,amp=0.6\n",
                                            m));
    ExperimentReport rep = run_contraction(cfg);
    pass_a = pass_a && rep.all_pass() && rep.metrics.at("t_star") >= cfg.T - 1e-12;
    worst_inc = std::max(worst_inc, rep.verdicts[0].measured);
  }
  verdict(4, "contraction, noiseless (m in {1/2,1,2,3})", pass_a,
          fmt("worst step increment %.3e <= 10*newton_tol", worst_inc));

  double c_obs[2];
  bool pass_b = true;
  for (int lev = 0; lev < 2; ++lev) {
    ExperimentConfig cfg = parse_config(fmt("experiment = contraction\n"
                                            "m = 0.5\n"
                                            "dt = %g\n"
                                            "T = 0.02\n"
                                            "nodes = %d\n"
                                            "epsilon = 0.05\n"
                                            "newton_tol = 1e-8\n"
                                            "path = fbm:H=0.5,seed=11\n"
                                            "f1 = cosine:a=0.5,b=0.5\n"
                                            "u0 = bump:center=0.45,width=0.2,amp=1\n"
                                            "u0_b = bump:center=0.55,width=0.25,amp=0.6\n",
                                            2.5e-4 / (1 << lev), 128 * (1 << lev) + 1));
    ExperimentReport rep = run_contraction(cfg);
    pass_b = pass_b && rep.all_pass() && rep.metrics.at("t_star") > 0.0;
    c_obs[lev] = rep.metrics.at("c_obs");
  }
  const double drift = std::abs(c_obs[1] - c_obs[0]) / std::max(c_obs[0], 1e-300);
  pass_b = pass_b && drift <= 0.10;
  verdict(4, "contraction, fBM noise (m = 1/2)", pass_b,
          fmt("v-weighted decay on [0,t*], C_obs %.4f drift %.2f%% <= 10%%", c_obs[0],
              100.0 * drift));
}

// 5. energy identity residual under (h, dt) halving.
void criterion_energy() {
  double prev = 0.0;
  bool pass = true;
  std::string detail;
  for (int lev = 0; lev < 3; ++lev) {
    auto grid = build_grid(1.0, (64 << lev) + 1);
    SolverConfig cfg;
    cfg.m = 2.0;
    cfg.dt = 2e-3 / (1 << lev);
    Field u0 = bump_profile(grid, 0.5, 0.25, 1.0);
    EnergyReport rep = energy_report(solve(u0, 0.04, cfg));
    if (lev > 0) {
      const double ratio = prev / rep.energy_identity_residual;
      pass = pass && ratio >= 1.5;
      detail += fmt("%sratio %.2f", lev > 1 ? ", " : "", ratio);
    }
    prev = rep.energy_identity_residual;
  }
  verdict(5, "energy identity refinement (m = 2)", pass, detail + " >= 1.5");
}

// 6. positivity under fBM noise.
void criterion_positivity() {
  bool pass = true;
  double worst_min = 0.0;
  for (double m : {0.5, 2.0}) {
    ExperimentConfig cfg = parse_config(fmt("experiment = positivity\n"
                                            "m = %g\n"
                                            "dt = 5e-4\n"
                                            "T = 0.02\n"
                                            "nodes = 129\n"
                                            "epsilon = 0.05\n"
                                            "path = fbm:H=0.5,seed=5\n"
                                            "f1 = cosine:a=0.5,b=0.5\n"
                                            "u0 = bump:center=0.5,width=0.25,amp=1\n",
                                            m));
    ExperimentReport rep = run_positivity(cfg);
    pass = pass && rep.all_pass();
    worst_min = std::min(worst_min, rep.metrics.at("min_value"));
  }
  verdict(6, "positivity (m in {1/2, 2})", pass,
          fmt("min node value %.3e >= -10*newton_tol", worst_min));
}

// 7. (eta, eps) ladder Cauchy differences.
void criterion_cauchy() {
  const std::string cusp = write_cusp_path(0.01, 1.05, 1e-3, "cusp_ladder.csv");
  bool pass = true;
  std::string detail;
  for (double m : {0.5, 2.0}) {
    const std::string path_line =
        m == 0.5 ? "path = csv:" + cusp + "\npath_dt = 1e-3\n" : "path = fbm:H=0.5,seed=3\n";
    ExperimentConfig cfg = parse_config(fmt("experiment = convergence\n"
                                            "m = %g\n"
                                            "dt = 2.5e-4\n"
                                            "T = 0.02\n"
                                            "nodes = 129\n"
                                            "epsilon = 0.16\n"
                                            "eta = 0.05\n"
                                            "levels = 4\n"
                                            "%s"
                                            "f1 = cosine:a=0.5,b=0.5\n"
                                            "u0 = bump:center=0.5,width=0.25,amp=1\n",
                                            m, path_line.c_str()));
    cfg.workers = 2;
    ExperimentReport rep = run_convergence(cfg);
    pass = pass && rep.all_pass();
    detail += fmt("%sm=%g: e1..e3 = %.2e, %.2e, %.2e", detail.empty() ? "" : "; ", m,
                  rep.metrics.at("e_1"), rep.metrics.at("e_2"), rep.metrics.at("e_3"));
  }
  verdict(7, "eps,eta-Cauchy ladder (m in {1/2, 2})", pass, detail);
}

// 8. cocycle restart property.
void criterion_cocycle() {
  ExperimentConfig quiet = parse_config("experiment = cocycle\n"
                                        "m = 2\n"
                                        "dt = 1e-3\n"
                                        "T = 0.02\n"
                                        "split_s = 0.01\n"
                                        "nodes = 129\n"
                                        "path_dt = 0.005\n"
                                        "u0 = bump:center=0.5,width=0.25,amp=1\n");
  ExperimentReport rq = run_cocycle(quiet);
  verdict(8, "cocycle restart, noiseless", rq.all_pass(),
          fmt("restart mismatch %.3e <= newton_tol", rq.metrics.at("M_0")));

  const std::string cusp = write_cusp_path(0.04, 1.2, 1e-3, "cusp_cocycle.csv");
  ExperimentConfig noisy = parse_config(fmt("experiment = cocycle\n"
                                            "m = 2\n"
                                            "dt = 1e-3\n"
                                            "T = 0.12\n"
                                            "split_s = 0.04\n"
                                            "nodes = 129\n"
                                            "epsilon = 0.04\n"
                                            "levels = 3\n"
                                            "path = csv:%s\n"
                                            "path_dt = 1e-3\n"
                                            "f1 = cosine:a=0.5,b=0.5\n"
                                            "u0 = bump:center=0.5,width=0.25,amp=1\n",
                                            cusp.c_str()));
  ExperimentReport rn = run_cocycle(noisy);
  const double r01 = rn.metrics.at("M_0") / rn.metrics.at("M_1");
  const double r12 = rn.metrics.at("M_1") / rn.metrics.at("M_2");
  verdict(8, "cocycle mismatch decay, rough path", rn.all_pass(),
          fmt("ratios %.2f, %.2f >= 1.5 per (dt,eps) halving", r01, r12));
}

// 9. singular and psi-weighted moments stable under refinement.
void criterion_moments() {
  double singular[2], logm[2];
  for (int lev = 0; lev < 2; ++lev) {
    ExperimentConfig cfg = parse_config(fmt("experiment = diagnose\n"
                                            "m = 0.5\n"
                                            "dt = %g\n"
                                            "T = 0.01\n"
                                            "nodes = %d\n"
                                            "n_xi = %d\n"
                                            "epsilon = 0.05\n"
                                            "path = fbm:H=0.5,seed=2\n"
                                            "f1 = cosine:a=0.4,b=0.4\n"
                                            "u0 = bump:center=0.5,width=0.25,amp=1\n",
                                            5e-4 / (1 << lev), 64 * (1 << lev) + 1,
                                            128 << lev));
    cfg.out_dir = (work_dir() / fmt("diagnose_%d", lev)).string();
    ExperimentReport rep = run_diagnose(cfg);
    singular[lev] = rep.metrics.at("singular_moment");
    logm[lev] = rep.metrics.at("log_moment");
  }
  const double drift_s = std::abs(singular[1] - singular[0]) / singular[0];
  const double drift_l = std::abs(logm[1] - logm[0]) / logm[0];
  const bool finite = std::isfinite(singular[0]) && std::isfinite(logm[0]);
  verdict(9, "singular moments (m = delta = 1/2)",
          finite && drift_s <= 0.15 && drift_l <= 0.15,
          fmt("|xi|^(delta-1) drift %.1f%% <= 15%%, psi/|xi| drift %.1f%% <= 15%%",
              100.0 * drift_s, 100.0 * drift_l));
}

// 10. weak-form residuals under (h, dt, dxi) halving, max over a test family.
void criterion_weak_residuals() {
  SamplePath p = sample_fbm(0.5, 1, 128, 1.0 / 64.0, 4);
  bool pass = true;
  std::string detail;
  for (double m : {1.0, 2.0}) {
    double prev_t = 0.0, prev_i = 0.0;
    for (int level = 0; level < 3; ++level) {
      const int n = 128 << level;
      auto grid = build_grid(1.0, n + 1);
      auto coeffs = build_coefficients(
          grid, m == 2.0 ? std::vector<Coefficient>{cosine_coefficient(0.4, 0.4, 1.0)}
                         : std::vector<Coefficient>{constant_coefficient(0.0)});
      MollifiedPath mp(p, 0.25);
      CharacteristicContext ctx(&coeffs, PathAccessor(&mp));
      SolverConfig cfg;
      cfg.m = m;
      cfg.dt = 8e-3 / (1 << level);
      Trajectory traj = solve(bump_profile(grid, 0.45, 0.3, 1.0), 0.032, cfg, &ctx);
      XiGrid xi(1.5, 256 << level);
      const double family[4][4] = {{0.55, 0.35, 0.40, 0.45},
                                   {0.45, 0.30, 0.25, 0.35},
                                   {0.62, 0.30, 0.15, 0.25},
                                   {0.50, 0.40, 0.30, 0.50}};
      double tr = 0.0, ir = 0.0;
      for (const auto& f : family) {
        auto rho0 = make_test_function(*grid, {f[0], 0.5}, {f[1], 0.3}, f[2], f[3]);
        tr = std::max(tr, transport_residual(traj, rho0, 0.0, 0.032, ctx, xi));
        ir = std::max(ir, ibp_residual(traj, rho0, xi));
      }
      if (level > 0) {
        const double rt = prev_t / tr, ri = prev_i / ir;
        pass = pass && rt >= 1.5 && ri >= 1.5;
        detail += fmt("%sm=%g l%d: %.2f/%.2f", detail.empty() ? "" : ", ", m, level, rt, ri);
      }
      prev_t = tr;
      prev_i = ir;
    }
  }
  verdict(10, "weak-form residual refinement", pass,
          "transport/ibp ratios " + detail + " >= 1.5");
}

// 11. fBM generator against the covariance oracle.
void criterion_fbm() {
  const std::size_t draws = 10000;
  const double pairs[5][2] = {{0.25, 0.25}, {0.25, 0.5}, {0.5, 0.5}, {0.5, 1.0}, {0.75, 1.0}};
  bool pass = true;
  double worst_sigma = 0.0;
  for (double H : {0.3, 0.5, 0.75}) {
    FbmGenerator gen(H, 32, 1.0 / 32.0);
    std::mt19937_64 rng(2024);
    std::vector<double> acc(5, 0.0);
    for (std::size_t d = 0; d < draws; ++d) {
      const auto ch = gen.draw_channel(rng);
      for (int q = 0; q < 5; ++q) {
        const std::size_t is = std::size_t(pairs[q][0] * 32.0 + 0.5);
        const std::size_t it = std::size_t(pairs[q][1] * 32.0 + 0.5);
        acc[q] += ch[is] * ch[it];
      }
    }
    for (int q = 0; q < 5; ++q) {
      const double s = pairs[q][0], t = pairs[q][1];
      const double twoH = 2.0 * H;
      const double cov =
          0.5 * (std::pow(t, twoH) + std::pow(s, twoH) - std::pow(t - s, twoH));
      const double var_s = std::pow(s, twoH), var_t = std::pow(t, twoH);
      const double se = std::sqrt((var_s * var_t + cov * cov) / double(draws));
      const double dev = std::abs(acc[q] / double(draws) - cov) / se;
      worst_sigma = std::max(worst_sigma, dev);
      pass = pass && dev <= 3.0;
    }
  }
  verdict(11, "fBM covariance (H in {0.3, 0.5, 0.75})", pass,
          fmt("worst deviation %.2f standard errors <= 3", worst_sigma));
}

} // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion_heat();
  criterion_barenblatt();
  criterion_characteristics();
  criterion_contraction();
  criterion_energy();
  criterion_positivity();
  criterion_cauchy();
  criterion_cocycle();
  criterion_moments();
  criterion_weak_residuals();
  criterion_fbm();
  std::printf("%d criterion checks failed; total runtime %.1fs\n", failures,
              seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
