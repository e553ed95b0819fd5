#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "spme/experiments.hpp"

namespace {

// 0 success, 1 config error, 2 solver failure, 3 verdict failure
constexpr int kExitConfig = 1;
constexpr int kExitSolver = 2;
constexpr int kExitVerdict = 3;

int run(const std::string& kind, const std::string& config_path, const std::string& out_dir,
        int workers) {
  spme::ExperimentConfig cfg;
  try {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "config error: cannot open '" << config_path << "'\n";
      return kExitConfig;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    cfg = spme::parse_config(buf.str());
    if (!cfg.experiment.empty() && cfg.experiment != kind) {
      std::cerr << "config error: config names experiment '" << cfg.experiment
                << "' but the subcommand is '" << kind << "'\n";
      return kExitConfig;
    }
    cfg.experiment = kind;
    cfg.out_dir = out_dir;
    cfg.workers = workers;
    spme::validate_config(cfg);
  } catch (const spme::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const spme::ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  spme::ExperimentReport rep;
  try {
    rep = spme::run_experiment(cfg);
  } catch (const spme::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const spme::ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }

  try {
    spme::emit_report(rep, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "cannot write report: " << e.what() << "\n";
    return kExitSolver;
  }

  for (const auto& v : rep.verdicts)
    std::printf("%-45s %s  (measured %.6g %s %.6g)\n", v.name.c_str(),
                v.pass ? "PASS" : "FAIL", v.measured, v.comparison.c_str(), v.threshold);
  for (const auto& [k, v] : rep.metrics) std::printf("%-45s %.10g\n", k.c_str(), v);
  std::printf("report: %s/report.json\n", out_dir.c_str());
  return rep.all_pass() ? 0 : kExitVerdict;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pathwise solver and verification lab for stochastic porous-medium and "
               "fast-diffusion equations with multiplicative rough noise"};
  app.require_subcommand(1);

  const std::vector<std::string> kinds = {"solve",   "contraction", "convergence",
                                          "cocycle", "positivity",  "diagnose"};
  struct Opts {
    std::string config;
    std::string out = "out";
    int workers = 1;
  };
  std::vector<Opts> opts(kinds.size());
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    auto* sub = app.add_subcommand(kinds[i], kinds[i] + " experiment");
    sub->add_option("--config", opts[i].config, "experiment config file")->required();
    sub->add_option("--out", opts[i].out, "output directory");
    sub->add_option("--workers", opts[i].workers, "worker threads for independent runs");
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < kinds.size(); ++i)
    if (app.get_subcommand(kinds[i])->parsed())
      return run(kinds[i], opts[i].config, opts[i].out, opts[i].workers);
  return kExitConfig;
}
