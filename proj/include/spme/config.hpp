#ifndef SPME_CONFIG_HPP
#define SPME_CONFIG_HPP

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spme/coefficients.hpp"
#include "spme/errors.hpp"
#include "spme/pme_solver.hpp"

namespace spme {

struct PathSpec {
  enum class Kind { Zero, Fbm, Csv };
  Kind kind = Kind::Zero;
  double hurst = 0.5;
  std::uint64_t seed = 1;
  std::string file;
  std::string text; // original descriptor
};

struct InitSpec {
  enum class Kind { Sine, Barenblatt, Bump, TwoBumps };
  Kind kind = Kind::Bump;
  std::map<std::string, double> params;
  std::string text;
};

struct ExperimentConfig {
  std::string experiment; // solve | contraction | convergence | cocycle | positivity | diagnose
  int dim = 1;
  double length_x = 1.0, length_y = 1.0;
  int nodes_x = 129, nodes_y = 129;
  SolverConfig solver;
  double T = -1.0;
  std::size_t n_xi = 256;
  PathSpec path;
  double path_dt = -1.0;      // < 0: derived from dt and the mollification scales
  double path_horizon = -1.0; // < 0: T + 1
  std::vector<Coefficient> noise;
  std::vector<std::string> noise_text;
  bool has_u0 = false, has_u0_b = false;
  InitSpec u0, u0_b;
  double split_s = -1.0; // cocycle
  int levels = -1;       // refinement levels; default depends on the experiment
  double eps0 = -1.0, eta0 = -1.0; // convergence ladder starts; default solver values
  double delta = -1.0;             // diagnose moment exponent; default min(m, 1)
  std::string out_dir = "out";
  int workers = 1;

  bool has_noise() const {
    for (const auto& f : noise)
      if (f.sup_bound() > 0.0) return true;
    return false;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline double to_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (trim(v.substr(pos)).empty()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("expected a real number, got '" + v + "'", line);
}

inline long to_int(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (trim(v.substr(pos)).empty()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("expected an integer, got '" + v + "'", line);
}

// descriptor = name[:k1=v1,k2=v2,...]; string-valued entries allowed.
struct Descriptor {
  std::string name;
  std::map<std::string, std::string> args;
};

inline Descriptor parse_descriptor(const std::string& text, int line) {
  Descriptor d;
  const auto colon = text.find(':');
  d.name = trim(text.substr(0, colon));
  if (colon == std::string::npos) return d;
  std::string rest = text.substr(colon + 1);
  std::istringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      // single positional argument (e.g. csv:file.csv)
      d.args["_"] = item;
      continue;
    }
    d.args[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
  }
  if (d.name.empty()) throw ConfigError("empty descriptor", line);
  return d;
}

inline double arg_double(const Descriptor& d, const std::string& key, int line) {
  auto it = d.args.find(key);
  if (it == d.args.end())
    throw ConfigError("descriptor '" + d.name + "' is missing '" + key + "'", line);
  return to_double(it->second, line);
}

inline double arg_double_or(const Descriptor& d, const std::string& key, double fallback,
                            int line) {
  auto it = d.args.find(key);
  return it == d.args.end() ? fallback : to_double(it->second, line);
}

inline void check_arg_keys(const Descriptor& d, const std::set<std::string>& allowed,
                           int line) {
  for (const auto& [k, v] : d.args)
    if (!allowed.count(k))
      throw ConfigError("descriptor '" + d.name + "' has unknown argument '" + k + "'", line);
}

inline Coefficient parse_coefficient(const std::string& text, double length, int line) {
  const Descriptor d = parse_descriptor(text, line);
  if (d.name == "constant") {
    check_arg_keys(d, {"c"}, line);
    return constant_coefficient(arg_double(d, "c", line));
  }
  if (d.name == "cosine") {
    check_arg_keys(d, {"a", "b"}, line);
    return cosine_coefficient(arg_double(d, "a", line), arg_double(d, "b", line), length);
  }
  if (d.name == "gaussian") {
    check_arg_keys(d, {"amp", "width", "cx", "cy"}, line);
    return gaussian_coefficient(arg_double(d, "amp", line), arg_double(d, "width", line),
                                arg_double_or(d, "cx", length / 2.0, line),
                                arg_double_or(d, "cy", length / 2.0, line));
  }
  throw ConfigError("unknown coefficient '" + d.name + "' (constant|cosine|gaussian)", line);
}

inline PathSpec parse_path(const std::string& text, int line) {
  const Descriptor d = parse_descriptor(text, line);
  PathSpec p;
  p.text = text;
  if (d.name == "zero") {
    check_arg_keys(d, {}, line);
    p.kind = PathSpec::Kind::Zero;
    return p;
  }
  if (d.name == "fbm") {
    check_arg_keys(d, {"H", "seed"}, line);
    p.kind = PathSpec::Kind::Fbm;
    p.hurst = arg_double(d, "H", line);
    if (!(p.hurst > 0.0 && p.hurst < 1.0)) throw ConfigError("fbm: H must lie in (0,1)", line);
    auto it = d.args.find("seed");
    p.seed = it == d.args.end() ? 1 : std::uint64_t(to_int(it->second, line));
    return p;
  }
  if (d.name == "csv") {
    auto it = d.args.find("_");
    if (it == d.args.end()) throw ConfigError("csv path needs a file: csv:<file>", line);
    p.kind = PathSpec::Kind::Csv;
    p.file = it->second;
    return p;
  }
  throw ConfigError("unknown path '" + d.name + "' (zero|fbm|csv)", line);
}

inline InitSpec parse_init(const std::string& text, int line) {
  const Descriptor d = parse_descriptor(text, line);
  InitSpec s;
  s.text = text;
  auto grab = [&](std::initializer_list<std::pair<const char*, double>> keys) {
    std::set<std::string> allowed;
    for (const auto& [k, fallback] : keys) {
      allowed.insert(k);
      s.params[k] = arg_double_or(d, k, fallback, line);
    }
    check_arg_keys(d, allowed, line);
  };
  if (d.name == "sine") {
    s.kind = InitSpec::Kind::Sine;
    grab({{"k", 1.0}, {"amp", 1.0}});
    if (s.params["k"] < 1.0) throw ConfigError("sine: k must be >= 1", line);
  } else if (d.name == "barenblatt") {
    s.kind = InitSpec::Kind::Barenblatt;
    grab({{"t0", 0.1}, {"c", 0.02}, {"center", 0.5}});
  } else if (d.name == "bump") {
    s.kind = InitSpec::Kind::Bump;
    grab({{"center", 0.5}, {"width", 0.25}, {"amp", 1.0}, {"center_y", 0.5}, {"width_y", 0.25}});
  } else if (d.name == "two_bumps") {
    s.kind = InitSpec::Kind::TwoBumps;
    grab({{"c1", 0.35}, {"w1", 0.15}, {"a1", 1.0}, {"c2", 0.65}, {"w2", 0.15}, {"a2", 0.5}});
  } else {
    throw ConfigError("unknown initial data '" + d.name + "' (sine|barenblatt|bump|two_bumps)",
                      line);
  }
  return s;
}

} // namespace detail

inline const std::set<std::string>& known_experiments() {
  static const std::set<std::string> kinds = {"solve",   "contraction", "convergence",
                                              "cocycle", "positivity",  "diagnose"};
  return kinds;
}

// Flat `key = value` lines with '#' comments. Unknown keys are errors; no key
// is silently defaulted on a misspelling.
inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw_line;
  int line_no = 0;
  std::set<std::string> seen;
  std::map<int, std::string> noise_lines; // channel -> descriptor
  while (std::getline(in, raw_line)) {
    ++line_no;
    std::string line = raw_line;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value', got '" + line + "'", line_no);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("expected 'key = value', got '" + line + "'", line_no);
    if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'", line_no);

    if (key == "experiment") {
      if (!known_experiments().count(value))
        throw ConfigError("unknown experiment '" + value + "'", line_no);
      cfg.experiment = value;
    } else if (key == "d") {
      const long d = detail::to_int(value, line_no);
      if (d != 1 && d != 2) throw ConfigError("d must be 1 or 2", line_no);
      cfg.dim = int(d);
    } else if (key == "L") {
      cfg.length_x = cfg.length_y = detail::to_double(value, line_no);
    } else if (key == "Lx") {
      cfg.length_x = detail::to_double(value, line_no);
    } else if (key == "Ly") {
      cfg.length_y = detail::to_double(value, line_no);
    } else if (key == "nodes") {
      cfg.nodes_x = cfg.nodes_y = int(detail::to_int(value, line_no));
    } else if (key == "nx") {
      cfg.nodes_x = int(detail::to_int(value, line_no));
    } else if (key == "ny") {
      cfg.nodes_y = int(detail::to_int(value, line_no));
    } else if (key == "m") {
      cfg.solver.m = detail::to_double(value, line_no);
      if (!(cfg.solver.m > 0.0)) throw ConfigError("m must be positive", line_no);
    } else if (key == "eta") {
      cfg.solver.eta = detail::to_double(value, line_no);
      if (cfg.solver.eta < 0.0) throw ConfigError("eta must be nonnegative", line_no);
    } else if (key == "epsilon") {
      cfg.solver.epsilon = detail::to_double(value, line_no);
      if (!(cfg.solver.epsilon > 0.0)) throw ConfigError("epsilon must be positive", line_no);
    } else if (key == "dt") {
      cfg.solver.dt = detail::to_double(value, line_no);
      if (!(cfg.solver.dt > 0.0)) throw ConfigError("dt must be positive", line_no);
    } else if (key == "T") {
      cfg.T = detail::to_double(value, line_no);
      if (!(cfg.T >= 0.0)) throw ConfigError("T must be nonnegative", line_no);
    } else if (key == "newton_tol") {
      cfg.solver.newton_tol = detail::to_double(value, line_no);
    } else if (key == "newton_max_iter") {
      cfg.solver.newton_max_iter = int(detail::to_int(value, line_no));
    } else if (key == "power_floor") {
      cfg.solver.power_floor = detail::to_double(value, line_no);
    } else if (key == "record_every") {
      cfg.solver.record_every = int(detail::to_int(value, line_no));
    } else if (key == "n_xi") {
      cfg.n_xi = std::size_t(detail::to_int(value, line_no));
    } else if (key == "path") {
      cfg.path = detail::parse_path(value, line_no);
    } else if (key == "path_dt") {
      cfg.path_dt = detail::to_double(value, line_no);
      if (!(cfg.path_dt > 0.0)) throw ConfigError("path_dt must be positive", line_no);
    } else if (key == "path_horizon") {
      cfg.path_horizon = detail::to_double(value, line_no);
    } else if (key.size() >= 2 && key[0] == 'f' && std::isdigit(static_cast<unsigned char>(key[1]))) {
      const long ch = detail::to_int(key.substr(1), line_no);
      if (ch < 1 || ch > 16) throw ConfigError("coefficient channels run f1..f16", line_no);
      noise_lines[int(ch)] = value;
      cfg.noise_text.push_back(value);
    } else if (key == "u0") {
      cfg.u0 = detail::parse_init(value, line_no);
      cfg.has_u0 = true;
    } else if (key == "u0_b") {
      cfg.u0_b = detail::parse_init(value, line_no);
      cfg.has_u0_b = true;
    } else if (key == "split_s") {
      cfg.split_s = detail::to_double(value, line_no);
    } else if (key == "levels") {
      cfg.levels = int(detail::to_int(value, line_no));
      if (cfg.levels < 1) throw ConfigError("levels must be >= 1", line_no);
    } else if (key == "eps0") {
      cfg.eps0 = detail::to_double(value, line_no);
    } else if (key == "eta0") {
      cfg.eta0 = detail::to_double(value, line_no);
    } else if (key == "delta") {
      cfg.delta = detail::to_double(value, line_no);
      if (!(cfg.delta > 0.0 && cfg.delta <= 1.0))
        throw ConfigError("delta must lie in (0,1]", line_no);
    } else {
      throw ConfigError("unknown key '" + key + "'", line_no);
    }
  }

  // contiguous channels f1..fn
  int expect = 1;
  for (const auto& [ch, text] : noise_lines) {
    if (ch != expect)
      throw ConfigError("coefficient channels must be contiguous from f1; missing f" +
                        std::to_string(expect));
    ++expect;
    cfg.noise.push_back(detail::parse_coefficient(text, cfg.length_x, 0));
  }
  return cfg;
}

// Checks the keys a given experiment requires; called once the kind is known.
inline void validate_config(const ExperimentConfig& cfg) {
  if (!known_experiments().count(cfg.experiment))
    throw ConfigError("experiment must be one of solve|contraction|convergence|cocycle|"
                      "positivity|diagnose, got '" +
                      cfg.experiment + "'");
  if (!(cfg.solver.m > 0.0)) throw ConfigError("missing required key 'm'");
  if (!(cfg.solver.dt > 0.0)) throw ConfigError("missing required key 'dt'");
  if (cfg.T < 0.0) throw ConfigError("missing required key 'T'");
  if (!cfg.has_u0) throw ConfigError("missing required key 'u0'");
  if (cfg.experiment == "contraction" && !cfg.has_u0_b)
    throw ConfigError("contraction needs a second initial datum 'u0_b'");
  if (cfg.experiment == "cocycle") {
    if (cfg.split_s <= 0.0 || cfg.split_s >= cfg.T)
      throw ConfigError("cocycle needs 'split_s' strictly inside (0, T)");
  }
  if (cfg.dim == 2 && cfg.u0.kind == InitSpec::Kind::Barenblatt)
    throw ConfigError("the barenblatt profile is one-dimensional");
  cfg.solver.validate();
}

} // namespace spme

#endif
