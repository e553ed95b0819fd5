#ifndef SPME_REPORT_HPP
#define SPME_REPORT_HPP

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "spme/csv.hpp"
#include "spme/errors.hpp"

namespace spme {

struct Verdict {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string comparison; // e.g. "<="
};

struct Series {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// Everything an experiment emits: named scalar metrics, named time series,
// verdicts with their thresholds, and the provenance needed to replay the run.
struct ExperimentReport {
  std::string experiment;
  std::map<std::string, double> metrics;
  std::vector<Series> series;
  std::vector<Verdict> verdicts;
  std::map<std::string, std::string> provenance;
  std::vector<std::uint64_t> seeds;
  nlohmann::json config_echo;

  bool all_pass() const {
    for (const auto& v : verdicts)
      if (!v.pass) return false;
    return true;
  }

  Series& add_series(std::string name, std::vector<std::string> columns) {
    series.push_back({std::move(name), std::move(columns), {}});
    return series.back();
  }

  void add_verdict(std::string name, bool pass, double measured, double threshold,
                   std::string comparison) {
    verdicts.push_back({std::move(name), pass, measured, threshold, std::move(comparison)});
  }
};

// report.json plus one CSV per series; byte-stable across reruns with equal
// seeds (no timestamps anywhere).
inline void emit_report(const ExperimentReport& rep, const std::string& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw NumericalError("cannot create output directory '" + directory + "'");

  nlohmann::json j;
  j["experiment"] = rep.experiment;
  j["config"] = rep.config_echo;
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [k, v] : rep.metrics) metrics[k] = v;
  j["metrics"] = metrics;
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : rep.verdicts)
    verdicts.push_back({{"name", v.name},
                        {"pass", v.pass},
                        {"measured", v.measured},
                        {"threshold", v.threshold},
                        {"comparison", v.comparison}});
  j["verdicts"] = verdicts;
  nlohmann::json series_index = nlohmann::json::object();
  for (const auto& s : rep.series) series_index[s.name] = s.name + ".csv";
  j["series"] = series_index;
  nlohmann::json prov = nlohmann::json::object();
  for (const auto& [k, v] : rep.provenance) prov[k] = v;
  prov["version"] = "spme 0.1.0";
  nlohmann::json seeds = nlohmann::json::array();
  for (auto s : rep.seeds) seeds.push_back(s);
  prov["seeds"] = seeds;
  j["provenance"] = prov;

  auto out = open_output((fs::path(directory) / "report.json").string());
  out << j.dump(2) << "\n";

  for (const auto& s : rep.series) {
    auto cs = open_output((fs::path(directory) / (s.name + ".csv")).string());
    for (std::size_t c = 0; c < s.columns.size(); ++c)
      cs << (c ? "," : "") << s.columns[c];
    cs << "\n";
    for (const auto& row : s.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) cs << (c ? "," : "") << format_double(row[c]);
      cs << "\n";
    }
  }
}

} // namespace spme

#endif
