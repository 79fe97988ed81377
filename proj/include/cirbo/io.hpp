#pragma once

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cirbo/bo_loop.hpp"
#include "cirbo/config.hpp"
#include "cirbo/errors.hpp"

namespace cirbo {

inline constexpr const char* kRunCsvHeader = "step,n,believed_best_value,simple_regret,t_place_ms,t_fit_ms,t_acq_ms";
inline constexpr const char* kAggregateCsvHeader =
    "objective,strategy,inducing,step,n,mean_regret,ci_half_width,runs";

namespace detail {

[[nodiscard]] inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[nodiscard]] inline std::string fmt_ms(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

/// FNV-1a, stable across platforms and runs.
[[nodiscard]] inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

/// Run CSV: one row per step, fixed column order, values with full precision.
[[nodiscard]] inline std::string run_csv(const RunRecord& rec) {
  std::ostringstream os;
  os << kRunCsvHeader << "\n";
  for (const auto& s : rec.steps) {
    os << s.step << "," << s.n << "," << detail::fmt17(s.believed_best_value) << ","
       << detail::fmt17(s.simple_regret) << "," << detail::fmt_ms(s.t_place_ms) << ","
       << detail::fmt_ms(s.t_fit_ms) << "," << detail::fmt_ms(s.t_acq_ms) << "\n";
  }
  return os.str();
}

/// Parses a run CSV back into step rows (inputs are not stored in the CSV).
[[nodiscard]] inline std::vector<StepRecord> parse_run_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kRunCsvHeader)
    throw PreconditionError("run CSV header mismatch");
  std::vector<StepRecord> rows;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw PreconditionError("run CSV row has " + std::to_string(cells.size()) + " cells");
    StepRecord r;
    r.step = std::stoll(cells[0]);
    r.n = std::stoll(cells[1]);
    r.believed_best_value = std::stod(cells[2]);
    r.simple_regret = std::stod(cells[3]);
    r.t_place_ms = std::stod(cells[4]);
    r.t_fit_ms = std::stod(cells[5]);
    r.t_acq_ms = std::stod(cells[6]);
    rows.push_back(r);
  }
  return rows;
}

/// JSON view of an experiment; `seeds` and `output` excluded so it identifies a sweep point.
[[nodiscard]] inline nlohmann::json config_json(const ExperimentConfig& c) {
  const auto& p = c.placement;
  return {
      {"objective", c.objective},
      {"total_budget", c.total_budget},
      {"batch_size", c.batch_size},
      {"features", c.features},
      {"hyper_budget", c.hyper_budget},
      {"kernel", std::string(to_string(c.kernel))},
      {"initial_lengthscale", c.initial_lengthscale},
      {"random_probes", c.random_probes},
      {"initial_design", "uniform batch of size batch_size"},
      {"hyperparameter_warm_start", true},
      {"placement",
       {{"strategy", std::string(to_string(p.strategy))},
        {"inducing", p.m},
        {"alpha", p.alpha},
        {"gumbel_samples", p.gumbel_samples},
        {"prior_mean", std::string(to_string(p.prior_mean))},
        {"gamma", p.gamma == GammaConvention::literal ? "literal" : "max-value"},
        {"max_value_grid", p.max_value_grid}}},
  };
}

[[nodiscard]] inline std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, detail::fnv1a(config_json(c).dump()));
  return buf;
}

[[nodiscard]] inline nlohmann::json run_sidecar(const ExperimentConfig& c, const RunRecord& rec) {
  nlohmann::json j;
  j["config"] = config_json(c);
  j["config_hash"] = config_hash(c);
  j["seed"] = rec.seed;
  j["status"] = rec.ok() ? "ok" : "error";
  if (!rec.ok()) j["error"] = rec.error;
  j["steps"] = rec.steps.size();
  j["evaluations"] = rec.queries.rows();
  const auto& k = rec.final_kernel;
  j["final_kernel"] = {{"family", std::string(to_string(k.family))},
                       {"lengthscales", std::vector<double>(k.lengthscales.data(), k.lengthscales.data() + k.lengthscales.size())},
                       {"signal_variance", k.signal_variance},
                       {"noise_variance", k.noise_variance}};
  return j;
}

[[nodiscard]] inline std::string run_basename(const ExperimentConfig& c, std::uint64_t seed) {
  return c.objective + "_" + std::string(to_string(c.placement.strategy)) + "_M" + std::to_string(c.placement.m) +
         "_s" + std::to_string(seed);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

[[nodiscard]] inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes `<base>.csv` and `<base>.json` into `dir`.
inline void write_run(const std::filesystem::path& dir, const ExperimentConfig& c, const RunRecord& rec) {
  std::filesystem::create_directories(dir);
  const std::string base = run_basename(c, rec.seed);
  write_text(dir / (base + ".csv"), run_csv(rec));
  write_text(dir / (base + ".json"), run_sidecar(c, rec).dump(2) + "\n");
}

}  // namespace cirbo
