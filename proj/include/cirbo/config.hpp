#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cirbo/bo_loop.hpp"
#include "cirbo/errors.hpp"
#include "cirbo/placement.hpp"

// Config grammar, one statement per line:
//
//   # comment                  (also after a value)
//   [section]                  prefixes following keys with "section."
//   key = value                dotted keys address sections directly
//   key = a, b, c              list values
//
// Top-level keys: objective, total_budget, batch_size, features, seeds, hyper_budget, kernel,
// initial_lengthscale, random_probes, output. Sections: placement (strategy, inducing, alpha,
// gumbel_samples, prior_mean, gamma, max_value_grid), sweep (strategies, inducing, seeds) and
// place (candidates). Unknown keys are errors. `output` is relative to the file's directory.

namespace cirbo {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] int line() const { return line_; }

 private:
  int line_;
};

struct SweepSpec {
  std::vector<Strategy> strategies;
  std::vector<Eigen::Index> inducing;
  std::vector<std::uint64_t> seeds;

  bool operator==(const SweepSpec&) const = default;
};

struct ConfigFile {
  ExperimentConfig experiment;
  SweepSpec sweep;
  Eigen::Index place_candidates = 250;
  bool has_objective = false;

  bool operator==(const ConfigFile& o) const {
    return experiment == o.experiment && sweep == o.sweep && place_candidates == o.place_candidates &&
           has_objective == o.has_objective;
  }

  /// Every (strategy, M) sweep point; the base placement when the sweep is empty.
  [[nodiscard]] std::vector<ExperimentConfig> expand() const {
    const std::vector<Strategy> strategies =
        sweep.strategies.empty() ? std::vector<Strategy>{experiment.placement.strategy} : sweep.strategies;
    const std::vector<Eigen::Index> ms =
        sweep.inducing.empty() ? std::vector<Eigen::Index>{experiment.placement.m} : sweep.inducing;
    std::vector<ExperimentConfig> out;
    for (Strategy s : strategies) {
      for (Eigen::Index m : ms) {
        ExperimentConfig c = experiment;
        c.placement.strategy = s;
        c.placement.m = m;
        if (!sweep.seeds.empty()) c.seeds = sweep.seeds;
        out.push_back(c);
      }
    }
    return out;
  }
};

namespace detail {

[[nodiscard]] inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[nodiscard]] inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.emplace_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
[[nodiscard]] T parse_number(std::string_view s) {
  T value{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) throw PreconditionError("invalid number '" + std::string(s) + "'");
  return value;
}

[[nodiscard]] inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses config text. `source` names the document in diagnostics; `base_dir` anchors relative paths.
[[nodiscard]] inline ConfigFile parse_config(std::string_view text, const std::string& source = "<config>",
                                             const std::filesystem::path& base_dir = {}) {
  ConfigFile cfg;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source, line_no, "unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (section != "placement" && section != "sweep" && section != "place" && section != "experiment")
        throw ConfigError(source, line_no, "unknown section '" + section + "'");
      if (section == "experiment") section.clear();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(source, line_no, "expected 'key = value'");
    const std::string_view raw_key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (raw_key.empty()) throw ConfigError(source, line_no, "empty key");
    const std::string key = section.empty() ? std::string(raw_key) : section + "." + std::string(raw_key);

    try {
      auto& e = cfg.experiment;
      auto& p = e.placement;
      auto seeds = [&] {
        std::vector<std::uint64_t> out;
        for (const auto& s : detail::split_list(value)) out.push_back(detail::parse_number<std::uint64_t>(s));
        return out;
      };
      if (key == "objective") {
        if (value.empty()) throw PreconditionError("objective name is empty");
        e.objective = std::string(value);
        cfg.has_objective = true;
      } else if (key == "total_budget") e.total_budget = detail::parse_number<Eigen::Index>(value);
      else if (key == "batch_size") e.batch_size = detail::parse_number<Eigen::Index>(value);
      else if (key == "features") e.features = detail::parse_number<Eigen::Index>(value);
      else if (key == "seeds") e.seeds = seeds();
      else if (key == "hyper_budget") e.hyper_budget = detail::parse_number<int>(value);
      else if (key == "kernel") e.kernel = kernel_family_from_string(value);
      else if (key == "initial_lengthscale") e.initial_lengthscale = detail::parse_number<double>(value);
      else if (key == "random_probes") e.random_probes = detail::parse_number<Eigen::Index>(value);
      else if (key == "output") {
        const std::filesystem::path out(value);
        e.output = (out.is_absolute() || base_dir.empty() ? out : base_dir / out).lexically_normal().string();
      } else if (key == "placement.strategy") p.strategy = strategy_from_string(value);
      else if (key == "placement.inducing") p.m = detail::parse_number<Eigen::Index>(value);
      else if (key == "placement.alpha") p.alpha = detail::parse_number<double>(value);
      else if (key == "placement.gumbel_samples") p.gumbel_samples = detail::parse_number<int>(value);
      else if (key == "placement.prior_mean") p.prior_mean = prior_mean_mode_from_string(value);
      else if (key == "placement.gamma") {
        if (value == "max-value") p.gamma = GammaConvention::max_value_search;
        else if (value == "literal") p.gamma = GammaConvention::literal;
        else throw PreconditionError("unknown gamma convention '" + std::string(value) + "'");
      } else if (key == "placement.max_value_grid") p.max_value_grid = detail::parse_number<Eigen::Index>(value);
      else if (key == "sweep.strategies") {
        cfg.sweep.strategies.clear();
        for (const auto& s : detail::split_list(value)) cfg.sweep.strategies.push_back(strategy_from_string(s));
      } else if (key == "sweep.inducing") {
        cfg.sweep.inducing.clear();
        for (const auto& s : detail::split_list(value)) cfg.sweep.inducing.push_back(detail::parse_number<Eigen::Index>(s));
      } else if (key == "sweep.seeds") cfg.sweep.seeds = seeds();
      else if (key == "place.candidates") cfg.place_candidates = detail::parse_number<Eigen::Index>(value);
      else throw ConfigError(source, line_no, "unknown key '" + key + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ConfigError(source, line_no, ex.what());
    }
  }
  return cfg;
}

[[nodiscard]] inline ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), path.parent_path());
}

/// Canonical text form; parse_config(serialize_config(c)) == c.
[[nodiscard]] inline std::string serialize_config(const ConfigFile& cfg) {
  const auto& e = cfg.experiment;
  const auto& p = e.placement;
  auto join = [](const auto& items, auto fmt) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += ", ";
      out += fmt(items[i]);
    }
    return out;
  };
  const auto num = [](auto v) { return std::to_string(v); };
  const auto strat = [](Strategy s) { return std::string(to_string(s)); };
  std::ostringstream os;
  if (cfg.has_objective) os << "objective = " << e.objective << "\n";
  os << "total_budget = " << e.total_budget << "\n"
     << "batch_size = " << e.batch_size << "\n"
     << "features = " << e.features << "\n"
     << "seeds = " << join(e.seeds, num) << "\n"
     << "hyper_budget = " << e.hyper_budget << "\n"
     << "kernel = " << to_string(e.kernel) << "\n"
     << "initial_lengthscale = " << detail::format_double(e.initial_lengthscale) << "\n"
     << "random_probes = " << e.random_probes << "\n"
     << "output = " << e.output << "\n\n"
     << "[placement]\n"
     << "strategy = " << to_string(p.strategy) << "\n"
     << "inducing = " << p.m << "\n"
     << "alpha = " << detail::format_double(p.alpha) << "\n"
     << "gumbel_samples = " << p.gumbel_samples << "\n"
     << "prior_mean = " << to_string(p.prior_mean) << "\n"
     << "gamma = " << (p.gamma == GammaConvention::literal ? "literal" : "max-value") << "\n"
     << "max_value_grid = " << p.max_value_grid << "\n\n"
     << "[sweep]\n"
     << "strategies = " << join(cfg.sweep.strategies, strat) << "\n"
     << "inducing = " << join(cfg.sweep.inducing, num) << "\n"
     << "seeds = " << join(cfg.sweep.seeds, num) << "\n\n"
     << "[place]\n"
     << "candidates = " << cfg.place_candidates << "\n";
  return os.str();
}

}  // namespace cirbo
