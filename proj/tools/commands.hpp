#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cirbo/cirbo.hpp"

namespace cirbo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitPartial = 2;

inline constexpr const char* kPlacementCsvHeader = "kind,index,x0,x1,objective,predicted_mean,selected,order";

struct RunOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  unsigned jobs = 0;  // 0: hardware concurrency
};

/// Seeds from --seed, else CIR_BO_SEED, else the config.
[[nodiscard]] inline std::vector<std::uint64_t> resolve_seeds(const std::vector<std::uint64_t>& configured,
                                                              std::optional<std::uint64_t> flag) {
  if (flag) return {*flag};
  if (const char* env = std::getenv("CIR_BO_SEED"); env != nullptr && *env != '\0') {
    return {detail::parse_number<std::uint64_t>(env)};
  }
  return configured;
}

[[nodiscard]] inline int cmd_run(const RunOptions& opt, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  ConfigFile file;
  std::vector<ExperimentConfig> points;
  std::vector<std::uint64_t> seeds;
  try {
    file = load_config(opt.config);
    if (!file.has_objective) {
      err << opt.config.string() << ": missing required key 'objective'\n";
      return kExitUsage;
    }
    points = file.expand();
    for (auto& p : points) p.validate();
    seeds = resolve_seeds(points.front().seeds, opt.seed);
    if (seeds.empty()) throw PreconditionError("no seeds configured");
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }

  const std::filesystem::path dir = opt.out ? *opt.out : std::filesystem::path(file.experiment.output);
  struct Job {
    const ExperimentConfig* config;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& p : points)
    for (auto s : seeds) jobs.push_back({&p, s});

  std::atomic<std::size_t> next{0};
  std::atomic<int> failures{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      const auto t0 = std::chrono::steady_clock::now();
      const RunRecord rec = run(*job.config, job.seed);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::lock_guard lock(io);
      try {
        write_run(dir, *job.config, rec);
      } catch (const std::exception& e) {
        err << "write failed: " << e.what() << "\n";
        ++failures;
        continue;
      }
      if (!rec.ok()) {
        ++failures;
        err << run_basename(*job.config, job.seed) << ": error: " << rec.error << "\n";
      } else {
        out << run_basename(*job.config, job.seed) << ": final regret "
            << (rec.steps.empty() ? 0.0 : rec.steps.back().simple_regret) << " (" << secs << " s)\n";
      }
    }
  };
  unsigned n_threads = opt.jobs ? opt.jobs : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return failures.load() == 0 ? kExitOk : kExitPartial;
}

struct PlaceOptions {
  std::filesystem::path config;
  std::string strategy;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
};

/// Result of one placement demo, before serialisation.
struct PlacementDemo {
  Dataset candidates;  // original (unstandardised) targets
  Eigen::VectorXd predicted_mean;
  Placement placement;
  Eigen::VectorXd inducing_mean;
};

/// Places inducing points on a fresh random design of the 2-d log Goldstein-Price problem. The
/// "previous" model is the sparse GP of the full design with fitted hyperparameters.
[[nodiscard]] inline PlacementDemo placement_demo(const PlacementConfig& placement, Eigen::Index n_candidates,
                                                  KernelFamily family, int hyper_budget, std::uint64_t seed) {
  const ObjectiveSpec obj = objective("log-goldstein-price");
  Rng rng = make_rng(seed, 400);
  PlacementDemo demo;
  demo.candidates.inputs = obj.box.sample_uniform(n_candidates, rng);
  demo.candidates.targets.resize(n_candidates);
  for (Eigen::Index i = 0; i < n_candidates; ++i)
    demo.candidates.targets(i) = evaluate(obj, demo.candidates.inputs.row(i).transpose());

  const double mean = demo.candidates.targets.mean();
  double sd = std::sqrt((demo.candidates.targets.array() - mean).square().mean());
  if (!(sd > 1e-12)) sd = 1.0;
  const Dataset standardised{demo.candidates.inputs, (demo.candidates.targets.array() - mean).matrix() / sd};

  KernelSpec kernel = KernelSpec::isotropic(family, 2, 0.2, 1.0, 1e-3);
  kernel = fit_hyperparameters(standardised, standardised.inputs, kernel, hyper_budget);
  const SparseModel model = sparse_fit(standardised, standardised.inputs, kernel);
  demo.predicted_mean = (model.mean(demo.candidates.inputs).array() * sd + mean).matrix();
  demo.placement = select_inducing(placement, standardised, &model, kernel, obj.box, derive_seed(seed, 401));
  demo.inducing_mean = (model.mean(demo.placement.inducing).array() * sd + mean).matrix();
  return demo;
}

[[nodiscard]] inline std::string placement_csv(const PlacementDemo& demo, Strategy strategy) {
  std::ostringstream os;
  os << kPlacementCsvHeader << "\n";
  const Eigen::Index n = demo.candidates.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n), -1);
  const bool subset = strategy == Strategy::cir || strategy == Strategy::cvr || strategy == Strategy::exact ||
                      demo.placement.indices.size() == static_cast<std::size_t>(n);
  if (subset) {
    for (std::size_t r = 0; r < demo.placement.indices.size(); ++r)
      order[static_cast<std::size_t>(demo.placement.indices[r])] = static_cast<Eigen::Index>(r);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto o = order[static_cast<std::size_t>(i)];
    os << "candidate," << i << "," << detail::fmt17(demo.candidates.inputs(i, 0)) << ","
       << detail::fmt17(demo.candidates.inputs(i, 1)) << "," << detail::fmt17(demo.candidates.targets(i)) << ","
       << detail::fmt17(demo.predicted_mean(i)) << "," << (o >= 0 ? 1 : 0) << "," << o << "\n";
  }
  if (!subset) {
    const ObjectiveSpec obj = objective("log-goldstein-price");
    for (Eigen::Index r = 0; r < demo.placement.inducing.rows(); ++r) {
      const Eigen::VectorXd z = demo.placement.inducing.row(r).transpose();
      os << "inducing,-1," << detail::fmt17(z(0)) << "," << detail::fmt17(z(1)) << ","
         << detail::fmt17(evaluate(obj, obj.box.clamp(z))) << "," << detail::fmt17(demo.inducing_mean(r))
         << ",1," << r << "\n";
    }
  }
  return os.str();
}

[[nodiscard]] inline int cmd_place(const PlaceOptions& opt, std::ostream& out = std::cout,
                                   std::ostream& err = std::cerr) {
  try {
    const ConfigFile file = load_config(opt.config);
    PlacementConfig placement = file.experiment.placement;
    placement.strategy = strategy_from_string(opt.strategy);
    placement.validate();
    if (file.place_candidates < 1) throw PreconditionError("place.candidates must be positive");
    const auto seeds = resolve_seeds(file.experiment.seeds, opt.seed);
    const std::uint64_t seed = seeds.empty() ? 0 : seeds.front();
    const PlacementDemo demo =
        placement_demo(placement, file.place_candidates, file.experiment.kernel, file.experiment.hyper_budget, seed);
    if (opt.out.has_parent_path()) std::filesystem::create_directories(opt.out.parent_path());
    write_text(opt.out, placement_csv(demo, placement.strategy));
    out << "placed " << demo.placement.inducing.rows() << " inducing points among " << demo.candidates.size()
        << " candidates -> " << opt.out.string() << "\n";
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

struct BenchOptions {
  std::vector<Eigen::Index> sizes;
  std::vector<Eigen::Index> inducing = {128};
  int repeats = 5;
  Eigen::Index dim = 4;
  std::uint64_t seed = 0;
};

struct BenchResult {
  struct Timing {
    Eigen::Index n, m;
    double median_ms;
  };
  std::vector<Timing> timings;
  std::map<Eigen::Index, double> slope_n;  // keyed by M
  std::map<Eigen::Index, double> slope_m;  // keyed by N
};

/// Least-squares slope of log(t) against log(x).
[[nodiscard]] inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& t) {
  const auto k = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(t[i]);
  }
  mx /= k;
  my /= k;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(t[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

[[nodiscard]] inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Times greedy DPP selection over the (N, M) grid; medians of `repeats` runs.
[[nodiscard]] inline BenchResult bench_greedy(const BenchOptions& opt) {
  if (opt.sizes.empty() || opt.inducing.empty()) throw PreconditionError("bench needs at least one size");
  const KernelSpec kernel = KernelSpec::isotropic(KernelFamily::squared_exponential, opt.dim, 0.3);
  BenchResult res;
  struct Cell {
    Eigen::Index n, m;
    const Points* x;
    std::vector<double> samples;
  };
  std::vector<Points> designs;
  designs.reserve(opt.sizes.size());
  std::vector<Cell> cells;
  for (Eigen::Index n : opt.sizes) {
    Rng rng = make_rng(opt.seed, static_cast<std::uint64_t>(n));
    designs.push_back(Box::unit(opt.dim).sample_uniform(n, rng));
    for (Eigen::Index m : opt.inducing) {
      if (m > n) throw PreconditionError("bench requires M <= N");
      cells.push_back({n, m, &designs.back(), {}});
    }
  }
  // Repeats are interleaved across cells so slow drift in machine speed hits every cell alike.
  for (auto& c : cells) (void)greedy_map(kernel, *c.x, c.m);
  for (int r = 0; r < std::max(1, opt.repeats); ++r) {
    for (auto& c : cells) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto sel = greedy_map(kernel, *c.x, c.m);
      c.samples.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
      if (sel.indices.empty()) throw NumericalError("empty selection");
    }
  }
  std::map<std::pair<Eigen::Index, Eigen::Index>, double> t;
  for (const auto& c : cells) {
    const double med = median(c.samples);
    t[{c.n, c.m}] = med;
    res.timings.push_back({c.n, c.m, med});
  }
  if (opt.sizes.size() >= 2) {
    for (Eigen::Index m : opt.inducing) {
      std::vector<double> xs, ts;
      for (Eigen::Index n : opt.sizes) {
        xs.push_back(static_cast<double>(n));
        ts.push_back(t[{n, m}]);
      }
      res.slope_n[m] = log_log_slope(xs, ts);
    }
  }
  if (opt.inducing.size() >= 2) {
    for (Eigen::Index n : opt.sizes) {
      std::vector<double> xs, ts;
      for (Eigen::Index m : opt.inducing) {
        xs.push_back(static_cast<double>(m));
        ts.push_back(t[{n, m}]);
      }
      res.slope_m[n] = log_log_slope(xs, ts);
    }
  }
  return res;
}

[[nodiscard]] inline std::string bench_csv(const BenchResult& r) {
  std::ostringstream os;
  os << "kind,n,m,value\n";
  for (const auto& x : r.timings) os << "time_ms," << x.n << "," << x.m << "," << x.median_ms << "\n";
  for (const auto& [m, s] : r.slope_n) os << "slope_n,," << m << "," << s << "\n";
  for (const auto& [n, s] : r.slope_m) os << "slope_m," << n << ",," << s << "\n";
  return os.str();
}

[[nodiscard]] inline int cmd_bench(const BenchOptions& opt, const std::optional<std::filesystem::path>& out_path,
                                   std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const std::string csv = bench_csv(bench_greedy(opt));
    if (out_path) write_text(*out_path, csv);
    out << csv;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

struct AggregateOptions {
  std::filesystem::path run_dir;
  std::filesystem::path out;
};

/// Groups run sidecars by config hash and writes one aggregated CSV per group of two or more
/// successful runs. Returns the number of groups written through `written`.
[[nodiscard]] inline int cmd_aggregate(const AggregateOptions& opt, std::ostream& out = std::cout,
                                       std::ostream& err = std::cerr, int* written = nullptr) {
  if (!std::filesystem::is_directory(opt.run_dir)) {
    err << opt.run_dir.string() << ": not a directory\n";
    return kExitUsage;
  }
  struct Group {
    nlohmann::json config;
    std::vector<RunRecord> runs;
  };
  std::map<std::string, Group> groups;
  std::vector<std::filesystem::path> sidecars;
  for (const auto& entry : std::filesystem::directory_iterator(opt.run_dir)) {
    if (entry.path().extension() == ".json") sidecars.push_back(entry.path());
  }
  std::sort(sidecars.begin(), sidecars.end());
  for (const auto& path : sidecars) {
    try {
      const auto j = nlohmann::json::parse(read_text(path));
      if (!j.contains("config_hash")) continue;
      if (j.value("status", "ok") != "ok") {
        err << "warning: skipping failed run " << path.filename().string() << "\n";
        continue;
      }
      auto csv_path = path;
      csv_path.replace_extension(".csv");
      RunRecord rec;
      rec.seed = j.at("seed").get<std::uint64_t>();
      rec.steps = parse_run_csv(read_text(csv_path));
      auto& g = groups[j.at("config_hash").get<std::string>()];
      g.config = j.at("config");
      g.runs.push_back(std::move(rec));
    } catch (const std::exception& e) {
      err << "warning: skipping " << path.filename().string() << ": " << e.what() << "\n";
    }
  }
  int count = 0;
  std::filesystem::create_directories(opt.out);
  for (const auto& [hash, g] : groups) {
    if (g.runs.size() < 2) {
      err << "warning: group " << hash << " has a single run; skipped\n";
      continue;
    }
    std::vector<AggregateRow> rows;
    try {
      rows = aggregate(g.runs);
    } catch (const std::exception& e) {
      err << "warning: group " << hash << ": " << e.what() << "; skipped\n";
      continue;
    }
    const std::string objective_name = g.config.at("objective");
    const std::string strategy = g.config.at("placement").at("strategy");
    const auto m = g.config.at("placement").at("inducing").get<long long>();
    std::ostringstream os;
    os << kAggregateCsvHeader << "\n";
    for (const auto& r : rows) {
      os << objective_name << "," << strategy << "," << m << "," << r.step << "," << r.n << ","
         << detail::fmt17(r.mean_regret) << "," << detail::fmt17(r.half_width) << "," << g.runs.size() << "\n";
    }
    const auto path = opt.out / ("aggregate_" + objective_name + "_" + strategy + "_M" + std::to_string(m) + "_" +
                                 hash + ".csv");
    write_text(path, os.str());
    out << path.string() << "\n";
    ++count;
  }
  if (written) *written = count;
  return kExitOk;
}

}  // namespace cirbo::cli
