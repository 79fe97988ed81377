#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace cirbo::cli;
  CLI::App app{"High-throughput Bayesian optimisation with information-based inducing point placement"};
  app.require_subcommand(1);

  RunOptions run_opt;
  std::string run_config;
  std::uint64_t run_seed = 0;
  std::string run_out;
  auto* run = app.add_subcommand("run", "Run every (sweep point, seed) of an experiment config");
  run->add_option("config", run_config, "Config file")->required();
  auto* run_seed_opt = run->add_option("--seed", run_seed, "Use only this seed");
  auto* run_out_opt = run->add_option("--out", run_out, "Output directory (default: config 'output')");
  run->add_option("--jobs", run_opt.jobs, "Worker threads (default: logical cores)");

  PlaceOptions place_opt;
  std::string place_config, place_out;
  std::uint64_t place_seed = 0;
  auto* place = app.add_subcommand("place", "One inducing-point placement on a fresh 2-d log Goldstein-Price design");
  place->add_option("config", place_config, "Config file")->required();
  place->add_option("--strategy", place_opt.strategy, "cir | cvr | kmeans | uniform")->required();
  place->add_option("--out", place_out, "Output CSV")->required();
  auto* place_seed_opt = place->add_option("--seed", place_seed, "Design/placement seed");

  BenchOptions bench_opt;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench", "Time greedy DPP selection over an (N, M) grid");
  bench->add_option("--sizes", bench_opt.sizes, "Candidate counts N")->delimiter(',')->required();
  bench->add_option("--inducing", bench_opt.inducing, "Inducing counts M")->delimiter(',');
  bench->add_option("--repeats", bench_opt.repeats, "Repeats per cell (median reported)");
  bench->add_option("--dim", bench_opt.dim, "Input dimension");
  bench->add_option("--seed", bench_opt.seed, "Seed for the random candidates");
  auto* bench_out_opt = bench->add_option("--out", bench_out, "Also write the CSV here");

  AggregateOptions agg_opt;
  std::string agg_dir, agg_out;
  auto* agg = app.add_subcommand("aggregate", "Aggregate run CSVs by configuration");
  agg->add_option("run_dir", agg_dir, "Directory of run CSV/JSON pairs")->required();
  agg->add_option("--out", agg_out, "Directory for aggregated CSVs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*run) {
    run_opt.config = run_config;
    if (*run_seed_opt) run_opt.seed = run_seed;
    if (*run_out_opt) run_opt.out = std::filesystem::path(run_out);
    return cmd_run(run_opt);
  }
  if (*place) {
    place_opt.config = place_config;
    place_opt.out = place_out;
    if (*place_seed_opt) place_opt.seed = place_seed;
    return cmd_place(place_opt);
  }
  if (*bench) {
    std::optional<std::filesystem::path> out;
    if (*bench_out_opt) out = bench_out;
    return cmd_bench(bench_opt, out);
  }
  if (*agg) {
    agg_opt.run_dir = agg_dir;
    agg_opt.out = agg_out;
    return cmd_aggregate(agg_opt);
  }
  return kExitUsage;
}
