#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cirbo/benchmarks.hpp"
#include "cirbo/domain.hpp"
#include "cirbo/errors.hpp"
#include "cirbo/exact_gp.hpp"
#include "cirbo/hyperparameters.hpp"
#include "cirbo/kernel.hpp"
#include "cirbo/placement.hpp"
#include "cirbo/rng.hpp"
#include "cirbo/sparse_gp.hpp"
#include "cirbo/thompson.hpp"

namespace cirbo {

struct ExperimentConfig {
  std::string objective = "hartmann6";
  Eigen::Index total_budget = 1000;
  Eigen::Index batch_size = 50;
  PlacementConfig placement;
  Eigen::Index features = 100;
  std::vector<std::uint64_t> seeds = {0};
  int hyper_budget = 60;
  KernelFamily kernel = KernelFamily::matern52;
  /// Initial lengthscale as a fraction of each box side.
  double initial_lengthscale = 0.2;
  Eigen::Index random_probes = 1000;
  std::string output = "runs";

  [[nodiscard]] Eigen::Index steps() const { return (total_budget - batch_size) / batch_size; }

  void validate() const {
    if (objective.empty()) throw PreconditionError("objective name is required");
    (void)cirbo::objective(objective);
    if (batch_size < 1) throw PreconditionError("batch size must be at least 1");
    if (total_budget < batch_size || total_budget % batch_size != 0)
      throw PreconditionError("total budget must be a positive multiple of the batch size");
    if (features < 1) throw PreconditionError("feature count must be at least 1");
    if (hyper_budget < 1) throw PreconditionError("hyperparameter budget must be at least 1");
    if (!(initial_lengthscale > 0.0)) throw PreconditionError("initial lengthscale must be positive");
    if (random_probes < 1) throw PreconditionError("random probe count must be at least 1");
    placement.validate();
  }

  bool operator==(const ExperimentConfig&) const = default;
};

/// One row per BO step: the model fitted on the first `n` evaluations and its believed best.
struct StepRecord {
  Eigen::Index step = 0;
  Eigen::Index n = 0;
  Eigen::VectorXd believed_best_input;
  double believed_best_value = 0.0;  // noise-free objective at the believed best
  double simple_regret = 0.0;
  double t_place_ms = 0.0;
  double t_fit_ms = 0.0;
  double t_acq_ms = 0.0;
};

struct RunRecord {
  std::string objective;
  std::string strategy;
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  Points queries;
  Eigen::VectorXd observations;
  KernelSpec final_kernel;
  /// Non-empty when the run aborted; `steps` then holds the rows completed so far.
  std::string error;

  [[nodiscard]] bool ok() const { return error.empty(); }
};

namespace detail {

using Clock = std::chrono::steady_clock;

[[nodiscard]] inline double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace detail

/// One seeded BO run.
///
/// An initial batch of B uniform points is evaluated; then every step refits the surrogate on all
/// data (inducing reselection from the previous model, warm-started hyperparameters), records the
/// argmax of the posterior mean over queried inputs, and, until the budget is spent, proposes and
/// evaluates a Thompson batch. Targets are standardised before fitting. Deterministic in `seed`.
[[nodiscard]] inline RunRecord run(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const ObjectiveSpec obj = objective(cfg.objective);
  const Box& box = obj.box;
  const Eigen::Index b = cfg.batch_size;
  const Eigen::Index steps = cfg.steps();
  const bool exact = cfg.placement.strategy == Strategy::exact;

  RunRecord rec;
  rec.objective = cfg.objective;
  rec.strategy = std::string(to_string(cfg.placement.strategy));
  rec.seed = seed;
  rec.queries.resize(0, obj.dim);

  std::uint64_t eval_counter = 0;
  auto evaluate_batch = [&](const Points& x) {
    const Eigen::Index old = rec.queries.rows();
    rec.queries.conservativeResize(old + x.rows(), Eigen::NoChange);
    rec.observations.conservativeResize(old + x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      rec.queries.row(old + i) = x.row(i);
      rec.observations(old + i) =
          noisy_evaluate(obj, x.row(i).transpose(), derive_seed(seed, 1'000'000 + eval_counter++));
    }
  };

  KernelSpec kernel;
  kernel.family = cfg.kernel;
  kernel.lengthscales = cfg.initial_lengthscale * box.width().cwiseMax(1e-12);
  kernel.signal_variance = 1.0;
  kernel.noise_variance = 0.1;
  rec.final_kernel = kernel;

  std::optional<SparseModel> previous;
  try {
    Rng init_rng = make_rng(seed, 100);
    evaluate_batch(box.sample_uniform(b, init_rng));

    for (Eigen::Index s = 0; s <= steps; ++s) {
      StepRecord row;
      row.step = s;
      row.n = rec.queries.rows();

      const double mean = rec.observations.mean();
      double sd = std::sqrt((rec.observations.array() - mean).square().sum() /
                            std::max<double>(1.0, static_cast<double>(rec.observations.size() - 1)));
      if (!(sd > 1e-12)) sd = 1.0;
      Dataset data{rec.queries, (rec.observations.array() - mean).matrix() / sd};

      auto t0 = detail::Clock::now();
      const Placement placement = select_inducing(cfg.placement, data, previous ? &*previous : nullptr, kernel,
                                                  box, derive_seed(seed, 200 + static_cast<std::uint64_t>(s)));
      row.t_place_ms = detail::elapsed_ms(t0);

      t0 = detail::Clock::now();
      kernel = fit_hyperparameters(data, placement.inducing, kernel, cfg.hyper_budget);
      SparseModel model = sparse_fit(data, placement.inducing, kernel);
      row.t_fit_ms = detail::elapsed_ms(t0);

      const Eigen::VectorXd fitted_mean =
          exact ? ExactPosterior(data, kernel).mean(data.inputs) : model.mean(data.inputs);
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < fitted_mean.size(); ++i) {
        if (fitted_mean(i) > fitted_mean(best)) best = i;
      }
      row.believed_best_input = data.inputs.row(best).transpose();
      row.believed_best_value = evaluate(obj, row.believed_best_input);
      row.simple_regret = obj.optimum_value - row.believed_best_value;

      if (s < steps) {
        t0 = detail::Clock::now();
        BatchOptions opt;
        opt.features = cfg.features;
        opt.maximize.random_probes = cfg.random_probes;
        const Points batch = propose_batch(model, box, b, derive_seed(seed, 300 + static_cast<std::uint64_t>(s)), opt);
        row.t_acq_ms = detail::elapsed_ms(t0);
        evaluate_batch(batch);
      }
      rec.steps.push_back(row);
      rec.final_kernel = kernel;
      previous = std::move(model);
    }
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

struct AggregateRow {
  Eigen::Index step = 0;
  Eigen::Index n = 0;
  double mean_regret = 0.0;
  double half_width = 0.0;  // 1.96 sd / sqrt(R)
};

/// Per-step mean simple regret and 95% normal half-widths across runs.
[[nodiscard]] inline std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records) {
  if (records.size() < 2) throw PreconditionError("aggregation needs at least two runs");
  const std::size_t steps = records.front().steps.size();
  for (const auto& r : records) {
    if (r.steps.size() != steps) throw PreconditionError("runs have mismatched step counts");
  }
  const auto count = static_cast<double>(records.size());
  std::vector<AggregateRow> out(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    double mean = 0.0;
    for (const auto& r : records) mean += r.steps[s].simple_regret;
    mean /= count;
    double ss = 0.0;
    for (const auto& r : records) ss += (r.steps[s].simple_regret - mean) * (r.steps[s].simple_regret - mean);
    out[s].step = records.front().steps[s].step;
    out[s].n = records.front().steps[s].n;
    out[s].mean_regret = mean;
    out[s].half_width = 1.96 * std::sqrt(ss / (count - 1.0)) / std::sqrt(count);
  }
  return out;
}

}  // namespace cirbo
