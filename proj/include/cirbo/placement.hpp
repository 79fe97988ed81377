#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cirbo/domain.hpp"
#include "cirbo/dpp.hpp"
#include "cirbo/errors.hpp"
#include "cirbo/kernel.hpp"
#include "cirbo/maxvalue.hpp"
#include "cirbo/rng.hpp"
#include "cirbo/sparse_gp.hpp"

namespace cirbo {

/// Inducing-point placement strategies. `exact` is only meaningful to the BO loop,
/// where it selects the full-rank GP surrogate; as a placement it keeps every candidate.
enum class Strategy { cir, cvr, kmeans, uniform, exact };

[[nodiscard]] inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::cir: return "cir";
    case Strategy::cvr: return "cvr";
    case Strategy::kmeans: return "kmeans";
    case Strategy::uniform: return "uniform";
    case Strategy::exact: return "exact";
  }
  return "?";
}

[[nodiscard]] inline Strategy strategy_from_string(std::string_view name) {
  if (name == "cir") return Strategy::cir;
  if (name == "cvr") return Strategy::cvr;
  if (name == "kmeans") return Strategy::kmeans;
  if (name == "uniform") return Strategy::uniform;
  if (name == "exact") return Strategy::exact;
  throw PreconditionError("unknown strategy '" + std::string(name) + "'");
}

/// Where the prior mean used by CIR's quality weights comes from.
enum class PriorMeanMode { previous_posterior, observed_values, zero };

[[nodiscard]] inline std::string_view to_string(PriorMeanMode m) {
  switch (m) {
    case PriorMeanMode::previous_posterior: return "previous-posterior";
    case PriorMeanMode::observed_values: return "observed-values";
    case PriorMeanMode::zero: return "zero";
  }
  return "?";
}

[[nodiscard]] inline PriorMeanMode prior_mean_mode_from_string(std::string_view name) {
  if (name == "previous-posterior") return PriorMeanMode::previous_posterior;
  if (name == "observed-values") return PriorMeanMode::observed_values;
  if (name == "zero") return PriorMeanMode::zero;
  throw PreconditionError("unknown prior mean mode '" + std::string(name) + "'");
}

struct PlacementConfig {
  Strategy strategy = Strategy::cir;
  Eigen::Index m = 50;
  double alpha = 0.5;
  int gumbel_samples = 10;
  PriorMeanMode prior_mean = PriorMeanMode::previous_posterior;
  GammaConvention gamma = GammaConvention::max_value_search;
  /// Quasi-random domain points added to the observed inputs for max-value sampling.
  Eigen::Index max_value_grid = 512;

  void validate() const {
    if (m < 1) throw PreconditionError("M must be at least 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw PreconditionError("alpha must lie in [0, 1]");
    if (strategy == Strategy::cir && gumbel_samples < 2)
      throw PreconditionError("cir needs at least two Gumbel samples");
  }

  bool operator==(const PlacementConfig&) const = default;
};

/// Chosen inducing inputs plus, for subset strategies, the candidate indices in selection order.
struct Placement {
  Points inducing;
  std::vector<Eigen::Index> indices;
  /// CIR fell back from previous-posterior to observed values because no model was supplied.
  bool fell_back_to_observed = false;
  /// Greedy selection stopped early on degenerate candidates.
  bool degenerate = false;
  /// Quality weights used by CIR (empty otherwise).
  Eigen::VectorXd log_q;
};

/// Lloyd's algorithm with k-means++ seeding on inputs rescaled to the unit box.
/// Empty clusters keep their previous centroid.
[[nodiscard]] inline Points kmeans_centroids(const Points& x, const Box& box, Eigen::Index k,
                                             std::uint64_t seed, int max_iterations = 50) {
  const Eigen::Index n = x.rows();
  if (k < 1 || k > n) throw PreconditionError("k-means requires 1 <= k <= N");
  const Eigen::RowVectorXd lo = box.lower.transpose();
  const Eigen::RowVectorXd width = box.width().cwiseMax(1e-300).transpose();
  const Points u = (x.rowwise() - lo).array().rowwise() / width.array();

  Rng rng = make_rng(seed, 7);
  Points centroids(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.row(0) = u.row(first(rng));
  Eigen::VectorXd d2 = (u.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (Eigen::Index c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> unif(0.0, total);
      double target = unif(rng);
      for (pick = 0; pick < n - 1; ++pick) {
        target -= d2(pick);
        if (target <= 0.0) break;
      }
    } else {
      pick = first(rng);
    }
    centroids.row(c) = u.row(pick);
    d2 = d2.cwiseMin((u.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }

  std::vector<Eigen::Index> assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (centroids.rowwise() - u.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Points sums = Points::Zero(k, x.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += u.row(i);
      counts(assign[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts(c) > 0.0) centroids.row(c) = sums.row(c) / counts(c);
    }
  }
  return (centroids.array().rowwise() * width.array()).rowwise() + lo.array();
}

namespace detail {

[[nodiscard]] inline Points gather_rows(const Points& x, const std::vector<Eigen::Index>& idx) {
  Points out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
  return out;
}

/// Per-candidate prior mean/sd for CIR plus the wider set used to sample max values.
struct MaxValueInputs {
  Eigen::VectorXd cand_mean, cand_sd;
  Eigen::VectorXd grid_mean, grid_sd;
};

[[nodiscard]] inline MaxValueInputs max_value_inputs(const PlacementConfig& cfg, const Dataset& candidates,
                                                     const SparseModel* previous, const KernelSpec& kernel,
                                                     const Box& box, bool& fell_back) {
  MaxValueInputs in;
  const Eigen::Index n = candidates.size();
  const double prior_sd = std::sqrt(kernel.signal_variance);
  PriorMeanMode mode = cfg.prior_mean;
  if (mode == PriorMeanMode::previous_posterior && previous == nullptr) {
    mode = PriorMeanMode::observed_values;
    fell_back = true;
  }
  switch (mode) {
    case PriorMeanMode::previous_posterior: {
      const Points grid = cfg.max_value_grid > 0 ? box.halton(cfg.max_value_grid) : Points(0, box.dim());
      Points all(n + grid.rows(), candidates.dim());
      all << candidates.inputs, grid;
      const auto pred = previous->predict(all);
      const double floor = 1e-6 * std::sqrt(previous->kernel().signal_variance);
      const Eigen::VectorXd sd = pred.variance.cwiseSqrt().cwiseMax(floor);
      in.cand_mean = pred.mean.head(n);
      in.cand_sd = sd.head(n);
      in.grid_mean = pred.mean;
      in.grid_sd = sd;
      break;
    }
    case PriorMeanMode::observed_values:
      in.cand_mean = candidates.targets;
      in.cand_sd = Eigen::VectorXd::Constant(n, prior_sd);
      in.grid_mean = in.cand_mean;
      in.grid_sd = in.cand_sd;
      break;
    case PriorMeanMode::zero:
      in.cand_mean = Eigen::VectorXd::Zero(n);
      in.cand_sd = Eigen::VectorXd::Constant(n, prior_sd);
      in.grid_mean = in.cand_mean;
      in.grid_sd = in.cand_sd;
      break;
  }
  return in;
}

}  // namespace detail

/// Chooses up to M inducing inputs for a sparse GP of `candidates`.
///
/// When N <= M every candidate is used. Otherwise: cvr runs unit-quality greedy DPP MAP; cir
/// weights the DPP by max-value information (alpha = 0 reduces to cvr, alpha = 1 keeps the
/// top-M by information alone); kmeans returns k-means++/Lloyd centroids; uniform draws M
/// points in `box`. `previous` supplies the prior mean for cir's previous-posterior mode.
[[nodiscard]] inline Placement select_inducing(const PlacementConfig& cfg, const Dataset& candidates,
                                               const SparseModel* previous, const KernelSpec& kernel,
                                               const Box& box, std::uint64_t seed) {
  cfg.validate();
  if (candidates.size() < 1) throw PreconditionError("select_inducing needs at least one candidate");
  const Eigen::Index n = candidates.size();
  Placement out;

  if (n <= cfg.m || cfg.strategy == Strategy::exact) {
    out.inducing = candidates.inputs;
    out.indices.resize(static_cast<std::size_t>(n));
    std::iota(out.indices.begin(), out.indices.end(), Eigen::Index{0});
    return out;
  }

  const auto from_greedy = [&](const std::optional<QualityWeights>& q) {
    const SelectionResult sel = greedy_map(kernel, candidates.inputs, cfg.m, q);
    out.indices = sel.indices;
    out.degenerate = sel.degenerate;
    out.inducing = detail::gather_rows(candidates.inputs, out.indices);
  };

  switch (cfg.strategy) {
    case Strategy::cvr:
      from_greedy(std::nullopt);
      break;
    case Strategy::cir: {
      if (cfg.alpha == 0.0) {
        from_greedy(std::nullopt);
        break;
      }
      const auto in = detail::max_value_inputs(cfg, candidates, previous, kernel, box, out.fell_back_to_observed);
      auto maxima = gumbel_sample_maxima(in.grid_mean, in.grid_sd, cfg.gumbel_samples, derive_seed(seed, 11));
      const MaxValueMoments moments = moment_match(std::move(maxima), 1e-6 * std::sqrt(kernel.signal_variance));
      const Eigen::VectorXd k_diag = gram_diagonal(kernel, candidates.inputs);
      if (cfg.alpha == 1.0) {
        // Quality alone; on the correlation-normalised kernel this is the top-M information.
        Eigen::VectorXd ig(n);
        for (Eigen::Index i = 0; i < n; ++i) ig(i) = pointwise_ig(in.cand_mean(i), in.cand_sd(i), moments, cfg.gamma);
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return ig(a) > ig(b); });
        order.resize(static_cast<std::size_t>(cfg.m));
        out.indices = order;
        out.inducing = detail::gather_rows(candidates.inputs, out.indices);
        out.log_q = ig;
        break;
      }
      QualityWeights q = quality_weights(in.cand_mean, in.cand_sd, k_diag, moments, cfg.alpha, cfg.m, cfg.gamma);
      out.log_q = q.log_q;
      from_greedy(q);
      break;
    }
    case Strategy::kmeans:
      out.inducing = kmeans_centroids(candidates.inputs, box, cfg.m, seed);
      break;
    case Strategy::uniform: {
      Rng rng = make_rng(seed, 13);
      out.inducing = box.sample_uniform(cfg.m, rng);
      break;
    }
    case Strategy::exact:
      break;
  }
  return out;
}

}  // namespace cirbo
