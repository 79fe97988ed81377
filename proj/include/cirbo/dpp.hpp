#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cirbo/errors.hpp"
#include "cirbo/kernel.hpp"
#include "cirbo/linalg.hpp"

namespace cirbo {

/// Natural-log quality log q_z per candidate; the weighted DPP kernel is L = diag(q) K diag(q).
struct QualityWeights {
  Eigen::VectorXd log_q;

  [[nodiscard]] static QualityWeights unit(Eigen::Index n) { return {Eigen::VectorXd::Zero(n)}; }
  [[nodiscard]] static QualityWeights constant(Eigen::Index n, double c) {
    return {Eigen::VectorXd::Constant(n, c)};
  }
};

/// Greedy MAP trace. `gains[j]` is the increase of 0.5 * log|L_Z| at step j, so
/// `half_log_det` (their sum) is 0.5 * log|L_Z| of the selected set.
struct SelectionResult {
  std::vector<Eigen::Index> indices;
  std::vector<double> gains;
  double half_log_det = 0.0;
  /// Set when selection stopped early because every remaining candidate had
  /// conditional variance below the degeneracy threshold.
  bool degenerate = false;
};

inline constexpr double kDegenerateVariance = 1e-12;
inline constexpr double kGainTieTolerance = 1e-12;

/// Greedy MAP inference for the quality-weighted DPP over `candidates`.
///
/// Step j picks argmax 0.5 * log s2(z) + log q_z, where s2(z) is the noise-free variance of z
/// given the points already selected. One Cholesky row per candidate is extended per step, so the
/// total cost is O(M^2 N) with no refactorisation. Gains within 1e-12 go to the lowest index.
[[nodiscard]] inline SelectionResult greedy_map(const KernelSpec& kernel, const Points& candidates,
                                                Eigen::Index m,
                                                const std::optional<QualityWeights>& quality = std::nullopt) {
  kernel.validate();
  detail::check_points(kernel, candidates, "candidates");
  const Eigen::Index n = candidates.rows();
  if (m < 1 || m > n) throw PreconditionError("greedy_map requires 1 <= M <= N");
  Eigen::VectorXd log_q = Eigen::VectorXd::Zero(n);
  if (quality) {
    if (quality->log_q.size() != n) throw PreconditionError("quality length must equal candidate count");
    if (!quality->log_q.allFinite()) throw PreconditionError("quality weights must be finite");
    log_q = quality->log_q;
  }

  // Column t of `rows` holds the t-th Cholesky entry of every candidate.
  Eigen::MatrixXd rows(n, m);
  Eigen::VectorXd var = gram_diagonal(kernel, candidates);
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  const Points scaled = candidates * kernel.lengthscales.cwiseInverse().asDiagonal();
  // Argmax runs on var * q^2 so the inner loop needs no logarithms.
  const Eigen::VectorXd q2 = (2.0 * (log_q.array() - log_q.maxCoeff())).exp();
  const double tie_factor = std::exp(2.0 * kGainTieTolerance);
  const bool wide = log_q.maxCoeff() - log_q.minCoeff() > 300.0;

  Eigen::Index best = -1;
  double best_key = 0.0;
  auto consider = [&](Eigen::Index i) {
    if (taken[static_cast<std::size_t>(i)] || var(i) < kDegenerateVariance) return;
    const double key = wide ? 0.5 * std::log(var(i)) + log_q(i) : var(i) * q2(i);
    if (best < 0 || (wide ? key > best_key + kGainTieTolerance : key > best_key * tie_factor)) {
      best = i;
      best_key = key;
    }
  };
  for (Eigen::Index i = 0; i < n; ++i) consider(i);

  SelectionResult out;
  out.indices.reserve(static_cast<std::size_t>(m));
  out.gains.reserve(static_cast<std::size_t>(m));
  Eigen::ArrayXd r2(n);
  for (Eigen::Index step = 0; step < m; ++step) {
    if (best < 0) {
      out.degenerate = true;
      break;
    }
    const Eigen::Index pick = best;
    const double gain = 0.5 * std::log(var(pick)) + log_q(pick);
    taken[static_cast<std::size_t>(pick)] = 1;
    out.indices.push_back(pick);
    out.gains.push_back(gain);
    out.half_log_det += gain;
    if (step + 1 == m) break;

    const double d = std::sqrt(var(pick));
    r2.setZero();
    for (Eigen::Index j = 0; j < scaled.cols(); ++j) r2 += (scaled.col(j).array() - scaled(pick, j)).square();
    Eigen::VectorXd e = detail::covariance_of_sq_distances(kernel, r2);
    if (step > 0) {
      e.noalias() -= rows.leftCols(step) * rows.row(pick).head(step).transpose();
    }
    e /= d;
    rows.col(step) = e;
    // Downdate and choose the next pivot in one pass.
    best = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      var(i) -= e(i) * e(i);
      consider(i);
    }
    var(pick) = 0.0;
  }
  return out;
}

/// k(z, z) - k(z, S) K_SS^-1 k(S, z), clamped at zero. Refactorises K_SS on every call.
[[nodiscard]] inline double conditional_variance(const KernelSpec& kernel, const Points& selected,
                                                 const Eigen::Ref<const Eigen::VectorXd>& z) {
  kernel.validate();
  const double prior = kernel.signal_variance;
  if (selected.rows() == 0) return prior;
  detail::check_points(kernel, selected, "selected");
  const auto chol = jittered_cholesky(gram(kernel, selected), kernel.signal_variance);
  const Eigen::VectorXd ksz = covariance_column(kernel, selected, z);
  const Eigen::VectorXd v = chol.llt.matrixL().solve(ksz);
  return std::max(prior - v.squaredNorm(), 0.0);
}

/// log|L_Z| for L = diag(q) K diag(q) restricted to `subset`, by a direct Cholesky of L_Z.
[[nodiscard]] inline double weighted_log_det(const KernelSpec& kernel, const Points& candidates,
                                             const std::vector<Eigen::Index>& subset,
                                             const QualityWeights& quality) {
  Points z(static_cast<Eigen::Index>(subset.size()), candidates.cols());
  Eigen::VectorXd q(static_cast<Eigen::Index>(subset.size()));
  for (std::size_t i = 0; i < subset.size(); ++i) {
    z.row(static_cast<Eigen::Index>(i)) = candidates.row(subset[i]);
    q(static_cast<Eigen::Index>(i)) = std::exp(quality.log_q(subset[i]));
  }
  const Eigen::MatrixXd l = q.asDiagonal() * gram(kernel, z) * q.asDiagonal();
  return log_det_spd(l);
}

struct ExhaustiveResult {
  std::vector<Eigen::Index> indices;
  double log_det = -std::numeric_limits<double>::infinity();
};

/// Exact MAP over all size-M subsets by enumeration; lexicographically first subset wins ties.
/// Refuses instances with more than `max_subsets` subsets.
[[nodiscard]] inline ExhaustiveResult exhaustive_map(const KernelSpec& kernel, const Points& candidates,
                                                     Eigen::Index m,
                                                     const std::optional<QualityWeights>& quality = std::nullopt,
                                                     std::uint64_t max_subsets = 1'000'000) {
  kernel.validate();
  detail::check_points(kernel, candidates, "candidates");
  const Eigen::Index n = candidates.rows();
  if (m < 1 || m > n) throw PreconditionError("exhaustive_map requires 1 <= M <= N");
  double count = 1.0;
  for (Eigen::Index i = 0; i < m; ++i) count = count * static_cast<double>(n - i) / static_cast<double>(i + 1);
  if (count > static_cast<double>(max_subsets)) throw PreconditionError("combinatorial budget exceeded");

  const QualityWeights q = quality ? *quality : QualityWeights::unit(n);
  if (q.log_q.size() != n) throw PreconditionError("quality length must equal candidate count");
  const Eigen::MatrixXd k = gram(kernel, candidates);

  ExhaustiveResult best;
  std::vector<Eigen::Index> subset(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) subset[static_cast<std::size_t>(i)] = i;
  Eigen::MatrixXd l(m, m);
  while (true) {
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) {
        const auto ia = subset[static_cast<std::size_t>(a)];
        const auto ib = subset[static_cast<std::size_t>(b)];
        l(a, b) = std::exp(q.log_q(ia) + q.log_q(ib)) * k(ia, ib);
      }
    }
    const double value = log_det_spd(l);
    if (value > best.log_det) {
      best.log_det = value;
      best.indices = subset;
    }
    // Next combination in lexicographic order.
    Eigen::Index pos = m - 1;
    while (pos >= 0 && subset[static_cast<std::size_t>(pos)] == n - m + pos) --pos;
    if (pos < 0) break;
    ++subset[static_cast<std::size_t>(pos)];
    for (Eigen::Index j = pos + 1; j < m; ++j)
      subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

}  // namespace cirbo
