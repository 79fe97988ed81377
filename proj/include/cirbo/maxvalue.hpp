#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cirbo/dpp.hpp"
#include "cirbo/errors.hpp"
#include "cirbo/normal.hpp"
#include "cirbo/rng.hpp"

namespace cirbo {

/// Gaussian summary (mu*, sigma*) of sampled maximum values.
struct MaxValueMoments {
  double mu_star = 0.0;
  double sigma_star = 1.0;
  std::vector<double> raw_samples;
};

/// Gumbel distribution a - b log(-log U) fitted through quantiles of prod_i Phi((y - mu_i) / s_i).
struct GumbelFit {
  double location = 0.0;  // a
  double scale = 1.0;     // b
  double q25 = 0.0, q50 = 0.0, q75 = 0.0;

  [[nodiscard]] double cdf(double y) const { return std::exp(-std::exp(-(y - location) / scale)); }
  [[nodiscard]] double quantile(double r) const { return location - scale * std::log(-std::log(r)); }
};

namespace detail {

[[nodiscard]] inline double log_max_cdf(double y, const Eigen::VectorXd& means, const Eigen::VectorXd& sds) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < means.size(); ++i) acc += normal::log_cdf((y - means(i)) / sds(i));
  return acc;
}

/// Solves prod_i Phi((y - mu_i) / s_i) = r by bisection on [lo, hi] to `tol`.
[[nodiscard]] inline double max_quantile(double r, const Eigen::VectorXd& means, const Eigen::VectorXd& sds,
                                         double lo, double hi, double tol) {
  const double target = std::log(r);
  double f_lo = log_max_cdf(lo, means, sds) - target;
  double f_hi = log_max_cdf(hi, means, sds) - target;
  if (!(f_lo < 0.0 && f_hi > 0.0)) {
    // Widen once before giving up.
    const double w = hi - lo;
    lo -= w;
    hi += w;
    f_lo = log_max_cdf(lo, means, sds) - target;
    f_hi = log_max_cdf(hi, means, sds) - target;
    if (!(f_lo < 0.0 && f_hi > 0.0)) throw NumericalError("could not bracket max-value quantile");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (log_max_cdf(mid, means, sds) - target < 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Fits the Gumbel approximation to the distribution of max_i f_i for independent
/// f_i ~ N(means_i, sds_i^2). Quantiles are located to 1e-6 by bisection.
[[nodiscard]] inline GumbelFit fit_gumbel(const Eigen::VectorXd& means, const Eigen::VectorXd& sds) {
  if (means.size() < 2 || sds.size() != means.size())
    throw PreconditionError("gumbel sampler needs at least two marginals");
  if (!(sds.array() > 0.0).all()) throw PreconditionError("marginal standard deviations must be positive");
  const double spread = 5.0 * sds.maxCoeff();
  const double lo = means.minCoeff() - spread;
  const double hi = means.maxCoeff() + spread;
  GumbelFit fit;
  fit.q25 = detail::max_quantile(0.25, means, sds, lo, hi, 1e-6);
  fit.q50 = detail::max_quantile(0.50, means, sds, lo, hi, 1e-6);
  fit.q75 = detail::max_quantile(0.75, means, sds, lo, hi, 1e-6);
  const double loglog25 = std::log(-std::log(0.25));
  const double loglog75 = std::log(-std::log(0.75));
  fit.scale = std::max((fit.q75 - fit.q25) / (loglog25 - loglog75), 1e-12);
  fit.location = fit.q50 + fit.scale * std::log(-std::log(0.5));
  return fit;
}

/// Draws `count` approximate samples of the maximum value via the fitted Gumbel. O(N + S).
[[nodiscard]] inline std::vector<double> gumbel_sample_maxima(const Eigen::VectorXd& means,
                                                              const Eigen::VectorXd& sds, int count,
                                                              std::uint64_t seed) {
  if (count < 1) throw PreconditionError("sample count must be positive");
  const GumbelFit fit = fit_gumbel(means, sds);
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(count));
  for (auto& s : out) {
    double v = u(rng);
    while (v <= 0.0) v = u(rng);
    s = fit.location - fit.scale * std::log(-std::log(v));
  }
  return out;
}

/// Sample mean and unbiased standard deviation, the latter floored at `sigma_floor`.
[[nodiscard]] inline MaxValueMoments moment_match(std::vector<double> samples, double sigma_floor = 1e-6) {
  if (samples.size() < 2) throw PreconditionError("moment matching needs at least two samples");
  const auto s = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= s;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  MaxValueMoments m;
  m.mu_star = mean;
  m.sigma_star = std::max(std::sqrt(ss / (s - 1.0)), sigma_floor);
  m.raw_samples = std::move(samples);
  return m;
}

/// g(gamma) = gamma phi(gamma) / (2 Phi(gamma)) - log Phi(gamma): the information an observation
/// carries about a Gaussian maximum value. Non-negative, decreasing, log 2 at zero.
[[nodiscard]] inline double max_value_information(double gamma) {
  const double log_cdf = normal::log_cdf(gamma);
  const double ratio = std::exp(normal::log_pdf(gamma) - log_cdf);
  return std::max(0.5 * gamma * ratio - log_cdf, 0.0);
}

/// Direction of the standardised gap fed to the information term.
enum class GammaConvention {
  /// (mu* - mean_z) / sd_z: points whose mean approaches the maximum are informative.
  max_value_search,
  /// (mean_z - mu*) / sigma*: the literal orientation, kept for ablations.
  literal,
};

/// Moment-matched information gain between an observation at z and the maximum value.
[[nodiscard]] inline double pointwise_ig(double mean_z, double sd_z, const MaxValueMoments& moments,
                                         GammaConvention convention = GammaConvention::max_value_search) {
  if (!(sd_z > 0.0)) throw PreconditionError("predictive sd must be positive");
  const double gamma = convention == GammaConvention::max_value_search
                           ? (moments.mu_star - mean_z) / sd_z
                           : (mean_z - moments.mu_star) / moments.sigma_star;
  return max_value_information(gamma);
}

/// Sample-average form (1/S) sum_f* g((f* - mean_z) / sd_z); used as the reference for the
/// moment-matched approximation.
[[nodiscard]] inline double sample_average_ig(double mean_z, double sd_z, const std::vector<double>& maxima) {
  double acc = 0.0;
  for (double f : maxima) acc += max_value_information((f - mean_z) / sd_z);
  return acc / static_cast<double>(maxima.size());
}

/// log q_z = alpha IG_z / (2 M (1 - alpha)) - 0.5 log k(z, z).
[[nodiscard]] inline QualityWeights quality_weights(const Eigen::VectorXd& means, const Eigen::VectorXd& sds,
                                                    const Eigen::VectorXd& k_diag,
                                                    const MaxValueMoments& moments, double alpha,
                                                    Eigen::Index m,
                                                    GammaConvention convention = GammaConvention::max_value_search) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie strictly inside (0, 1)");
  if (m < 1) throw PreconditionError("inducing count must be positive");
  if (means.size() != sds.size() || means.size() != k_diag.size())
    throw PreconditionError("means, sds and prior variances must have equal length");
  if (!(k_diag.array() > 0.0).all()) throw PreconditionError("prior variances must be positive");
  const double scale = alpha / (2.0 * static_cast<double>(m) * (1.0 - alpha));
  QualityWeights q{Eigen::VectorXd(means.size())};
  for (Eigen::Index i = 0; i < means.size(); ++i) {
    q.log_q(i) = scale * pointwise_ig(means(i), sds(i), moments, convention) - 0.5 * std::log(k_diag(i));
  }
  return q;
}

}  // namespace cirbo
