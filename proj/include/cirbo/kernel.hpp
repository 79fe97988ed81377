#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "cirbo/errors.hpp"

namespace cirbo {

/// Row-major point sets: one point per row.
using Points = Eigen::MatrixXd;

enum class KernelFamily { squared_exponential, matern52 };

[[nodiscard]] inline std::string_view to_string(KernelFamily family) {
  return family == KernelFamily::squared_exponential ? "squared-exponential" : "matern-5/2";
}

[[nodiscard]] inline KernelFamily kernel_family_from_string(std::string_view name) {
  if (name == "squared-exponential" || name == "se") return KernelFamily::squared_exponential;
  if (name == "matern-5/2" || name == "matern52") return KernelFamily::matern52;
  throw PreconditionError("unknown kernel family '" + std::string(name) + "'");
}

/// Stationary covariance with per-dimension lengthscales plus the Gaussian
/// observation noise of the likelihood.
struct KernelSpec {
  KernelFamily family = KernelFamily::matern52;
  Eigen::VectorXd lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 0.0;

  [[nodiscard]] Eigen::Index dim() const { return lengthscales.size(); }

  void validate() const {
    if (lengthscales.size() == 0) throw PreconditionError("kernel has no lengthscales");
    if (!(lengthscales.array() > 0.0).all() || !lengthscales.allFinite())
      throw PreconditionError("lengthscales must be positive and finite");
    if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
      throw PreconditionError("signal variance must be positive");
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
      throw PreconditionError("noise variance must be non-negative");
  }

  [[nodiscard]] static KernelSpec isotropic(KernelFamily family, Eigen::Index dim, double lengthscale,
                                            double signal_variance = 1.0, double noise_variance = 0.0) {
    return KernelSpec{family, Eigen::VectorXd::Constant(dim, lengthscale), signal_variance,
                      noise_variance};
  }

  bool operator==(const KernelSpec& other) const {
    return family == other.family && lengthscales.size() == other.lengthscales.size() &&
           lengthscales == other.lengthscales && signal_variance == other.signal_variance &&
           noise_variance == other.noise_variance;
  }
};

namespace detail {

inline constexpr double kSqrt5 = 2.2360679774997896964;

/// Covariance as a function of the scaled distance r = |(x - x') / l|.
[[nodiscard]] inline double covariance_of_sq_distance(const KernelSpec& k, double r2) {
  if (k.family == KernelFamily::squared_exponential) {
    return k.signal_variance * std::exp(-0.5 * r2);
  }
  const double r = std::sqrt(r2);
  const double s = kSqrt5 * r;
  return k.signal_variance * (1.0 + s + (5.0 / 3.0) * r2) * std::exp(-s);
}

/// dk/d(r^2) * 2, i.e. the scalar such that grad_x k(x, z) = w * (x - z) / l^2.
[[nodiscard]] inline double gradient_weight(const KernelSpec& k, double r2) {
  if (k.family == KernelFamily::squared_exponential) {
    return -k.signal_variance * std::exp(-0.5 * r2);
  }
  const double s = kSqrt5 * std::sqrt(r2);
  return -(5.0 / 3.0) * k.signal_variance * (1.0 + s) * std::exp(-s);
}

/// Elementwise covariance_of_sq_distance over an array of squared scaled distances.
[[nodiscard]] inline Eigen::VectorXd covariance_of_sq_distances(const KernelSpec& k, const Eigen::ArrayXd& r2) {
  if (k.family == KernelFamily::squared_exponential) return (k.signal_variance * (-0.5 * r2).exp()).matrix();
  const Eigen::ArrayXd s = kSqrt5 * r2.sqrt();
  return (k.signal_variance * (1.0 + s + (5.0 / 3.0) * r2) * (-s).exp()).matrix();
}

inline void check_points(const KernelSpec& k, const Points& p, const char* name) {
  if (p.cols() != k.dim()) {
    throw DimensionError(std::string(name) + " has dimension " + std::to_string(p.cols()) +
                         " but the kernel expects " + std::to_string(k.dim()));
  }
  if (!p.allFinite()) throw PreconditionError(std::string(name) + " contains non-finite coordinates");
}

}  // namespace detail

/// k(x, x') for two single points.
[[nodiscard]] inline double covariance(const KernelSpec& k, const Eigen::Ref<const Eigen::VectorXd>& x,
                                       const Eigen::Ref<const Eigen::VectorXd>& y) {
  const double r2 = ((x - y).array() / k.lengthscales.array()).square().sum();
  return detail::covariance_of_sq_distance(k, r2);
}

/// Cross-covariance matrix [k(a_i, b_j)] of shape |A| x |B|.
[[nodiscard]] inline Eigen::MatrixXd gram(const KernelSpec& k, const Points& a, const Points& b) {
  detail::check_points(k, a, "A");
  detail::check_points(k, b, "B");
  const Eigen::RowVectorXd inv_l = k.lengthscales.cwiseInverse().transpose();
  const Eigen::MatrixXd as = a.array().rowwise() * inv_l.array();
  const Eigen::MatrixXd bs = b.array().rowwise() * inv_l.array();
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      out(i, j) = detail::covariance_of_sq_distance(k, (as.row(i) - bs.row(j)).squaredNorm());
    }
  }
  return out;
}

/// Symmetric Gram matrix; the diagonal is exactly the signal variance.
[[nodiscard]] inline Eigen::MatrixXd gram(const KernelSpec& k, const Points& a) {
  Eigen::MatrixXd g = gram(k, a, a);
  g.diagonal().setConstant(k.signal_variance);
  return 0.5 * (g + g.transpose());
}

/// Prior variances k(x, x); constant for stationary kernels.
[[nodiscard]] inline Eigen::VectorXd gram_diagonal(const KernelSpec& k, const Points& a) {
  return Eigen::VectorXd::Constant(a.rows(), k.signal_variance);
}

/// Column [k(x_i, z)] against a single point, exact per entry (no expansion of |x - z|^2).
[[nodiscard]] inline Eigen::VectorXd covariance_column(const KernelSpec& k, const Points& a,
                                                       const Eigen::Ref<const Eigen::VectorXd>& z) {
  Eigen::ArrayXd r2 = Eigen::ArrayXd::Zero(a.rows());
  for (Eigen::Index j = 0; j < a.cols(); ++j) r2 += ((a.col(j).array() - z(j)) * (1.0 / k.lengthscales(j))).square();
  return detail::covariance_of_sq_distances(k, r2);
}

/// Gradient of k(x, z) with respect to x.
[[nodiscard]] inline Eigen::VectorXd covariance_gradient(const KernelSpec& k,
                                                         const Eigen::Ref<const Eigen::VectorXd>& x,
                                                         const Eigen::Ref<const Eigen::VectorXd>& z) {
  const Eigen::ArrayXd l2 = k.lengthscales.array().square();
  const Eigen::ArrayXd diff = (x - z).array();
  const double r2 = (diff.square() / l2).sum();
  return (detail::gradient_weight(k, r2) * diff / l2).matrix();
}

}  // namespace cirbo
