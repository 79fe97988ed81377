#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "cirbo/domain.hpp"
#include "cirbo/kernel.hpp"
#include "cirbo/linalg.hpp"

namespace cirbo {

/// Full-rank GP posterior, O(N^3) to build. Predictions are for the latent f.
class ExactPosterior {
 public:
  ExactPosterior(Dataset data, KernelSpec kernel, const JitterPolicy& policy = {})
      : data_(std::move(data)), kernel_(std::move(kernel)) {
    kernel_.validate();
    data_.validate();
    detail::check_points(kernel_, data_.inputs, "dataset inputs");
    Eigen::MatrixXd k = gram(kernel_, data_.inputs);
    k.diagonal().array() += kernel_.noise_variance;
    chol_ = jittered_cholesky(k, kernel_.signal_variance, policy);
    alpha_ = chol_.llt.solve(data_.targets);
  }

  [[nodiscard]] const KernelSpec& kernel() const { return kernel_; }
  [[nodiscard]] const Dataset& data() const { return data_; }
  [[nodiscard]] double jitter() const { return chol_.jitter; }

  [[nodiscard]] Eigen::VectorXd mean(const Points& query) const {
    return gram(kernel_, query, data_.inputs) * alpha_;
  }

  [[nodiscard]] Eigen::VectorXd variance(const Points& query) const {
    const Eigen::MatrixXd kxq = gram(kernel_, data_.inputs, query);
    const Eigen::MatrixXd v = chol_.llt.matrixL().solve(kxq);
    Eigen::VectorXd var = gram_diagonal(kernel_, query) - v.colwise().squaredNorm().transpose();
    return var.cwiseMax(0.0);
  }

  [[nodiscard]] Eigen::MatrixXd covariance(const Points& query) const {
    const Eigen::MatrixXd kxq = gram(kernel_, data_.inputs, query);
    const Eigen::MatrixXd v = chol_.llt.matrixL().solve(kxq);
    return gram(kernel_, query) - v.transpose() * v;
  }

  /// log p(y) under the (jittered) Gaussian marginal.
  [[nodiscard]] double log_marginal_likelihood() const {
    const double n = static_cast<double>(data_.size());
    return -0.5 * data_.targets.dot(alpha_) - 0.5 * chol_.log_det() -
           0.5 * n * std::log(2.0 * std::numbers::pi);
  }

 private:
  Dataset data_;
  KernelSpec kernel_;
  JitteredCholesky chol_;
  Eigen::VectorXd alpha_;
};

[[nodiscard]] inline ExactPosterior exact_posterior(const Dataset& data, const KernelSpec& kernel) {
  return ExactPosterior(data, kernel);
}

}  // namespace cirbo
