#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "cirbo/domain.hpp"
#include "cirbo/kernel.hpp"
#include "cirbo/linalg.hpp"

namespace cirbo {

/// Lower limit on the likelihood noise used by the collapsed bound, relative to the
/// signal variance. The bound divides by the noise, so exactly zero is not representable.
inline constexpr double kMinNoiseRatio = 1e-8;

/// Sparse GP with the variationally optimal (collapsed) inducing distribution.
///
/// Holds L = chol(Kuu + jitter), LB = chol(I + A A^T) with A = L^-1 Kuf / sigma, and
/// c = LB^-1 A y / sigma. Prediction at Q points is O(Q M^2); building is O(N M^2).
class SparseModel {
 public:
  [[nodiscard]] const KernelSpec& kernel() const { return kernel_; }
  [[nodiscard]] const Points& inducing_inputs() const { return inducing_; }
  [[nodiscard]] Eigen::Index num_inducing() const { return inducing_.rows(); }
  [[nodiscard]] Eigen::Index num_data() const { return num_data_; }
  [[nodiscard]] double elbo() const { return elbo_; }
  [[nodiscard]] double jitter() const { return jitter_; }
  [[nodiscard]] double effective_noise() const { return noise_; }

  [[nodiscard]] Eigen::VectorXd mean(const Points& query) const {
    const Eigen::MatrixXd tmp2 = projected(query);
    return tmp2.transpose() * c_;
  }

  [[nodiscard]] Eigen::VectorXd variance(const Points& query) const {
    const Eigen::MatrixXd kuq = gram(kernel_, inducing_, query);
    const Eigen::MatrixXd tmp1 = l_.triangularView<Eigen::Lower>().solve(kuq);
    const Eigen::MatrixXd tmp2 = lb_.triangularView<Eigen::Lower>().solve(tmp1);
    Eigen::VectorXd var = gram_diagonal(kernel_, query) - tmp1.colwise().squaredNorm().transpose() +
                          tmp2.colwise().squaredNorm().transpose();
    return var.cwiseMax(0.0);
  }

  struct Moments {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
  };

  /// Mean and variance sharing one cross-covariance evaluation.
  [[nodiscard]] Moments predict(const Points& query) const {
    const Eigen::MatrixXd kuq = gram(kernel_, inducing_, query);
    const Eigen::MatrixXd tmp1 = l_.triangularView<Eigen::Lower>().solve(kuq);
    const Eigen::MatrixXd tmp2 = lb_.triangularView<Eigen::Lower>().solve(tmp1);
    Moments m;
    m.mean = tmp2.transpose() * c_;
    m.variance = (gram_diagonal(kernel_, query) - tmp1.colwise().squaredNorm().transpose() +
                  tmp2.colwise().squaredNorm().transpose())
                     .cwiseMax(0.0);
    return m;
  }

  [[nodiscard]] Eigen::MatrixXd covariance(const Points& query) const {
    const Eigen::MatrixXd kuq = gram(kernel_, inducing_, query);
    const Eigen::MatrixXd tmp1 = l_.triangularView<Eigen::Lower>().solve(kuq);
    const Eigen::MatrixXd tmp2 = lb_.triangularView<Eigen::Lower>().solve(tmp1);
    return gram(kernel_, query) - tmp1.transpose() * tmp1 + tmp2.transpose() * tmp2;
  }

  /// Posterior q(u) = N(m_u, R R^T) over inducing outputs: m_u = L LB^-T c, R = L LB^-T.
  [[nodiscard]] Eigen::VectorXd inducing_mean() const {
    return l_ * lb_.transpose().triangularView<Eigen::Upper>().solve(c_);
  }
  [[nodiscard]] Eigen::MatrixXd inducing_covariance_factor() const {
    const Eigen::MatrixXd lbt_inv = lb_.transpose().triangularView<Eigen::Upper>().solve(
        Eigen::MatrixXd::Identity(lb_.rows(), lb_.cols()));
    return l_ * lbt_inv;
  }

  /// Solves (Kuu + jitter) x = rhs with the cached factor.
  [[nodiscard]] Eigen::VectorXd solve_kuu(const Eigen::VectorXd& rhs) const {
    const Eigen::VectorXd t = l_.triangularView<Eigen::Lower>().solve(rhs);
    return l_.transpose().triangularView<Eigen::Upper>().solve(t);
  }

  /// A model whose q(u) equals the prior p(u): no data has been seen.
  [[nodiscard]] static SparseModel prior(const KernelSpec& kernel, const Points& inducing,
                                         const JitterPolicy& policy = {}) {
    kernel.validate();
    detail::check_points(kernel, inducing, "inducing inputs");
    if (inducing.rows() < 1) throw PreconditionError("at least one inducing input is required");
    SparseModel m;
    m.kernel_ = kernel;
    m.inducing_ = inducing;
    m.num_data_ = 0;
    auto chol = jittered_cholesky(gram(kernel, inducing), kernel.signal_variance, policy);
    m.l_ = chol.lower();
    m.jitter_ = chol.jitter;
    m.lb_ = Eigen::MatrixXd::Identity(inducing.rows(), inducing.rows());
    m.c_ = Eigen::VectorXd::Zero(inducing.rows());
    m.noise_ = std::max(kernel.noise_variance, kMinNoiseRatio * kernel.signal_variance);
    m.elbo_ = 0.0;
    return m;
  }

 private:
  friend SparseModel sparse_fit(const Dataset&, const Points&, const KernelSpec&, const JitterPolicy&);

  [[nodiscard]] Eigen::MatrixXd projected(const Points& query) const {
    const Eigen::MatrixXd kuq = gram(kernel_, inducing_, query);
    const Eigen::MatrixXd tmp1 = l_.triangularView<Eigen::Lower>().solve(kuq);
    return lb_.triangularView<Eigen::Lower>().solve(tmp1);
  }

  KernelSpec kernel_;
  Points inducing_;
  Eigen::Index num_data_ = 0;
  Eigen::MatrixXd l_;
  Eigen::MatrixXd lb_;
  Eigen::VectorXd c_;
  double jitter_ = 0.0;
  double noise_ = 0.0;
  double elbo_ = 0.0;
};

/// Fits the collapsed sparse GP of `data` on inducing inputs `inducing` and evaluates its
/// evidence lower bound. M > N is allowed; redundant inducing points are absorbed by jitter.
[[nodiscard]] inline SparseModel sparse_fit(const Dataset& data, const Points& inducing,
                                            const KernelSpec& kernel, const JitterPolicy& policy = {}) {
  kernel.validate();
  data.validate();
  detail::check_points(kernel, data.inputs, "dataset inputs");
  detail::check_points(kernel, inducing, "inducing inputs");
  if (inducing.rows() < 1) throw PreconditionError("at least one inducing input is required");

  const auto n = static_cast<double>(data.size());
  const Eigen::Index m = inducing.rows();
  const double noise = std::max(kernel.noise_variance, kMinNoiseRatio * kernel.signal_variance);
  const double sigma = std::sqrt(noise);

  SparseModel model;
  model.kernel_ = kernel;
  model.inducing_ = inducing;
  model.num_data_ = data.size();
  model.noise_ = noise;

  auto chol = jittered_cholesky(gram(kernel, inducing), kernel.signal_variance, policy);
  model.l_ = chol.lower();
  model.jitter_ = chol.jitter;

  const Eigen::MatrixXd kuf = gram(kernel, inducing, data.inputs);
  const Eigen::MatrixXd a = model.l_.triangularView<Eigen::Lower>().solve(kuf) / sigma;
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(m, m);
  b.selfadjointView<Eigen::Lower>().rankUpdate(a);
  b = b.selfadjointView<Eigen::Lower>();
  Eigen::LLT<Eigen::MatrixXd> lb(b);
  if (lb.info() != Eigen::Success) throw SingularModelError("factorisation of I + A A^T failed");
  model.lb_ = lb.matrixL();
  model.c_ = model.lb_.triangularView<Eigen::Lower>().solve(a * data.targets) / sigma;

  const double trace_aat = a.squaredNorm();
  const double kff_trace = gram_diagonal(kernel, data.inputs).sum();
  model.elbo_ = -0.5 * n * std::log(2.0 * std::numbers::pi) -
                model.lb_.diagonal().array().log().sum() - 0.5 * n * std::log(noise) -
                0.5 * data.targets.squaredNorm() / noise + 0.5 * model.c_.squaredNorm() -
                0.5 * kff_trace / noise + 0.5 * trace_aat;
  return model;
}

}  // namespace cirbo
