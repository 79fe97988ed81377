#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "cirbo/errors.hpp"

namespace cirbo {

/// Jitter schedule for Gram factorisations, relative to the signal variance.
struct JitterPolicy {
  double initial = 1e-10;
  double maximum = 1e-4;
  double growth = 10.0;
};

/// Lower Cholesky factor of a jittered symmetric matrix, with the jitter that made it succeed.
struct JitteredCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;

  [[nodiscard]] Eigen::MatrixXd lower() const { return llt.matrixL(); }

  [[nodiscard]] double log_det() const {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
};

/// Factorises `a + jitter * I`, escalating the jitter until the factorisation succeeds.
/// `scale` is the signal variance the policy is relative to.
[[nodiscard]] inline JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& a, double scale,
                                                        const JitterPolicy& policy = {}) {
  JitteredCholesky out;
  for (double rel = policy.initial; rel <= policy.maximum * (1.0 + 1e-9); rel *= policy.growth) {
    const double jitter = rel * scale;
    Eigen::MatrixXd jittered = a;
    jittered.diagonal().array() += jitter;
    out.llt.compute(jittered);
    if (out.llt.info() == Eigen::Success &&
        (out.llt.matrixLLT().diagonal().array() > 0.0).all() &&
        out.llt.matrixLLT().diagonal().allFinite()) {
      out.jitter = jitter;
      return out;
    }
  }
  throw SingularModelError("Cholesky factorisation failed after maximum jitter escalation");
}

/// log|a| via a jitter-free Cholesky; -inf when `a` is not numerically positive definite.
[[nodiscard]] inline double log_det_spd(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::ArrayXd d = llt.matrixLLT().diagonal().array();
  if (!(d > 0.0).all()) return -std::numeric_limits<double>::infinity();
  return 2.0 * d.log().sum();
}

}  // namespace cirbo
