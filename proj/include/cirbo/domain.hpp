#pragma once

#include <string>

#include <Eigen/Dense>

#include "cirbo/errors.hpp"
#include "cirbo/kernel.hpp"
#include "cirbo/rng.hpp"

namespace cirbo {

/// Axis-aligned search box.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  [[nodiscard]] Eigen::Index dim() const { return lower.size(); }
  [[nodiscard]] Eigen::VectorXd width() const { return upper - lower; }

  [[nodiscard]] static Box unit(Eigen::Index dim) {
    return Box{Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
  }
  [[nodiscard]] static Box cube(Eigen::Index dim, double lo, double hi) {
    return Box{Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi)};
  }

  void validate() const {
    if (lower.size() == 0 || lower.size() != upper.size())
      throw PreconditionError("box bounds must be non-empty and of equal length");
    if (!lower.allFinite() || !upper.allFinite()) throw PreconditionError("box bounds must be finite");
    if ((upper.array() < lower.array()).any()) throw PreconditionError("box upper bound below lower bound");
  }

  [[nodiscard]] bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol = 0.0) const {
    return x.size() == dim() && (x.array() >= lower.array() - tol).all() &&
           (x.array() <= upper.array() + tol).all();
  }

  [[nodiscard]] Eigen::VectorXd clamp(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
  }

  /// `n` points drawn uniformly in the box.
  [[nodiscard]] Points sample_uniform(Eigen::Index n, Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Points out(n, dim());
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < dim(); ++j) {
        out(i, j) = lower(j) + (upper(j) - lower(j)) * u(rng);
      }
    }
    return out;
  }

  /// First `n` points of the Halton sequence mapped into the box.
  [[nodiscard]] Points halton(Eigen::Index n, Eigen::Index skip = 1) const {
    static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
    if (dim() > static_cast<Eigen::Index>(std::size(kPrimes)))
      throw PreconditionError("halton sequence supports at most 16 dimensions");
    Points out(n, dim());
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < dim(); ++j) {
        const int base = kPrimes[j];
        double f = 1.0, r = 0.0;
        for (long idx = static_cast<long>(i + skip); idx > 0; idx /= base) {
          f /= base;
          r += f * static_cast<double>(idx % base);
        }
        out(i, j) = lower(j) + (upper(j) - lower(j)) * r;
      }
    }
    return out;
  }
};

/// Observations (inputs one per row, targets) used to condition a GP.
struct Dataset {
  Points inputs;
  Eigen::VectorXd targets;

  [[nodiscard]] Eigen::Index size() const { return inputs.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return inputs.cols(); }

  void validate() const {
    if (inputs.rows() < 1) throw PreconditionError("dataset must contain at least one observation");
    if (inputs.rows() != targets.size())
      throw PreconditionError("dataset inputs and targets disagree in length");
    if (!inputs.allFinite() || !targets.allFinite())
      throw PreconditionError("dataset contains non-finite values");
  }

  void validate(const Box& box) const {
    validate();
    for (Eigen::Index i = 0; i < size(); ++i) {
      if (!box.contains(inputs.row(i).transpose(), 1e-12))
        throw PreconditionError("dataset row " + std::to_string(i) + " lies outside the domain");
    }
  }
};

}  // namespace cirbo
