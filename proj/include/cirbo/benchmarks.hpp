#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cirbo/domain.hpp"
#include "cirbo/errors.hpp"
#include "cirbo/rng.hpp"

namespace cirbo {

/// Synthetic objective in the maximisation convention (standard minimisation forms negated).
struct ObjectiveSpec {
  std::string name;
  Eigen::Index dim = 0;
  Box box;
  double noise_variance = 0.0;
  double optimum_value = 0.0;
  Eigen::VectorXd optimiser;
  std::function<double(const Eigen::VectorXd&)> fn;
};

namespace bench {

[[nodiscard]] inline double hartmann6(const Eigen::VectorXd& x) {
  static constexpr double alpha[4] = {1.0, 1.2, 3.0, 3.2};
  static constexpr double a[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                                     {0.05, 10, 17, 0.1, 8, 14},
                                     {3, 3.5, 1.7, 10, 17, 8},
                                     {17, 8, 0.05, 10, 0.1, 14}};
  static constexpr double p[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                                     {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                                     {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                                     {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (int j = 0; j < 6; ++j) inner += a[i][j] * (x(j) - p[i][j]) * (x(j) - p[i][j]);
    total += alpha[i] * std::exp(-inner);
  }
  return total;
}

/// Ten-term Shekel in four dimensions.
[[nodiscard]] inline double shekel4(const Eigen::VectorXd& x) {
  static constexpr double beta[10] = {0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5};
  static constexpr double c[4][10] = {{4, 1, 8, 6, 3, 2, 5, 8, 6, 7},
                                      {4, 1, 8, 6, 7, 9, 3, 1, 2, 3.6},
                                      {4, 1, 8, 6, 3, 2, 5, 8, 6, 7},
                                      {4, 1, 8, 6, 7, 9, 3, 1, 2, 3.6}};
  double total = 0.0;
  for (int i = 0; i < 10; ++i) {
    double inner = beta[i];
    for (int j = 0; j < 4; ++j) inner += (x(j) - c[j][i]) * (x(j) - c[j][i]);
    total += 1.0 / inner;
  }
  return total;
}

/// Michalewicz with steepness m = 10.
[[nodiscard]] inline double michalewicz(const Eigen::VectorXd& x) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double s = std::sin(static_cast<double>(i + 1) * x(i) * x(i) / std::numbers::pi);
    total += std::sin(x(i)) * std::pow(s, 20);
  }
  return total;
}

/// Standardised log Goldstein-Price on the unit square, negated.
[[nodiscard]] inline double log_goldstein_price(const Eigen::VectorXd& x) {
  const double x1 = 4.0 * x(0) - 2.0;
  const double x2 = 4.0 * x(1) - 2.0;
  const double a = 1.0 + (x1 + x2 + 1.0) * (x1 + x2 + 1.0) *
                             (19.0 - 14.0 * x1 + 3.0 * x1 * x1 - 14.0 * x2 + 6.0 * x1 * x2 + 3.0 * x2 * x2);
  const double b = 30.0 + (2.0 * x1 - 3.0 * x2) * (2.0 * x1 - 3.0 * x2) *
                              (18.0 - 32.0 * x1 + 12.0 * x1 * x1 + 48.0 * x2 - 36.0 * x1 * x2 + 27.0 * x2 * x2);
  return -(std::log(a * b) - 8.693) / 2.427;
}

[[nodiscard]] inline double ackley(const Eigen::VectorXd& x) {
  const double d = static_cast<double>(x.size());
  const double sq = x.squaredNorm() / d;
  const double cs = (2.0 * std::numbers::pi * x.array()).cos().sum() / d;
  return 20.0 * std::exp(-0.2 * std::sqrt(sq)) + std::exp(cs) - 20.0 - std::numbers::e;
}

/// Smooth 1-d toy: 1 - 4 (x - 0.3)^2 on [0, 1].
[[nodiscard]] inline double toy1d(const Eigen::VectorXd& x) { return 1.0 - 4.0 * (x(0) - 0.3) * (x(0) - 0.3); }

}  // namespace bench

[[nodiscard]] inline std::vector<std::string> objective_names() {
  return {"hartmann6", "shekel4", "michalewicz5", "log-goldstein-price", "ackley4", "toy1d"};
}

/// Looks up a benchmark by name. Optimisers were located by bounded multi-start local search.
[[nodiscard]] inline ObjectiveSpec objective(std::string_view name) {
  ObjectiveSpec o;
  o.name = std::string(name);
  auto vec = [](std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
  };
  if (name == "hartmann6") {
    o.dim = 6;
    o.box = Box::unit(6);
    o.noise_variance = 0.5;
    o.optimiser = vec({0.20168950968761765, 0.15001069413863433, 0.47687396963094986, 0.27533242916768874,
                       0.31165161370991157, 0.6573005333899428});
    o.fn = bench::hartmann6;
  } else if (name == "shekel4") {
    o.dim = 4;
    o.box = Box::cube(4, 0.0, 10.0);
    o.noise_variance = 0.1;
    o.optimiser = vec({4.000746862362409, 3.999509474297198, 4.000746862362409, 3.999509474297198});
    o.fn = bench::shekel4;
  } else if (name == "michalewicz5") {
    o.dim = 5;
    o.box = Box::cube(5, 0.0, std::numbers::pi);
    o.noise_variance = 0.1;
    o.optimiser = vec({2.2029055187406277, 1.5707963236253708, 1.2849915656456956, 1.9230584654794636,
                       1.7204697677620535});
    o.fn = bench::michalewicz;
  } else if (name == "log-goldstein-price") {
    o.dim = 2;
    o.box = Box::unit(2);
    o.noise_variance = 0.0;
    o.optimiser = vec({0.5, 0.25});
    o.fn = bench::log_goldstein_price;
  } else if (name == "ackley4") {
    o.dim = 4;
    o.box = Box::cube(4, -32.768, 32.768);
    o.noise_variance = 0.1;
    o.optimiser = Eigen::VectorXd::Zero(4);
    o.fn = bench::ackley;
  } else if (name == "toy1d") {
    o.dim = 1;
    o.box = Box::unit(1);
    o.noise_variance = 0.01;
    o.optimiser = vec({0.3});
    o.fn = bench::toy1d;
  } else {
    throw PreconditionError("unknown objective '" + std::string(name) + "'");
  }
  o.optimum_value = o.fn(o.optimiser);
  return o;
}

/// Noise-free value; rejects points outside the box.
[[nodiscard]] inline double evaluate(const ObjectiveSpec& o, const Eigen::VectorXd& x) {
  if (!o.box.contains(x, 1e-12)) throw PreconditionError("point lies outside the domain of " + o.name);
  return o.fn(x);
}

[[nodiscard]] inline double evaluate(std::string_view name, const Eigen::VectorXd& x) {
  return evaluate(objective(name), x);
}

/// evaluate(x) plus N(0, noise_variance) noise drawn from `seed`.
[[nodiscard]] inline double noisy_evaluate(const ObjectiveSpec& o, const Eigen::VectorXd& x, std::uint64_t seed) {
  const double clean = evaluate(o, x);
  if (o.noise_variance == 0.0) return clean;
  Rng rng = make_rng(seed, 5);
  std::normal_distribution<double> noise(0.0, std::sqrt(o.noise_variance));
  return clean + noise(rng);
}

[[nodiscard]] inline double noisy_evaluate(std::string_view name, const Eigen::VectorXd& x, std::uint64_t seed) {
  return noisy_evaluate(objective(name), x, seed);
}

}  // namespace cirbo
