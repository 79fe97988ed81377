#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "cirbo/domain.hpp"
#include "cirbo/errors.hpp"
#include "cirbo/kernel.hpp"
#include "cirbo/sparse_gp.hpp"

namespace cirbo {

/// Log-space box for the simplex search.
struct HyperparameterBounds {
  double min_lengthscale = 1e-4;
  double max_lengthscale = 1e4;
  double min_signal_variance = 1e-8;
  double max_signal_variance = 1e8;
  double min_noise_variance = 1e-10;
  double max_noise_variance = 1e8;
};

namespace detail {

[[nodiscard]] inline Eigen::VectorXd to_log_params(const KernelSpec& k) {
  const Eigen::Index d = k.dim();
  Eigen::VectorXd theta(d + 2);
  theta.head(d) = k.lengthscales.array().log().matrix();
  theta(d) = std::log(k.signal_variance);
  theta(d + 1) = std::log(std::max(k.noise_variance, 1e-300));
  return theta;
}

[[nodiscard]] inline KernelSpec from_log_params(const KernelSpec& like, const Eigen::VectorXd& theta,
                                                const HyperparameterBounds& b) {
  const Eigen::Index d = like.dim();
  KernelSpec k = like;
  for (Eigen::Index i = 0; i < d; ++i) {
    k.lengthscales(i) = std::clamp(std::exp(theta(i)), b.min_lengthscale, b.max_lengthscale);
  }
  k.signal_variance = std::clamp(std::exp(theta(d)), b.min_signal_variance, b.max_signal_variance);
  k.noise_variance = std::clamp(std::exp(theta(d + 1)), b.min_noise_variance, b.max_noise_variance);
  return k;
}

struct SimplexState {
  const Dataset* data = nullptr;
  const Points* inducing = nullptr;
  const KernelSpec* like = nullptr;
  const HyperparameterBounds* bounds = nullptr;
  int evaluations = 0;
  int budget = 0;
  double best_elbo = -std::numeric_limits<double>::infinity();
  KernelSpec best;
};

inline double negative_elbo(const gsl_vector* v, void* params) {
  auto* st = static_cast<SimplexState*>(params);
  if (st->evaluations >= st->budget) return std::numeric_limits<double>::max();
  ++st->evaluations;
  Eigen::VectorXd theta(static_cast<Eigen::Index>(v->size));
  for (std::size_t i = 0; i < v->size; ++i) theta(static_cast<Eigen::Index>(i)) = gsl_vector_get(v, i);
  const KernelSpec k = from_log_params(*st->like, theta, *st->bounds);
  double elbo = -std::numeric_limits<double>::infinity();
  try {
    elbo = sparse_fit(*st->data, *st->inducing, k).elbo();
  } catch (const SingularModelError&) {
    return std::numeric_limits<double>::max();
  }
  if (!std::isfinite(elbo)) return std::numeric_limits<double>::max();
  if (elbo > st->best_elbo) {
    st->best_elbo = elbo;
    st->best = k;
  }
  return -elbo;
}

struct GslVectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct GslMinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};

}  // namespace detail

/// Maximises the collapsed bound over {lengthscales, signal variance, noise variance} with a
/// Nelder-Mead simplex in log space. Three starts scale the initial lengthscales by 0.5, 1 and 2;
/// `budget` counts bound evaluations including the one at `init`. The result never has a lower
/// bound than `init`, and the search is deterministic.
[[nodiscard]] inline KernelSpec fit_hyperparameters(const Dataset& data, const Points& inducing,
                                                    const KernelSpec& init, int budget,
                                                    const HyperparameterBounds& bounds = {}) {
  if (budget < 1) throw PreconditionError("hyperparameter budget must be at least 1");
  init.validate();

  detail::SimplexState state;
  state.data = &data;
  state.inducing = &inducing;
  state.like = &init;
  state.bounds = &bounds;
  state.budget = 1;
  state.best = init;
  {
    // Baseline; errors here are real errors, not skipped candidates.
    state.best_elbo = sparse_fit(data, inducing, init).elbo();
    state.evaluations = 1;
  }
  if (budget == 1) return init;

  gsl_set_error_handler_off();
  const std::array<double, 3> scalings = {1.0, 0.5, 2.0};
  const int remaining = budget - 1;
  const std::size_t n = static_cast<std::size_t>(init.dim() + 2);
  for (std::size_t s = 0; s < scalings.size(); ++s) {
    const int share = remaining / 3 + (static_cast<int>(s) < remaining % 3 ? 1 : 0);
    if (share <= 0) continue;
    state.budget = state.evaluations + share;

    KernelSpec start = init;
    start.lengthscales *= scalings[s];
    Eigen::VectorXd theta0 = detail::to_log_params(start);
    theta0(init.dim() + 1) = std::max(theta0(init.dim() + 1), std::log(bounds.min_noise_variance));

    std::unique_ptr<gsl_vector, detail::GslVectorDeleter> x(gsl_vector_alloc(n));
    std::unique_ptr<gsl_vector, detail::GslVectorDeleter> step(gsl_vector_alloc(n));
    for (std::size_t i = 0; i < n; ++i) {
      gsl_vector_set(x.get(), i, theta0(static_cast<Eigen::Index>(i)));
      gsl_vector_set(step.get(), i, 0.5);
    }
    gsl_multimin_function fn{&detail::negative_elbo, n, &state};
    std::unique_ptr<gsl_multimin_fminimizer, detail::GslMinimizerDeleter> minimizer(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
    if (gsl_multimin_fminimizer_set(minimizer.get(), &fn, x.get(), step.get()) != GSL_SUCCESS) continue;
    while (state.evaluations < state.budget) {
      if (gsl_multimin_fminimizer_iterate(minimizer.get()) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(minimizer.get()), 1e-6) == GSL_SUCCESS) break;
    }
  }
  return state.best;
}

}  // namespace cirbo
