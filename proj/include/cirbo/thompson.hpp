#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "cirbo/domain.hpp"
#include "cirbo/kernel.hpp"
#include "cirbo/rng.hpp"
#include "cirbo/sparse_gp.hpp"

namespace cirbo {

/// Random Fourier features phi(x) = amplitude * cos(W x + b) approximating the kernel prior.
struct FourierBasis {
  Eigen::MatrixXd frequencies;  // F x d
  Eigen::VectorXd phases;       // F, in [0, 2 pi)
  double amplitude = 1.0;       // sqrt(2 signal_variance / F)

  [[nodiscard]] Eigen::Index size() const { return phases.size(); }

  /// Feature matrix, Q x F.
  [[nodiscard]] Eigen::MatrixXd features(const Points& x) const {
    Eigen::MatrixXd arg = x * frequencies.transpose();
    arg.rowwise() += phases.transpose();
    return amplitude * arg.array().cos().matrix();
  }
};

/// Frequencies from the kernel's spectral density: Gaussian for squared-exponential, a
/// multivariate t with 5 degrees of freedom for Matern-5/2.
[[nodiscard]] inline FourierBasis sample_fourier_basis(const KernelSpec& kernel, Eigen::Index features,
                                                       std::uint64_t seed) {
  kernel.validate();
  if (features < 1) throw PreconditionError("feature count must be positive");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(5.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const Eigen::Index d = kernel.dim();
  FourierBasis basis;
  basis.frequencies.resize(features, d);
  basis.phases.resize(features);
  for (Eigen::Index f = 0; f < features; ++f) {
    double scale = 1.0;
    if (kernel.family == KernelFamily::matern52) scale = std::sqrt(5.0 / chi2(rng));
    for (Eigen::Index j = 0; j < d; ++j) basis.frequencies(f, j) = scale * gauss(rng) / kernel.lengthscales(j);
    basis.phases(f) = phase(rng);
  }
  basis.amplitude = std::sqrt(2.0 * kernel.signal_variance / static_cast<double>(features));
  return basis;
}

/// One posterior function draw f(x) = phi(x) w + k(x, Z) nu (prior draw plus Matheron correction).
class PathwiseSample {
 public:
  PathwiseSample(FourierBasis basis, Eigen::VectorXd weights, Eigen::VectorXd correction, KernelSpec kernel,
                 Points inducing)
      : basis_(std::move(basis)),
        weights_(std::move(weights)),
        correction_(std::move(correction)),
        kernel_(std::move(kernel)),
        inducing_(std::move(inducing)) {}

  [[nodiscard]] Eigen::VectorXd evaluate(const Points& x) const {
    return basis_.features(x) * weights_ + gram(kernel_, x, inducing_) * correction_;
  }

  [[nodiscard]] double value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    double prior = 0.0;
    for (Eigen::Index f = 0; f < basis_.size(); ++f)
      prior += weights_(f) * std::cos(basis_.frequencies.row(f).dot(x) + basis_.phases(f));
    double corr = 0.0;
    for (Eigen::Index j = 0; j < inducing_.rows(); ++j)
      corr += correction_(j) * covariance(kernel_, x, inducing_.row(j).transpose());
    return basis_.amplitude * prior + corr;
  }

  [[nodiscard]] Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    for (Eigen::Index f = 0; f < basis_.size(); ++f) {
      const double s = std::sin(basis_.frequencies.row(f).dot(x) + basis_.phases(f));
      g -= (basis_.amplitude * weights_(f) * s) * basis_.frequencies.row(f).transpose();
    }
    for (Eigen::Index j = 0; j < inducing_.rows(); ++j)
      g += correction_(j) * covariance_gradient(kernel_, x, inducing_.row(j).transpose());
    return g;
  }

  [[nodiscard]] const FourierBasis& basis() const { return basis_; }
  [[nodiscard]] const Eigen::VectorXd& weights() const { return weights_; }
  [[nodiscard]] const Eigen::VectorXd& correction() const { return correction_; }

 private:
  FourierBasis basis_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd correction_;
  KernelSpec kernel_;
  Points inducing_;
};

/// Decoupled draw from `model`: nu = Kuu^-1 (u - prior(Z)) with u ~ q(u). Evaluating the result at
/// Q points costs O(Q (F + M)).
[[nodiscard]] inline PathwiseSample draw_sample(const SparseModel& model, const FourierBasis& basis,
                                                std::uint64_t seed) {
  Rng rng = make_rng(seed, 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd w(basis.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = gauss(rng);
  Eigen::VectorXd eps(model.num_inducing());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = gauss(rng);
  const Eigen::VectorXd u = model.inducing_mean() + model.inducing_covariance_factor() * eps;
  const Eigen::VectorXd prior_at_z = basis.features(model.inducing_inputs()) * w;
  Eigen::VectorXd nu = model.solve_kuu(u - prior_at_z);
  return PathwiseSample(basis, std::move(w), std::move(nu), model.kernel(), model.inducing_inputs());
}

struct MaximizeOptions {
  Eigen::Index random_probes = 1000;
  int max_iterations = 100;
  double tolerance = 1e-8;
  int memory = 10;
};

struct MaximizeResult {
  Eigen::VectorXd x;
  double value = -std::numeric_limits<double>::infinity();
  double probe_value = -std::numeric_limits<double>::infinity();
  int iterations = 0;
};

namespace detail {

/// Projected L-BFGS ascent of `f` inside `box`. Coordinates pinned at a bound with the gradient
/// pushing outward are frozen for the step; the line search backtracks along the projected path.
template <typename Fn, typename Grad>
MaximizeResult projected_lbfgs_ascent(const Fn& f, const Grad& grad, const Box& box, Eigen::VectorXd x,
                                      const MaximizeOptions& opt) {
  MaximizeResult res;
  res.x = x;
  res.value = f(x);
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> memory;
  Eigen::VectorXd g = -grad(x);  // minimise -f
  double h = -res.value;
  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    Eigen::VectorXd free = Eigen::VectorXd::Ones(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if ((x(i) <= box.lower(i) && g(i) > 0.0) || (x(i) >= box.upper(i) && g(i) < 0.0)) free(i) = 0.0;
    }
    const Eigen::VectorXd gf = g.cwiseProduct(free);
    if (gf.norm() < 1e-12) break;

    // Two-loop recursion on the free subspace.
    Eigen::VectorXd q = gf;
    std::vector<double> alphas(memory.size());
    for (std::size_t k = memory.size(); k-- > 0;) {
      const auto& [s, y] = memory[k];
      const double rho = 1.0 / y.dot(s);
      alphas[k] = rho * s.dot(q);
      q -= alphas[k] * y;
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t k = 0; k < memory.size(); ++k) {
      const auto& [s, y] = memory[k];
      const double rho = 1.0 / y.dot(s);
      const double beta = rho * y.dot(q);
      q += (alphas[k] - beta) * s;
    }
    Eigen::VectorXd dir = -q.cwiseProduct(free);
    if (dir.dot(gf) >= 0.0) {
      dir = -gf;
      memory.clear();
    }
    if (memory.empty()) {
      // Unscaled first step: cap at a tenth of the box.
      const double cap = 0.1 * box.width().norm();
      if (dir.norm() > cap && cap > 0.0) dir *= cap / dir.norm();
    }

    double t = 1.0;
    Eigen::VectorXd x_new;
    double h_new = h;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = box.clamp(x + t * dir);
      h_new = -f(x_new);
      if (h_new <= h + 1e-4 * g.dot(x_new - x)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    const Eigen::VectorXd g_new = -grad(x_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    if (s.dot(y) > 1e-12) {
      memory.emplace_back(s, y);
      if (static_cast<int>(memory.size()) > opt.memory) memory.pop_front();
    }
    const double delta = h - h_new;
    x = x_new;
    g = g_new;
    h = h_new;
    if (std::abs(delta) < opt.tolerance) break;
  }
  res.x = x;
  res.value = -h;
  return res;
}

}  // namespace detail

/// Maximises a pathwise sample over `box`: best of `random_probes` uniform points, then bounded
/// quasi-Newton refinement with analytic gradients. Never returns worse than the best probe.
[[nodiscard]] inline MaximizeResult maximize_sample(const PathwiseSample& sample, const Box& box,
                                                    std::uint64_t seed, const MaximizeOptions& opt = {}) {
  box.validate();
  Rng rng = make_rng(seed, 2);
  const Points probes = box.sample_uniform(std::max<Eigen::Index>(opt.random_probes, 1), rng);
  const Eigen::VectorXd values = sample.evaluate(probes);
  Eigen::Index best = 0;
  values.maxCoeff(&best);
  MaximizeResult res;
  res.x = probes.row(best).transpose();
  res.value = values(best);
  res.probe_value = values(best);

  MaximizeResult local = detail::projected_lbfgs_ascent(
      [&](const Eigen::VectorXd& x) { return sample.value(x); },
      [&](const Eigen::VectorXd& x) { return sample.gradient(x); }, box, res.x, opt);
  if (std::isfinite(local.value) && local.value >= res.value && box.contains(local.x)) {
    res.x = local.x;
    res.value = local.value;
    res.iterations = local.iterations;
  }
  return res;
}

struct BatchOptions {
  Eigen::Index features = 100;
  /// One basis shared by the whole batch instead of a fresh basis per sample.
  bool share_basis = false;
  MaximizeOptions maximize;
};

/// B independent Thompson draws from `model`, each maximised over `box`. Points that coincide
/// within 1e-9 are nudged by uniform noise of width 1e-6 of the box.
[[nodiscard]] inline Points propose_batch(const SparseModel& model, const Box& box, Eigen::Index batch,
                                          std::uint64_t seed, const BatchOptions& opt = {}) {
  if (batch < 1) throw PreconditionError("batch size must be at least 1");
  box.validate();
  Points out(batch, box.dim());
  const FourierBasis shared = sample_fourier_basis(model.kernel(), opt.features, derive_seed(seed, 0));
  for (Eigen::Index b = 0; b < batch; ++b) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(b) + 1);
    const FourierBasis basis = opt.share_basis ? shared : sample_fourier_basis(model.kernel(), opt.features, s);
    const PathwiseSample sample = draw_sample(model, basis, s);
    out.row(b) = maximize_sample(sample, box, s, opt.maximize).x.transpose();
  }
  Rng rng = make_rng(seed, 99);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const Eigen::VectorXd width = box.width();
  for (Eigen::Index b = 1; b < batch; ++b) {
    for (Eigen::Index a = 0; a < b; ++a) {
      if ((out.row(b) - out.row(a)).cwiseAbs().maxCoeff() <= 1e-9) {
        for (Eigen::Index j = 0; j < box.dim(); ++j) out(b, j) += 1e-6 * width(j) * u(rng);
        out.row(b) = box.clamp(out.row(b).transpose()).transpose();
        break;
      }
    }
  }
  return out;
}

}  // namespace cirbo
