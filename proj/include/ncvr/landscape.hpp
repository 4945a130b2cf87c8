#pragma once

// Monte Carlo estimates of how closely the empirical gradient and Hessian
// track their population counterparts over a ball, and of the curvature
// constants (directional-gradient and Hessian lower bounds) around the
// ground truth. Suprema and infima are taken over finite probe sets, so
// they bound the true values from one side only.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ncvr/datagen.hpp"
#include "ncvr/dataset.hpp"
#include "ncvr/errors.hpp"
#include "ncvr/linalg.hpp"
#include "ncvr/losses.hpp"
#include "ncvr/rng.hpp"
#include "ncvr/types.hpp"

namespace ncvr {

/// Radial shells times random directions inside B(0, r).
struct ProbeGrid {
  std::vector<double> radii;
  int directions = 4;
  std::uint64_t seed = 0;

  void validate(double r) const {
    if (radii.empty() || directions < 1) throw InvalidParameter("ProbeGrid: empty grid");
    for (const double rad : radii) {
      if (!(rad > 0.0) || rad > r) {
        throw InvalidParameter("ProbeGrid: radius " + std::to_string(rad) + " outside (0, " + std::to_string(r) + "]");
      }
    }
  }

  std::vector<Vector> points(Index p) const {
    Rng rng{derive_seed(seed, 0x9d)};
    std::vector<Vector> out;
    out.reserve(radii.size() * static_cast<std::size_t>(directions));
    for (const double rad : radii) {
      for (int k = 0; k < directions; ++k) {
        Vector dir = standard_normal_vector(p, rng);
        while (dir.norm() == 0.0) dir = standard_normal_vector(p, rng);
        out.push_back(rad / dir.norm() * dir);
      }
    }
    return out;
  }
};

/// Population stand-in: a large sample from the same generator.
struct PopulationOracle {
  SyntheticSpec spec;
  Index n_pop = 100000;
  std::uint64_t seed = 0;
};

/// The materialized Monte Carlo sample of a PopulationOracle.
class MonteCarloPopulation {
 public:
  explicit MonteCarloPopulation(const PopulationOracle& oracle)
      : oracle_(oracle), data_(make_synthetic(oracle.spec, oracle.n_pop, oracle.seed)) {}

  const PopulationOracle& oracle() const noexcept { return oracle_; }
  const DataSet& data() const noexcept { return data_; }
  Index size() const noexcept { return data_.size(); }

 private:
  PopulationOracle oracle_;
  DataSet data_;
};

template <MarginLoss L>
Vector population_gradient_mc(const L& loss, const VectorRef& theta, const MonteCarloPopulation& pop) {
  return batch_gradient(loss, theta, pop.data());
}

/// Norm of the Monte Carlo standard error of the population gradient
/// estimate, from the per-coordinate sample variance of sample gradients.
template <MarginLoss L>
double population_gradient_stderr(const L& loss, const VectorRef& theta, const MonteCarloPopulation& pop) {
  const DataSet& d = pop.data();
  const Vector mean = batch_gradient(loss, theta, d);
  Vector sq = Vector::Zero(d.dim());
  for (Index i = 0; i < d.size(); ++i) {
    const auto x = d.x(i);
    sq += (loss.slope(theta.dot(x), d.y(i)) * x - mean).cwiseAbs2();
  }
  const double n = static_cast<double>(d.size());
  return std::sqrt(sq.sum() / (n - 1.0) / n);
}

/// max over probes of ||grad R_n(theta) - grad R_pop(theta)||.
template <MarginLoss L>
double grad_deviation_sup(const L& loss, const DataSet& data, const MonteCarloPopulation& pop,
                          std::span<const Vector> probes) {
  if (probes.empty()) throw InvalidParameter("grad_deviation_sup: no probes");
  double best = 0.0;
  for (const Vector& theta : probes) {
    best = std::max(best, (batch_gradient(loss, theta, data) - population_gradient_mc(loss, theta, pop)).norm());
  }
  return best;
}

/// max over probes of ||H_n(theta) - H_pop(theta)||_op.
template <MarginLoss L>
double hess_deviation_sup(const L& loss, const DataSet& data, const MonteCarloPopulation& pop,
                          std::span<const Vector> probes) {
  if (probes.empty()) throw InvalidParameter("hess_deviation_sup: no probes");
  double best = 0.0;
  for (const Vector& theta : probes) {
    const Matrix diff = batch_hessian(loss, theta, data) - batch_hessian(loss, theta, pop.data());
    best = std::max(best, operator_norm(diff).value);
  }
  return best;
}

/// min over probes of <theta - theta*, grad R(theta)> / ||theta - theta*||^2.
/// Probes coinciding with theta* are skipped. May be negative.
template <MarginLoss L>
double mu0_estimate(const L& loss, const MonteCarloPopulation& pop, const VectorRef& theta_star,
                    std::span<const Vector> probes) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vector& theta : probes) {
    const Vector diff = theta - theta_star;
    const double d2 = diff.squaredNorm();
    if (d2 < 1e-24) continue;
    best = std::min(best, diff.dot(population_gradient_mc(loss, theta, pop)) / d2);
  }
  if (!std::isfinite(best)) throw InvalidParameter("mu0_estimate: every probe coincides with theta*");
  return best;
}

/// min over probes in B(theta*, radius) of lambda_min of the population
/// Hessian. The first probe is theta* itself; the rest are uniform in the ball.
template <MarginLoss L>
double kappa0_estimate(const L& loss, const MonteCarloPopulation& pop, const VectorRef& theta_star, double radius,
                       int probes, std::uint64_t seed) {
  if (!(radius > 0.0)) throw InvalidParameter("kappa0_estimate: radius must be positive");
  if (probes < 1) throw InvalidParameter("kappa0_estimate: probes must be >= 1");
  if (theta_star.size() > kDenseHessianLimit) throw UnsupportedSize("kappa0_estimate: p exceeds dense limit");
  Rng rng{derive_seed(seed, 0x4a)};
  const Vector center = theta_star;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < probes; ++k) {
    const Vector theta = k == 0 ? center : uniform_in_ball(center, radius, rng);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(batch_hessian(loss, theta, pop.data()), Eigen::EigenvaluesOnly);
    best = std::min(best, eig.eigenvalues()[0]);
  }
  return best;
}

struct LandscapeOptions {
  double radius = 3.0;  ///< ball B(0, r) probed for the deviation suprema
  ProbeGrid grid{{1.0, 2.0, 3.0}, 4, 0};
  Index n_pop = 100000;
  std::uint64_t population_seed = 1;
  double kappa_radius = 0.25;
  int kappa_probes = 8;
  std::uint64_t kappa_seed = 2;
  bool hessian = true;
};

struct LandscapeReport {
  double grad_dev_sup = 0.0;
  double hess_dev_sup = 0.0;
  double mu0_hat = 0.0;
  double kappa0_hat = 0.0;
  /// Largest MC standard error of the population gradient over the probes.
  double grad_mc_stderr = 0.0;
  Index n = 0;
  Index p = 0;
  Index n_pop = 0;
  std::size_t probe_count = 0;
  LandscapeOptions options;
  std::uint64_t data_seed = 0;
  std::vector<std::string> warnings;
};

/// All landscape estimates for an empirical sample drawn from `spec`.
/// Requires n_pop >= 10 n.
template <MarginLoss L>
LandscapeReport landscape_report(const L& loss, const SyntheticSpec& spec, const DataSet& data,
                                 std::uint64_t data_seed, const LandscapeOptions& opts) {
  if (opts.n_pop < 10 * data.size()) {
    throw InvalidParameter("landscape_report: n_pop = " + std::to_string(opts.n_pop) + " must be at least 10 n = " +
                           std::to_string(10 * data.size()));
  }
  opts.grid.validate(opts.radius);
  const MonteCarloPopulation pop(PopulationOracle{spec, opts.n_pop, opts.population_seed});
  const Vector theta_star = sample_theta_star(spec.dim(), spec.theta_seed);
  const std::vector<Vector> probes = opts.grid.points(data.dim());

  LandscapeReport rep;
  rep.n = data.size();
  rep.p = data.dim();
  rep.n_pop = opts.n_pop;
  rep.probe_count = probes.size();
  rep.options = opts;
  rep.data_seed = data_seed;
  rep.grad_dev_sup = grad_deviation_sup(loss, data, pop, probes);
  for (const Vector& theta : probes) {
    rep.grad_mc_stderr = std::max(rep.grad_mc_stderr, population_gradient_stderr(loss, theta, pop));
  }
  if (opts.hessian) rep.hess_dev_sup = hess_deviation_sup(loss, data, pop, probes);
  rep.mu0_hat = mu0_estimate(loss, pop, theta_star, probes);
  rep.kappa0_hat = kappa0_estimate(loss, pop, theta_star, opts.kappa_radius, opts.kappa_probes, opts.kappa_seed);
  if (rep.mu0_hat <= 0.0) rep.warnings.emplace_back("mu0_hat <= 0: directional-gradient condition violated on grid");
  if (rep.kappa0_hat <= 0.0) rep.warnings.emplace_back("kappa0_hat <= 0: population Hessian not positive definite near theta*");
  return rep;
}

// LossModel dispatch.

inline Vector population_gradient_mc(const LossModel& m, const VectorRef& t, const MonteCarloPopulation& pop) {
  return std::visit([&](const auto& l) { return population_gradient_mc(l, t, pop); }, m);
}
inline double grad_deviation_sup(const LossModel& m, const DataSet& d, const MonteCarloPopulation& pop,
                                 std::span<const Vector> probes) {
  return std::visit([&](const auto& l) { return grad_deviation_sup(l, d, pop, probes); }, m);
}
inline double hess_deviation_sup(const LossModel& m, const DataSet& d, const MonteCarloPopulation& pop,
                                 std::span<const Vector> probes) {
  return std::visit([&](const auto& l) { return hess_deviation_sup(l, d, pop, probes); }, m);
}
inline double mu0_estimate(const LossModel& m, const MonteCarloPopulation& pop, const VectorRef& ts,
                           std::span<const Vector> probes) {
  return std::visit([&](const auto& l) { return mu0_estimate(l, pop, ts, probes); }, m);
}
inline double kappa0_estimate(const LossModel& m, const MonteCarloPopulation& pop, const VectorRef& ts, double radius,
                              int probes, std::uint64_t seed) {
  return std::visit([&](const auto& l) { return kappa0_estimate(l, pop, ts, radius, probes, seed); }, m);
}
inline LandscapeReport landscape_report(const LossModel& m, const SyntheticSpec& spec, const DataSet& d,
                                        std::uint64_t data_seed, const LandscapeOptions& opts) {
  return std::visit([&](const auto& l) { return landscape_report(l, spec, d, data_seed, opts); }, m);
}

}  // namespace ncvr
