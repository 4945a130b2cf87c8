#pragma once

// Synthetic data: Gaussian features with a prescribed covariance spectrum,
// Bernoulli-sign ground truth, sigmoid-Bernoulli labels and Gaussian-mixture
// regression noise. Every generator is a pure function of (parameters, seed).

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "ncvr/dataset.hpp"
#include "ncvr/errors.hpp"
#include "ncvr/format.hpp"
#include "ncvr/losses.hpp"
#include "ncvr/rng.hpp"
#include "ncvr/types.hpp"

namespace ncvr {

struct CovarianceSpec {
  Index p = 1;
  double cond_ratio = 1.0;  ///< lambda_max / lambda_min
  double scale = 1.0;       ///< lambda_min
  bool rotate = false;
  std::uint64_t seed = 0;
};

/// Noise law (1 - delta) N(0, 1) + delta N(0, sigma^2).
struct NoiseSpec {
  double delta = 0.0;
  double sigma = 1.0;

  void validate() const {
    if (!(delta >= 0.0 && delta <= 1.0)) throw InvalidParameter("NoiseSpec: delta must lie in [0, 1]");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidParameter("NoiseSpec: sigma must be positive");
  }
  double variance() const { return (1.0 - delta) + delta * sigma * sigma; }
};

/// Eigenvalues log-spaced from scale to scale * cond_ratio, optionally
/// conjugated by a seeded Haar-random orthogonal matrix.
inline Matrix make_covariance(const CovarianceSpec& spec) {
  if (spec.p < 1) throw InvalidParameter("make_covariance: p must be >= 1");
  if (!(spec.cond_ratio >= 1.0) || !std::isfinite(spec.cond_ratio)) {
    throw InvalidParameter("make_covariance: cond_ratio must be >= 1");
  }
  if (!(spec.scale > 0.0) || !std::isfinite(spec.scale)) {
    throw InvalidParameter("make_covariance: scale must be positive");
  }
  if (spec.p == 1 && spec.cond_ratio != 1.0) {
    throw InvalidParameter("make_covariance: p = 1 admits only cond_ratio = 1");
  }
  const Index p = spec.p;
  Vector eig(p);
  for (Index k = 0; k < p; ++k) {
    const double frac = p == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(p - 1);
    eig[k] = spec.scale * std::pow(spec.cond_ratio, frac);
  }
  if (!spec.rotate) return eig.asDiagonal();

  Rng rng{derive_seed(spec.seed, 0xc0)};
  Matrix g(p, p);
  std::normal_distribution<double> normal;
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < p; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  Matrix cov = q * eig.asDiagonal() * q.transpose();
  return 0.5 * (cov + cov.transpose());
}

/// Entries i.i.d. Bernoulli(1/2), normalized to unit norm. The all-zero draw
/// (probability 2^-p) is redrawn.
inline Vector sample_theta_star(Index p, std::uint64_t seed) {
  if (p < 1) throw InvalidParameter("sample_theta_star: p must be >= 1");
  Rng rng{derive_seed(seed, 0x7e)};
  std::bernoulli_distribution coin(0.5);
  Vector theta(p);
  for (;;) {
    for (Index j = 0; j < p; ++j) theta[j] = coin(rng) ? 1.0 : 0.0;
    const double norm = theta.norm();
    if (norm > 0.0) return theta / norm;
  }
}

/// Rows i.i.d. N(0, cov), generated as L z with cov = L L^T.
inline RowMatrix sample_features(Index n, const Matrix& cov, std::uint64_t seed) {
  if (n < 1) throw InvalidParameter("sample_features: n must be >= 1");
  if (cov.rows() != cov.cols()) throw InvalidInput("sample_features: covariance must be square");
  if (!cov.isApprox(cov.transpose(), 1e-12)) throw FactorizationError("sample_features: covariance is not symmetric");
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw FactorizationError("sample_features: covariance is not positive definite");
  const Matrix lower = llt.matrixL();
  const Index p = cov.rows();
  Rng rng{derive_seed(seed, 0xf0)};
  RowMatrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    const Vector z = standard_normal_vector(p, rng);
    x.row(i) = (lower * z).transpose();
  }
  return x;
}

/// y_i ~ Bernoulli(sigmoid(<theta_star, x_i>)).
inline Vector label_binary(const RowMatrix& features, const VectorRef& theta_star, std::uint64_t seed) {
  if (theta_star.size() != features.cols()) throw InvalidInput("label_binary: dimension mismatch");
  Rng rng{derive_seed(seed, 0xb1)};
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector y(features.rows());
  for (Index i = 0; i < features.rows(); ++i) {
    const double prob = sigmoid_eval(features.row(i).dot(theta_star)).value;
    y[i] = unif(rng) < prob ? 1.0 : 0.0;
  }
  return y;
}

/// n draws from the mixture: an explicit Bernoulli(delta) component pick,
/// then the matching Gaussian.
inline Vector sample_mixture_noise(Index n, const NoiseSpec& noise, Rng& rng) {
  noise.validate();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  Vector eps(n);
  for (Index i = 0; i < n; ++i) {
    const bool outlier = unif(rng) < noise.delta;
    const double z = normal(rng);
    eps[i] = outlier ? noise.sigma * z : z;
  }
  return eps;
}

/// y_i = <theta_star, x_i> + eps_i with mixture noise.
inline Vector label_regression(const RowMatrix& features, const VectorRef& theta_star,
                               const NoiseSpec& noise, std::uint64_t seed) {
  if (theta_star.size() != features.cols()) throw InvalidInput("label_regression: dimension mismatch");
  noise.validate();
  Rng rng{derive_seed(seed, 0xe5)};
  return features * theta_star + sample_mixture_noise(features.rows(), noise, rng);
}

/// Everything needed to draw from a synthetic population except n and the draw seed.
struct SyntheticSpec {
  Family family = Family::BinaryClassification;
  CovarianceSpec cov;
  std::uint64_t theta_seed = 0;
  NoiseSpec noise;  ///< regression only

  Index dim() const { return cov.p; }
};

/// n rows from the population described by spec.
inline DataSet make_synthetic(const SyntheticSpec& spec, Index n, std::uint64_t seed) {
  const Matrix cov = make_covariance(spec.cov);
  const Vector theta_star = sample_theta_star(spec.cov.p, spec.theta_seed);
  RowMatrix x = sample_features(n, cov, derive_seed(seed, 1));
  Vector y = spec.family == Family::BinaryClassification
                 ? label_binary(x, theta_star, derive_seed(seed, 2))
                 : label_regression(x, theta_star, spec.noise, derive_seed(seed, 2));
  DataMeta meta{{"source", "synthetic"},
                {"family", family_name(spec.family)},
                {"n", std::to_string(n)},
                {"p", std::to_string(spec.cov.p)},
                {"cond_ratio", format_double(spec.cov.cond_ratio)},
                {"scale", format_double(spec.cov.scale)},
                {"rotate", spec.cov.rotate ? "true" : "false"},
                {"cov_seed", std::to_string(spec.cov.seed)},
                {"theta_seed", std::to_string(spec.theta_seed)},
                {"seed", std::to_string(seed)}};
  if (spec.family == Family::RobustRegression) {
    meta["delta"] = format_double(spec.noise.delta);
    meta["sigma"] = format_double(spec.noise.sigma);
  }
  return DataSet(std::move(x), std::move(y), std::move(meta));
}

}  // namespace ncvr

