#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <string>
#include <variant>

#include "ncvr/dataset.hpp"
#include "ncvr/errors.hpp"
#include "ncvr/linalg.hpp"
#include "ncvr/rng.hpp"
#include "ncvr/types.hpp"

namespace ncvr {

// ---------------------------------------------------------------------------
// Scalar primitives
// ---------------------------------------------------------------------------

struct SigmoidValue {
  double value;
  double d1;
  double d2;
  double d3;
};

/// Logistic link 1 / (1 + exp(-a)) with its first three derivatives.
///
/// Both the value and its complement are formed from exp(-|a|), so nothing
/// overflows and the derivatives keep full relative precision in the tails.
struct SigmoidLink {
  static SigmoidValue eval(double a) {
    if (!std::isfinite(a)) throw InvalidInput("sigmoid: non-finite argument");
    const double e = std::exp(-std::abs(a));
    const double small = e / (1.0 + e);  // min(z, 1 - z)
    const double large = 1.0 / (1.0 + e);
    const double z = a >= 0.0 ? large : small;
    const double zc = a >= 0.0 ? small : large;
    const double d1 = z * zc;
    return {z, d1, d1 * (zc - z), d1 * (1.0 - 6.0 * d1)};
  }
};

inline SigmoidValue sigmoid_eval(double a) { return SigmoidLink::eval(a); }

struct TukeyValue {
  double rho;
  double psi;
  double psi_d1;
  double psi_d2;
};

/// Tukey bisquare: rho(t) = 1 - (1 - (t/t0)^2)^3 inside the cutoff, 1 outside.
class TukeyLoss {
 public:
  explicit TukeyLoss(double t0) : t0_(t0) {
    if (!(t0 > 0.0) || !std::isfinite(t0)) {
      throw InvalidParameter("TukeyLoss: cutoff t0 must be positive and finite");
    }
  }

  double cutoff() const noexcept { return t0_; }

  /// At |t| == t0 the derivatives take their interior limits.
  TukeyValue eval(double t) const noexcept {
    const double s = (t / t0_) * (t / t0_);
    if (s > 1.0) return {1.0, 0.0, 0.0, 0.0};
    const double w = 1.0 - s;
    const double t02 = t0_ * t0_;
    return {1.0 - w * w * w, 6.0 * t * w * w / t02, 6.0 * w * (1.0 - 5.0 * s) / t02,
            24.0 * t * (5.0 * s - 3.0) / (t02 * t02)};
  }

  double rho(double t) const noexcept { return eval(t).rho; }
  double psi(double t) const noexcept { return eval(t).psi; }

 private:
  double t0_;
};

inline TukeyValue tukey_eval(double t, double t0) { return TukeyLoss(t0).eval(t); }

// ---------------------------------------------------------------------------
// Per-sample losses of the margin u = <theta, x>
// ---------------------------------------------------------------------------

/// A sample loss that depends on theta only through u = <theta, x>.
/// slope = d loss / du, curvature = d^2 loss / du^2.
template <class L>
concept MarginLoss = requires(const L& loss, double u, double y) {
  { loss.value(u, y) } -> std::convertible_to<double>;
  { loss.slope(u, y) } -> std::convertible_to<double>;
  { loss.curvature(u, y) } -> std::convertible_to<double>;
  { loss.accepts_target(y) } -> std::convertible_to<bool>;
  { L::name() } -> std::convertible_to<const char*>;
};

/// (y - sigmoid(u))^2 with y in {0, 1}.
struct BinaryClassificationLoss {
  static constexpr const char* name() { return "classification"; }

  double value(double u, double y) const {
    const double r = y - SigmoidLink::eval(u).value;
    return r * r;
  }
  double slope(double u, double y) const {
    const auto z = SigmoidLink::eval(u);
    return 2.0 * (z.value - y) * z.d1;
  }
  double curvature(double u, double y) const {
    const auto z = SigmoidLink::eval(u);
    return 2.0 * (z.d1 * z.d1 + (z.value - y) * z.d2);
  }
  bool accepts_target(double y) const { return y == 0.0 || y == 1.0; }
};

/// rho(y - u) with Tukey's bisquare rho.
struct RobustRegressionLoss {
  TukeyLoss rho;

  static constexpr const char* name() { return "regression"; }

  explicit RobustRegressionLoss(double t0) : rho(t0) {}

  double value(double u, double y) const { return rho.eval(y - u).rho; }
  double slope(double u, double y) const { return -rho.eval(y - u).psi; }
  double curvature(double u, double y) const { return rho.eval(y - u).psi_d1; }
  bool accepts_target(double y) const { return std::isfinite(y); }
};

/// Runtime choice of loss family; algorithms are templates over MarginLoss
/// and the LossModel overloads dispatch through std::visit.
using LossModel = std::variant<BinaryClassificationLoss, RobustRegressionLoss>;

enum class Family { BinaryClassification, RobustRegression };

inline Family family_of(const LossModel& model) {
  return model.index() == 0 ? Family::BinaryClassification : Family::RobustRegression;
}

inline const char* family_name(Family f) {
  return f == Family::BinaryClassification ? "classification" : "regression";
}

inline Family parse_family(const std::string& s) {
  if (s == "classification" || s == "binary" || s == "binary_classification") return Family::BinaryClassification;
  if (s == "regression" || s == "robust" || s == "robust_regression") return Family::RobustRegression;
  throw InvalidParameter("unknown problem family '" + s + "'");
}

inline LossModel make_loss(Family f, double t0 = 4.865) {
  if (f == Family::BinaryClassification) return BinaryClassificationLoss{};
  return RobustRegressionLoss{t0};
}

// ---------------------------------------------------------------------------
// Sample and batch oracles
// ---------------------------------------------------------------------------

namespace detail {

inline void check_dims(const VectorRef& theta, Index p, const char* where) {
  if (theta.size() != p) {
    throw InvalidInput(std::string(where) + ": dimension mismatch (theta has " +
                       std::to_string(theta.size()) + ", data has " + std::to_string(p) + ")");
  }
}

}  // namespace detail

/// Throws unless every target is admissible for the loss family.
template <MarginLoss L>
void check_targets(const L& loss, const DataSet& data) {
  for (Index i = 0; i < data.size(); ++i) {
    if (!loss.accepts_target(data.y(i))) {
      throw InvalidInput(std::string("target ") + std::to_string(data.y(i)) + " at row " +
                         std::to_string(i) + " is not valid for the " + L::name() + " family");
    }
  }
}

template <MarginLoss L>
double sample_loss(const L& loss, const VectorRef& theta, const VectorRef& x, double y) {
  detail::check_dims(theta, x.size(), "sample_loss");
  return loss.value(theta.dot(x), y);
}

template <MarginLoss L>
Vector sample_gradient(const L& loss, const VectorRef& theta, const VectorRef& x, double y) {
  detail::check_dims(theta, x.size(), "sample_gradient");
  return loss.slope(theta.dot(x), y) * x;
}

template <MarginLoss L>
Vector sample_gradient(const L& loss, const VectorRef& theta, const Sample& s) {
  return sample_gradient(loss, theta, s.x, s.y);
}

/// Mean loss over the data, summed in index order.
template <MarginLoss L>
double batch_objective(const L& loss, const VectorRef& theta, const DataSet& data) {
  detail::check_dims(theta, data.dim(), "batch_objective");
  double sum = 0.0;
  for (Index i = 0; i < data.size(); ++i) sum += loss.value(theta.dot(data.x(i)), data.y(i));
  return sum / static_cast<double>(data.size());
}

/// Mean sample gradient, accumulated in index order.
template <MarginLoss L>
Vector batch_gradient(const L& loss, const VectorRef& theta, const DataSet& data) {
  detail::check_dims(theta, data.dim(), "batch_gradient");
  Vector g = Vector::Zero(data.dim());
  for (Index i = 0; i < data.size(); ++i) {
    const auto x = data.x(i);
    g.noalias() += loss.slope(theta.dot(x), data.y(i)) * x;
  }
  return g / static_cast<double>(data.size());
}

/// Mean of curvature_i * x_i x_i^T. Dense, so p is capped.
template <MarginLoss L>
Matrix batch_hessian(const L& loss, const VectorRef& theta, const DataSet& data) {
  detail::check_dims(theta, data.dim(), "batch_hessian");
  const Index p = data.dim();
  if (p > kDenseHessianLimit) {
    throw UnsupportedSize("batch_hessian: p = " + std::to_string(p) + " exceeds dense limit " +
                          std::to_string(kDenseHessianLimit));
  }
  Matrix h = Matrix::Zero(p, p);
  for (Index i = 0; i < data.size(); ++i) {
    const auto x = data.x(i);
    h.selfadjointView<Eigen::Lower>().rankUpdate(x, loss.curvature(theta.dot(x), data.y(i)));
  }
  h.triangularView<Eigen::StrictlyUpper>() = h.transpose();
  return h / static_cast<double>(data.size());
}

struct SmoothnessOptions {
  int probes = 8;
  /// Probes are drawn uniformly from B(0, radius); radius 0 probes only the origin.
  double radius = 1.0;
  std::uint64_t seed = 0;
  double safety = 1.1;
};

/// Empirical smoothness constant: safety x the largest per-sample Hessian
/// operator norm seen over random probes in the feasible ball.
template <MarginLoss L>
double smoothness_estimate(const L& loss, const DataSet& data, const SmoothnessOptions& opts) {
  if (opts.probes < 1) throw InvalidParameter("smoothness_estimate: probes must be >= 1");
  if (!(opts.radius >= 0.0)) throw InvalidParameter("smoothness_estimate: radius must be >= 0");
  Rng rng{derive_seed(opts.seed, 0x5a00)};
  const Vector origin = Vector::Zero(data.dim());
  double best = 0.0;
  for (int k = 0; k < opts.probes; ++k) {
    const Vector theta = opts.radius > 0.0 ? uniform_in_ball(origin, opts.radius, rng) : origin;
    for (Index i = 0; i < data.size(); ++i) {
      const Vector x = data.x(i);
      const double c = loss.curvature(theta.dot(x), data.y(i));
      if (c == 0.0) continue;
      // Per-sample Hessian c x x^T, applied matrix-free.
      const auto res =
          operator_norm([&](const Vector& v) -> Vector { return (c * x.dot(v)) * x; }, x.size());
      best = std::max(best, res.value);
    }
  }
  return opts.safety * best;
}

// LossModel dispatch.

inline double sample_loss(const LossModel& m, const VectorRef& theta, const VectorRef& x, double y) {
  return std::visit([&](const auto& l) { return sample_loss(l, theta, x, y); }, m);
}
inline Vector sample_gradient(const LossModel& m, const VectorRef& theta, const VectorRef& x,
                              double y) {
  return std::visit([&](const auto& l) { return sample_gradient(l, theta, x, y); }, m);
}
inline Vector sample_gradient(const LossModel& m, const VectorRef& theta, const Sample& s) {
  return sample_gradient(m, theta, s.x, s.y);
}
inline double batch_objective(const LossModel& m, const VectorRef& theta, const DataSet& d) {
  return std::visit([&](const auto& l) { return batch_objective(l, theta, d); }, m);
}
inline Vector batch_gradient(const LossModel& m, const VectorRef& theta, const DataSet& d) {
  return std::visit([&](const auto& l) { return batch_gradient(l, theta, d); }, m);
}
inline Matrix batch_hessian(const LossModel& m, const VectorRef& theta, const DataSet& d) {
  return std::visit([&](const auto& l) { return batch_hessian(l, theta, d); }, m);
}
inline double smoothness_estimate(const LossModel& m, const DataSet& d,
                                  const SmoothnessOptions& opts) {
  return std::visit([&](const auto& l) { return smoothness_estimate(l, d, opts); }, m);
}
inline void check_targets(const LossModel& m, const DataSet& d) {
  std::visit([&](const auto& l) { check_targets(l, d); }, m);
}

}  // namespace ncvr
