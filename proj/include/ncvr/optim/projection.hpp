#pragma once

#include <cmath>
#include <limits>

#include "ncvr/errors.hpp"
#include "ncvr/types.hpp"

namespace ncvr {

/// l2-ball feasible set; an infinite radius means unconstrained.
struct BallConstraint {
  double radius = std::numeric_limits<double>::infinity();

  static BallConstraint unconstrained() { return {}; }
  static BallConstraint ball(double r) {
    if (!(r > 0.0)) throw InvalidParameter("BallConstraint: radius must be positive");
    return {r};
  }

  bool active() const noexcept { return std::isfinite(radius); }
  bool contains(const VectorRef& theta, double slack = 1e-12) const {
    return !active() || theta.norm() <= radius + slack;
  }
};

/// Euclidean projection onto the ball.
inline void project_ball_inplace(Vector& theta, const BallConstraint& c) {
  if (!c.active()) return;
  const double norm = theta.norm();
  if (norm > c.radius) theta *= c.radius / norm;
}

inline Vector project_ball(Vector theta, const BallConstraint& c) {
  project_ball_inplace(theta, c);
  return theta;
}

}  // namespace ncvr
