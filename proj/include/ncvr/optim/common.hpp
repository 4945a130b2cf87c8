#pragma once

#include <string>

#include "ncvr/dataset.hpp"
#include "ncvr/errors.hpp"
#include "ncvr/losses.hpp"
#include "ncvr/optim/projection.hpp"
#include "ncvr/types.hpp"

namespace ncvr::detail {

/// Resolves the starting point (origin when empty) and checks feasibility.
template <MarginLoss L>
Vector prepare_run(const L& loss, const DataSet& data, const Vector& theta0, const BallConstraint& c,
                   const char* where) {
  check_targets(loss, data);
  if (theta0.size() == 0) return Vector::Zero(data.dim());
  if (theta0.size() != data.dim()) throw InvalidInput(std::string(where) + ": theta0 has wrong dimension");
  if (!theta0.allFinite()) throw InvalidInput(std::string(where) + ": theta0 is not finite");
  if (!c.contains(theta0)) throw InvalidParameter(std::string(where) + ": theta0 lies outside the ball");
  return theta0;
}

/// theta <- project(theta - step * direction).
inline void descend(Vector& theta, double step, const Vector& direction, const BallConstraint& c) {
  theta -= step * direction;
  project_ball_inplace(theta, c);
}

}  // namespace ncvr::detail
