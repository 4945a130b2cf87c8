#pragma once

#include <cmath>
#include <concepts>

#include "ncvr/errors.hpp"
#include "ncvr/types.hpp"

namespace ncvr {

struct OperatorNormResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = true;
};

struct PowerIterationOptions {
  double tol = 1e-13;
  int max_iters = 100000;
};

/// Largest |eigenvalue| of a symmetric linear operator given as a callable
/// v -> M v. Iterates on M^2 so a dominant negative eigenvalue (or a +/-
/// pair) is handled without a restart; the estimate is ||M v|| for unit v.
template <class Apply>
  requires std::invocable<Apply, const Vector&>
OperatorNormResult operator_norm(Apply&& apply, Index dim, PowerIterationOptions opts = {}) {
  if (dim < 1) throw InvalidInput("operator_norm: empty operator");
  // Deterministic start with no special alignment to coordinate axes.
  Vector v(dim);
  for (Index j = 0; j < dim; ++j) v[j] = 1.0 + 0.5 * std::sin(1.0 + 2.0 * static_cast<double>(j));
  v.normalize();

  OperatorNormResult res;
  Vector mv = apply(v);
  double est = mv.norm();
  if (est == 0.0) {
    // v may be in the null space; one more try from a different start.
    v = Vector::LinSpaced(dim, 1.0, 2.0).normalized();
    mv = apply(v);
    est = mv.norm();
    if (est == 0.0) return res;
  }
  for (int it = 1; it <= opts.max_iters; ++it) {
    Vector w = apply(mv);
    const double wn = w.norm();
    if (wn == 0.0) break;
    v = w / wn;
    mv = apply(v);
    const double next = mv.norm();
    res.iterations = it;
    const double change = std::abs(next - est);
    est = next;
    if (change <= opts.tol * est) {
      res.value = est;
      res.converged = true;
      return res;
    }
  }
  res.value = est;
  res.converged = false;
  return res;
}

inline OperatorNormResult operator_norm(const Matrix& m, PowerIterationOptions opts = {}) {
  if (m.rows() != m.cols()) throw InvalidInput("operator_norm: matrix must be square");
  if (!m.allFinite()) throw InvalidInput("operator_norm: non-finite entry");
  if (m.isZero(0.0)) return {};
  return operator_norm([&m](const Vector& v) -> Vector { return m * v; }, m.rows(), opts);
}

}  // namespace ncvr
