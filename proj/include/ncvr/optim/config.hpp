#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "ncvr/errors.hpp"
#include "ncvr/losses.hpp"
#include "ncvr/optim/projection.hpp"

namespace ncvr {

/// Which iterate a restart hands on: a uniformly random inner iterate, or the last one.
enum class OutputMode { RandomIterate, LastIterate };

inline const char* output_mode_name(OutputMode m) {
  return m == OutputMode::RandomIterate ? "random" : "last";
}

inline OutputMode parse_output_mode(const std::string& s) {
  if (s == "random") return OutputMode::RandomIterate;
  if (s == "last") return OutputMode::LastIterate;
  throw InvalidParameter("unknown output mode '" + s + "'");
}

struct GdConfig {
  double step = 0.0;
  std::uint64_t max_passes = 100;
  BallConstraint constraint;
  /// Stop once ||grad R_n|| <= grad_tol; 0 disables the test.
  double grad_tol = 0.0;

  void validate() const {
    if (!(step >= 0.0) || !std::isfinite(step)) throw InvalidParameter("GdConfig: step must be finite and >= 0");
    if (!(grad_tol >= 0.0)) throw InvalidParameter("GdConfig: grad_tol must be >= 0");
  }
};

struct SgdConfig : GdConfig {
  std::uint64_t seed = 0;
};

struct SvrgConfig {
  std::uint64_t m = 1;  ///< inner steps per epoch
  std::uint64_t T = 1;  ///< inner steps per restart; ceil(T / m) epochs
  std::uint64_t J = 1;  ///< restarts
  double step = 0.0;
  BallConstraint constraint;
  OutputMode mode = OutputMode::LastIterate;
  std::uint64_t seed = 0;

  std::uint64_t epochs() const { return (T + m - 1) / m; }

  void validate() const {
    if (m < 1) throw InvalidParameter("SvrgConfig: m must be >= 1");
    if (T < m) throw InvalidParameter("SvrgConfig: T must be >= m");
    if (J < 1) throw InvalidParameter("SvrgConfig: J must be >= 1");
    if (!(step >= 0.0) || !std::isfinite(step)) throw InvalidParameter("SvrgConfig: step must be finite and >= 0");
  }
};

struct SagaConfig {
  std::uint64_t K = 1;  ///< steps per restart
  std::uint64_t b = 1;  ///< minibatch size for both I_k and J_k
  std::uint64_t J = 1;
  double step = 0.0;
  BallConstraint constraint;
  OutputMode mode = OutputMode::LastIterate;
  std::uint64_t seed = 0;
  /// Recompute the table mean after every step and throw if it drifts.
  bool check_invariants = false;

  void validate(Index n) const {
    if (b < 1 || b > static_cast<std::uint64_t>(n)) {
      throw InvalidParameter("SagaConfig: minibatch size b = " + std::to_string(b) + " must lie in [1, n = " +
                             std::to_string(n) + "]");
    }
    if (K < 1) throw InvalidParameter("SagaConfig: K must be >= 1");
    if (J < 1) throw InvalidParameter("SagaConfig: J must be >= 1");
    if (!(step >= 0.0) || !std::isfinite(step)) throw InvalidParameter("SagaConfig: step must be finite and >= 0");
  }
};

/// Smallest integer c with c^3 >= v, exact in integer arithmetic.
inline std::uint64_t ceil_cbrt(std::uint64_t v) {
  auto c = static_cast<std::uint64_t>(std::cbrt(static_cast<double>(v)));
  while (c > 0 && (c - 1) * (c - 1) * (c - 1) >= v) --c;
  while (c * c * c < v) ++c;
  return c;
}

struct DefaultSchedules {
  GdConfig gd;
  SvrgConfig svrg;
  SagaConfig saga;
};

/// Default schedules from n, an estimated smoothness constant and a
/// guess of the effective condition number L / mu0. The unknown absolute
/// constant in T is taken as 1 and T is raised to m when smaller.
inline DefaultSchedules default_hyperparams(Family family, std::uint64_t n, double smoothness, double cond_guess) {
  if (n < 1) throw InvalidParameter("default_hyperparams: n must be >= 1");
  if (!(smoothness > 0.0) || !std::isfinite(smoothness)) {
    throw InvalidParameter("default_hyperparams: smoothness must be positive");
  }
  if (!(cond_guess >= 1.0) || !std::isfinite(cond_guess)) {
    throw InvalidParameter("default_hyperparams: cond_guess must be >= 1");
  }
  const bool regression = family == Family::RobustRegression;
  const double nd = static_cast<double>(n);
  const double n23 = std::cbrt(nd) * std::cbrt(nd);
  const double cond2 = cond_guess * cond_guess;

  DefaultSchedules s;
  s.gd.step = 1.0 / (2.0 * smoothness);

  s.svrg.step = 2.0 / (5.0 * smoothness * n23);
  s.svrg.m = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor((regression ? 2.5 : 1.25) * nd)));
  s.svrg.T = std::max(s.svrg.m, static_cast<std::uint64_t>(std::ceil(n23 * cond2)));

  // ceil(n^(2/3)) or ceil(2 n^(2/3)) = ceil(cbrt(8 n^2))
  s.saga.b = std::min<std::uint64_t>(n, ceil_cbrt((regression ? 8 : 1) * n * n));
  s.saga.step = 1.0 / (5.0 * smoothness);
  s.saga.K = static_cast<std::uint64_t>(std::ceil(15.0 * cond2));
  return s;
}

}  // namespace ncvr
