#pragma once

#include <random>

#include "ncvr/dataset.hpp"
#include "ncvr/format.hpp"
#include "ncvr/losses.hpp"
#include "ncvr/optim/common.hpp"
#include "ncvr/optim/config.hpp"
#include "ncvr/optim/oracle.hpp"
#include "ncvr/optim/trace.hpp"
#include "ncvr/rng.hpp"

namespace ncvr {

/// Projected batch gradient descent, one trace row per iteration.
template <MarginLoss L>
TrainTrace run_batch_gd(const L& loss, const DataSet& data, const GdConfig& cfg, const Vector& theta0 = {}) {
  cfg.validate();
  Vector theta = detail::prepare_run(loss, data, theta0, cfg.constraint, "run_batch_gd");
  TrainTrace trace;
  trace.algorithm = "gd";
  trace.config = {{"step", format_double(cfg.step)},
                  {"max_passes", std::to_string(cfg.max_passes)},
                  {"radius", format_double(cfg.constraint.radius)},
                  {"grad_tol", format_double(cfg.grad_tol)}};
  CountingOracle oracle(loss, data);
  TraceRecorder recorder(loss, data, trace);
  double grad_norm = *recorder.record(0, theta);
  recorder.run([&] {
    for (std::uint64_t k = 0; k < cfg.max_passes; ++k) {
      if (cfg.grad_tol > 0.0 && grad_norm <= cfg.grad_tol) break;
      const Vector g = oracle.full_gradient(theta);
      detail::descend(theta, cfg.step, g, cfg.constraint);
      grad_norm = *recorder.record(oracle.evaluations(), theta);
    }
  });
  trace.final_theta = theta;
  return trace;
}

/// Projected SGD with uniform i.i.d. sample indices; a trace row per pass.
template <MarginLoss L>
TrainTrace run_sgd(const L& loss, const DataSet& data, const SgdConfig& cfg, const Vector& theta0 = {}) {
  cfg.validate();
  Vector theta = detail::prepare_run(loss, data, theta0, cfg.constraint, "run_sgd");
  TrainTrace trace;
  trace.algorithm = "sgd";
  trace.config = {{"step", format_double(cfg.step)},
                  {"max_passes", std::to_string(cfg.max_passes)},
                  {"radius", format_double(cfg.constraint.radius)},
                  {"seed", std::to_string(cfg.seed)}};
  const Index n = data.size();
  CountingOracle oracle(loss, data);
  TraceRecorder recorder(loss, data, trace);
  Rng rng{derive_seed(cfg.seed, 0x56d)};
  std::uniform_int_distribution<Index> pick(0, n - 1);
  double grad_norm = *recorder.record(0, theta);
  Vector g(data.dim());
  recorder.run([&] {
    for (std::uint64_t pass = 0; pass < cfg.max_passes; ++pass) {
      if (cfg.grad_tol > 0.0 && grad_norm <= cfg.grad_tol) break;
      for (Index k = 0; k < n; ++k) {
        const Index i = pick(rng);
        g = oracle.slope(i, theta) * data.x(i);
        detail::descend(theta, cfg.step, g, cfg.constraint);
      }
      grad_norm = *recorder.record(oracle.evaluations(), theta);
    }
  });
  trace.final_theta = theta;
  return trace;
}

inline TrainTrace run_batch_gd(const LossModel& m, const DataSet& d, const GdConfig& c, const Vector& t0 = {}) {
  return std::visit([&](const auto& l) { return run_batch_gd(l, d, c, t0); }, m);
}
inline TrainTrace run_sgd(const LossModel& m, const DataSet& d, const SgdConfig& c, const Vector& t0 = {}) {
  return std::visit([&](const auto& l) { return run_sgd(l, d, c, t0); }, m);
}

}  // namespace ncvr
