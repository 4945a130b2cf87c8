#pragma once

#include <random>

#include "ncvr/dataset.hpp"
#include "ncvr/errors.hpp"
#include "ncvr/format.hpp"
#include "ncvr/losses.hpp"
#include "ncvr/optim/common.hpp"
#include "ncvr/optim/config.hpp"
#include "ncvr/optim/oracle.hpp"
#include "ncvr/optim/trace.hpp"
#include "ncvr/rng.hpp"

namespace ncvr {

/// Variance-reduced direction grad_i(theta) - grad_i(snapshot) + snapshot_grad.
/// snapshot_grad must be the full gradient at the snapshot.
template <MarginLoss L>
Vector svrg_vr_gradient(Index i, const VectorRef& theta, const VectorRef& snapshot, const VectorRef& snapshot_grad,
                        const L& loss, const DataSet& data) {
  if (i < 0 || i >= data.size()) {
    throw InvalidInput("svrg_vr_gradient: index " + std::to_string(i) + " out of range");
  }
  const auto x = data.x(i);
  return sample_gradient(loss, theta, x, data.y(i)) - sample_gradient(loss, snapshot, x, data.y(i)) + snapshot_grad;
}

inline Vector svrg_vr_gradient(Index i, const VectorRef& theta, const VectorRef& snapshot,
                               const VectorRef& snapshot_grad, const LossModel& m, const DataSet& d) {
  return std::visit([&](const auto& l) { return svrg_vr_gradient(i, theta, snapshot, snapshot_grad, l, d); }, m);
}

/// SVRG with J restarts of ceil(T / m) epochs each.
///
/// Each epoch takes the previous epoch's last inner iterate as snapshot and
/// computes the full gradient there (n evaluations, per-sample slopes kept);
/// each inner step then costs one new evaluation. Trace rows are written
/// every full pass and at every epoch end.
template <MarginLoss L>
TrainTrace run_svrg(const L& loss, const DataSet& data, const SvrgConfig& cfg, const Vector& theta0 = {}) {
  cfg.validate();
  Vector theta = detail::prepare_run(loss, data, theta0, cfg.constraint, "run_svrg");
  TrainTrace trace;
  trace.algorithm = "svrg";
  trace.config = {{"step", format_double(cfg.step)}, {"m", std::to_string(cfg.m)},
                  {"T", std::to_string(cfg.T)},      {"J", std::to_string(cfg.J)},
                  {"mode", output_mode_name(cfg.mode)}, {"radius", format_double(cfg.constraint.radius)},
                  {"seed", std::to_string(cfg.seed)}};
  const Index n = data.size();
  const std::uint64_t epochs = cfg.epochs();
  CountingOracle oracle(loss, data);
  TraceRecorder recorder(loss, data, trace);
  Rng rng{derive_seed(cfg.seed, 0x5f6)};
  std::uniform_int_distribution<Index> pick(0, n - 1);
  recorder.record(0, theta);

  Vector snapshot_slopes;
  Vector v(data.dim());
  Vector chosen;
  recorder.run([&] {
    for (std::uint64_t j = 0; j < cfg.J; ++j) {
      std::uint64_t output_index = 0;
      if (cfg.mode == OutputMode::RandomIterate) {
        output_index = std::uniform_int_distribution<std::uint64_t>(0, epochs * cfg.m - 1)(rng);
      }
      std::uint64_t inner = 0;
      for (std::uint64_t s = 0; s < epochs; ++s) {
        const Vector snapshot_grad = oracle.full_gradient(theta, &snapshot_slopes);
        recorder.record_if_pass_complete(oracle.evaluations(), theta);
        for (std::uint64_t k = 0; k < cfg.m; ++k, ++inner) {
          if (cfg.mode == OutputMode::RandomIterate && inner == output_index) chosen = theta;
          const Index i = pick(rng);
          const double c = oracle.slope(i, theta);
          v = snapshot_grad;
          v.noalias() += (c - snapshot_slopes[i]) * data.x(i);
          detail::descend(theta, cfg.step, v, cfg.constraint);
          recorder.record_if_pass_complete(oracle.evaluations(), theta);
        }
        recorder.record(oracle.evaluations(), theta);
      }
      if (cfg.mode == OutputMode::RandomIterate) theta = chosen;
    }
  });
  trace.final_theta = theta;
  return trace;
}

inline TrainTrace run_svrg(const LossModel& m, const DataSet& d, const SvrgConfig& c, const Vector& t0 = {}) {
  return std::visit([&](const auto& l) { return run_svrg(l, d, c, t0); }, m);
}

}  // namespace ncvr
