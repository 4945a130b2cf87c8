#pragma once

#include <numeric>
#include <random>
#include <span>
#include <vector>

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

/// Iterate, per-sample anchor table and the running mean of anchor gradients.
///
/// anchor_slopes caches slope_i(anchors_i) so that the gradient at an anchor
/// is slope * x_i without a fresh evaluation.
struct SagaState {
  Vector theta;
  RowMatrix anchors;
  Vector anchor_slopes;
  Vector mean_grad;
};

/// Every anchor set to theta; costs n evaluations.
template <MarginLoss L>
SagaState init_saga_state(CountingOracle<L>& oracle, const Vector& theta) {
  SagaState state;
  state.theta = theta;
  state.anchors = theta.transpose().replicate(oracle.size(), 1);
  state.mean_grad = oracle.full_gradient(theta, &state.anchor_slopes);
  return state;
}

template <MarginLoss L>
SagaState init_saga_state(const L& loss, const DataSet& data, const Vector& theta) {
  CountingOracle oracle(loss, data);
  return init_saga_state(oracle, theta);
}

/// (1/n) sum_i grad_i(anchor_i), recomputed from the anchor points.
template <MarginLoss L>
Vector saga_table_gradient(const L& loss, const DataSet& data, const SagaState& state) {
  Vector g = Vector::Zero(data.dim());
  for (Index i = 0; i < data.size(); ++i) {
    const auto x = data.x(i);
    g.noalias() += loss.slope(state.anchors.row(i).dot(x), data.y(i)) * x;
  }
  return g / static_cast<double>(data.size());
}

/// v = (1/b) sum_{i in batch} (grad_i(theta) - grad_i(anchor_i)) + mean_grad.
template <MarginLoss L>
Vector saga_direction(const SagaState& state, std::span<const Index> batch, CountingOracle<L>& oracle) {
  Vector corr = Vector::Zero(state.theta.size());
  for (const Index i : batch) {
    corr.noalias() += (oracle.slope(i, state.theta) - state.anchor_slopes[i]) * oracle.data().x(i);
  }
  return state.mean_grad + corr / static_cast<double>(batch.size());
}

/// Uniform b-subset of {0..n-1} by partial Fisher-Yates over a reusable pool.
inline std::span<const Index> sample_without_replacement(std::vector<Index>& pool, std::size_t b, Rng& rng) {
  const std::size_t n = pool.size();
  for (std::size_t t = 0; t < b; ++t) {
    std::uniform_int_distribution<std::size_t> pick(t, n - 1);
    std::swap(pool[t], pool[pick(rng)]);
  }
  return {pool.data(), b};
}

/// Reusable index pools for the two minibatches of a SAGA step.
struct SagaSampler {
  std::vector<Index> pool_i;
  std::vector<Index> pool_j;

  explicit SagaSampler(Index n) : pool_i(static_cast<std::size_t>(n)), pool_j(static_cast<std::size_t>(n)) {
    std::iota(pool_i.begin(), pool_i.end(), Index{0});
    std::iota(pool_j.begin(), pool_j.end(), Index{0});
  }
};

/// One SAGA step with independently drawn minibatches I (direction) and
/// J (table refresh), each of size b without replacement. The table
/// correction reads the old anchor gradients before they are overwritten.
template <MarginLoss L>
void saga_step(SagaState& state, const SagaConfig& cfg, CountingOracle<L>& oracle, SagaSampler& sampler, Rng& rng) {
  const Index n = oracle.size();
  const auto b = static_cast<std::size_t>(cfg.b);
  const auto batch_i = sample_without_replacement(sampler.pool_i, b, rng);
  const auto batch_j = sample_without_replacement(sampler.pool_j, b, rng);

  const Vector v = saga_direction(state, batch_i, oracle);

  Vector corr = Vector::Zero(state.theta.size());
  for (const Index j : batch_j) {
    const double fresh = oracle.slope(j, state.theta);
    corr.noalias() += (state.anchor_slopes[j] - fresh) * oracle.data().x(j);
    state.anchor_slopes[j] = fresh;
    state.anchors.row(j) = state.theta.transpose();
  }
  state.mean_grad -= corr / static_cast<double>(n);

  detail::descend(state.theta, cfg.step, v, cfg.constraint);
}

/// Convenience form with a private oracle and sampler.
template <MarginLoss L>
void saga_step(SagaState& state, const SagaConfig& cfg, const L& loss, const DataSet& data, Rng& rng) {
  cfg.validate(data.size());
  CountingOracle oracle(loss, data);
  SagaSampler sampler(data.size());
  saga_step(state, cfg, oracle, sampler, rng);
}

/// Minibatch SAGA with J restarts of K steps. Every restart rebuilds the
/// table at the incoming iterate (n evaluations); every step costs 2b.
template <MarginLoss L>
TrainTrace run_saga(const L& loss, const DataSet& data, const SagaConfig& cfg, const Vector& theta0 = {}) {
  cfg.validate(data.size());
  Vector theta = detail::prepare_run(loss, data, theta0, cfg.constraint, "run_saga");
  TrainTrace trace;
  trace.algorithm = "saga";
  trace.config = {{"step", format_double(cfg.step)}, {"K", std::to_string(cfg.K)},
                  {"b", std::to_string(cfg.b)},      {"J", std::to_string(cfg.J)},
                  {"mode", output_mode_name(cfg.mode)}, {"radius", format_double(cfg.constraint.radius)},
                  {"seed", std::to_string(cfg.seed)}};
  CountingOracle oracle(loss, data);
  TraceRecorder recorder(loss, data, trace);
  SagaSampler sampler(data.size());
  Rng rng{derive_seed(cfg.seed, 0x5a6a)};
  recorder.record(0, theta);

  Vector chosen;
  recorder.run([&] {
    for (std::uint64_t j = 0; j < cfg.J; ++j) {
      std::uint64_t output_index = 0;
      if (cfg.mode == OutputMode::RandomIterate) {
        output_index = std::uniform_int_distribution<std::uint64_t>(0, cfg.K - 1)(rng);
      }
      SagaState state = init_saga_state(oracle, theta);
      recorder.record_if_pass_complete(oracle.evaluations(), state.theta);
      for (std::uint64_t k = 0; k < cfg.K; ++k) {
        if (cfg.mode == OutputMode::RandomIterate && k == output_index) chosen = state.theta;
        saga_step(state, cfg, oracle, sampler, rng);
        if (cfg.check_invariants) {
          const double drift = (saga_table_gradient(loss, data, state) - state.mean_grad).cwiseAbs().maxCoeff();
          if (drift > 1e-10) {
            throw std::logic_error("run_saga: table mean drifted by " + format_double(drift));
          }
        }
        recorder.record_if_pass_complete(oracle.evaluations(), state.theta);
      }
      recorder.record(oracle.evaluations(), state.theta);
      theta = cfg.mode == OutputMode::RandomIterate ? chosen : state.theta;
    }
  });
  trace.final_theta = theta;
  return trace;
}

inline TrainTrace run_saga(const LossModel& m, const DataSet& d, const SagaConfig& c, const Vector& t0 = {}) {
  return std::visit([&](const auto& l) { return run_saga(l, d, c, t0); }, m);
}

}  // namespace ncvr
