#pragma once

#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ncvr/dataset.hpp"
#include "ncvr/errors.hpp"
#include "ncvr/losses.hpp"
#include "ncvr/optim.hpp"

namespace ncvr {

enum class Algorithm { GD, SGD, SVRG, SAGA };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::GD: return "gd";
    case Algorithm::SGD: return "sgd";
    case Algorithm::SVRG: return "svrg";
    case Algorithm::SAGA: return "saga";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "gd" || s == "batch_gd") return Algorithm::GD;
  if (s == "sgd") return Algorithm::SGD;
  if (s == "svrg") return Algorithm::SVRG;
  if (s == "saga") return Algorithm::SAGA;
  throw InvalidParameter("unknown algorithm '" + s + "'");
}

/// Per-algorithm overrides; anything unset falls back to the default schedule.
struct AlgorithmSettings {
  Algorithm kind = Algorithm::SVRG;
  std::string label;  ///< defaults to the algorithm name
  std::optional<double> step;
  std::optional<std::uint64_t> m;  ///< SVRG epoch length
  std::optional<std::uint64_t> b;  ///< SAGA minibatch
  std::uint64_t restarts = 1;
  OutputMode mode = OutputMode::LastIterate;

  std::string name() const { return label.empty() ? algorithm_name(kind) : label; }
};

/// What every run of an experiment shares.
struct RunContext {
  DefaultSchedules defaults;
  BallConstraint constraint;
};

inline double default_step(const RunContext& ctx, Algorithm kind) {
  switch (kind) {
    case Algorithm::GD:
    case Algorithm::SGD: return ctx.defaults.gd.step;
    case Algorithm::SVRG: return ctx.defaults.svrg.step;
    case Algorithm::SAGA: return ctx.defaults.saga.step;
  }
  return 0.0;
}

/// Number of SVRG epochs per restart that fits a pass budget (>= 1).
inline std::uint64_t svrg_epochs_for_budget(double passes, std::uint64_t n, std::uint64_t m, std::uint64_t restarts) {
  const double per_epoch = static_cast<double>(n + m) / static_cast<double>(n);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(passes / (per_epoch * restarts) + 1e-9)));
}

/// Number of SAGA steps per restart that fits a pass budget (>= 1).
inline std::uint64_t saga_steps_for_budget(double passes, std::uint64_t n, std::uint64_t b, std::uint64_t restarts) {
  const double evals = passes * static_cast<double>(n) / static_cast<double>(restarts) - static_cast<double>(n);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(evals / (2.0 * b) + 1e-9)));
}

/// Runs one algorithm sized to `passes` full-gradient equivalents.
template <MarginLoss L>
TrainTrace run_algorithm(const L& loss, const DataSet& data, const AlgorithmSettings& s, const RunContext& ctx,
                         double passes, std::uint64_t seed, const Vector& theta0 = {}) {
  const auto n = static_cast<std::uint64_t>(data.size());
  const auto whole_passes = static_cast<std::uint64_t>(std::max(1.0, std::floor(passes)));
  TrainTrace trace;
  switch (s.kind) {
    case Algorithm::GD: {
      GdConfig cfg = ctx.defaults.gd;
      cfg.step = s.step.value_or(cfg.step);
      cfg.max_passes = whole_passes;
      cfg.constraint = ctx.constraint;
      trace = run_batch_gd(loss, data, cfg, theta0);
      break;
    }
    case Algorithm::SGD: {
      SgdConfig cfg;
      static_cast<GdConfig&>(cfg) = ctx.defaults.gd;
      cfg.step = s.step.value_or(cfg.step);
      cfg.max_passes = whole_passes;
      cfg.constraint = ctx.constraint;
      cfg.seed = seed;
      trace = run_sgd(loss, data, cfg, theta0);
      break;
    }
    case Algorithm::SVRG: {
      SvrgConfig cfg = ctx.defaults.svrg;
      cfg.step = s.step.value_or(cfg.step);
      cfg.m = s.m.value_or(cfg.m);
      cfg.J = s.restarts;
      cfg.T = svrg_epochs_for_budget(passes, n, cfg.m, cfg.J) * cfg.m;
      cfg.mode = s.mode;
      cfg.constraint = ctx.constraint;
      cfg.seed = seed;
      trace = run_svrg(loss, data, cfg, theta0);
      break;
    }
    case Algorithm::SAGA: {
      SagaConfig cfg = ctx.defaults.saga;
      cfg.step = s.step.value_or(cfg.step);
      cfg.b = std::min<std::uint64_t>(s.b.value_or(cfg.b), n);
      cfg.J = s.restarts;
      cfg.K = saga_steps_for_budget(passes, n, cfg.b, cfg.J);
      cfg.mode = s.mode;
      cfg.constraint = ctx.constraint;
      cfg.seed = seed;
      trace = run_saga(loss, data, cfg, theta0);
      break;
    }
  }
  trace.algorithm = s.name();
  return trace;
}

/// {2^lo, ..., 2^hi}.
inline std::vector<double> power_of_two_grid(int lo = -10, int hi = 1) {
  std::vector<double> g;
  for (int e = lo; e <= hi; ++e) g.push_back(std::ldexp(1.0, e));
  return g;
}

struct GridCell {
  double step = 0.0;
  double final_objective = std::numeric_limits<double>::quiet_NaN();
  bool diverged = false;
  std::string error;
  TrainTrace trace;
};

struct GridSearchResult {
  double best_step = 0.0;
  std::size_t best_index = 0;
  std::vector<GridCell> cells;
};

/// Runs every step for `passes`; picks the lowest final objective, ties to
/// the larger step, diverged cells excluded. All cells share `seed`. Cells
/// run concurrently.
template <MarginLoss L>
GridSearchResult grid_search_step(const L& loss, const DataSet& data, const AlgorithmSettings& settings,
                                  const RunContext& ctx, const std::vector<double>& grid, double passes,
                                  std::uint64_t seed) {
  if (grid.empty()) throw InvalidParameter("grid_search_step: empty grid");
  for (const double eta : grid) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidParameter("grid_search_step: steps must be positive");
  }
  std::vector<std::future<GridCell>> jobs;
  jobs.reserve(grid.size());
  for (const double eta : grid) {
    jobs.push_back(std::async(std::launch::async, [&, eta] {
      GridCell cell;
      cell.step = eta;
      AlgorithmSettings s = settings;
      s.step = eta;
      try {
        cell.trace = run_algorithm(loss, data, s, ctx, passes, seed);
        cell.final_objective = cell.trace.final_objective();
        cell.diverged = !std::isfinite(cell.final_objective);
      } catch (const DivergenceError& e) {
        cell.diverged = true;
        cell.error = e.what();
        cell.trace = e.trace();
      }
      return cell;
    }));
  }
  GridSearchResult res;
  bool found = false;
  for (auto& job : jobs) res.cells.push_back(job.get());
  for (std::size_t k = 0; k < res.cells.size(); ++k) {
    const GridCell& c = res.cells[k];
    if (c.diverged) continue;
    const GridCell* best = found ? &res.cells[res.best_index] : nullptr;
    if (!best || c.final_objective < best->final_objective ||
        (c.final_objective == best->final_objective && c.step > best->step)) {
      res.best_index = k;
      found = true;
    }
  }
  if (!found) throw NoViableStep("grid_search_step: every step diverged for " + settings.name());
  res.best_step = res.cells[res.best_index].step;
  return res;
}

struct ReferenceOptions {
  double passes = 1000;
  std::uint64_t seed = 0;
  /// Empty: use the default SVRG step.
  std::vector<double> grid;
  double grid_passes = 100;
  std::optional<std::uint64_t> m;
};

struct ReferenceOptimum {
  Vector theta;
  double objective = std::numeric_limits<double>::infinity();
  double passes = 0.0;
  double step = 0.0;
  std::uint64_t seed = 0;
  std::optional<GridSearchResult> grid;
};

/// Long SVRG run; returns the best recorded iterate, not the last.
template <MarginLoss L>
ReferenceOptimum reference_optimum(const L& loss, const DataSet& data, const RunContext& ctx,
                                   const ReferenceOptions& opts) {
  if (!(opts.passes >= 1.0)) throw InvalidParameter("reference_optimum: passes must be >= 1");
  AlgorithmSettings s;
  s.kind = Algorithm::SVRG;
  s.label = "reference";
  s.m = opts.m;
  ReferenceOptimum ref;
  ref.seed = opts.seed;
  if (!opts.grid.empty()) {
    try {
      ref.grid = grid_search_step(loss, data, s, ctx, opts.grid, opts.grid_passes, opts.seed);
    } catch (const NoViableStep& e) {
      throw NoReference(std::string("reference_optimum: ") + e.what());
    }
    s.step = ref.grid->best_step;
  }
  ref.step = s.step.value_or(ctx.defaults.svrg.step);
  TrainTrace trace;
  try {
    trace = run_algorithm(loss, data, s, ctx, opts.passes, opts.seed);
  } catch (const DivergenceError& e) {
    trace = e.trace();
  }
  if (ref.grid) {
    // A grid cell may have landed lower than the long run.
    const TrainTrace& cell = ref.grid->cells[ref.grid->best_index].trace;
    if (cell.best_objective < trace.best_objective) {
      trace.best_objective = cell.best_objective;
      trace.best_theta = cell.best_theta;
    }
  }
  if (!std::isfinite(trace.best_objective)) throw NoReference("reference_optimum: run produced no finite objective");
  ref.theta = trace.best_theta;
  ref.objective = trace.best_objective;
  ref.passes = trace.passes();
  return ref;
}

inline ReferenceOptimum reference_optimum(const LossModel& m, const DataSet& d, const RunContext& ctx,
                                          const ReferenceOptions& opts) {
  return std::visit([&](const auto& l) { return reference_optimum(l, d, ctx, opts); }, m);
}
inline GridSearchResult grid_search_step(const LossModel& m, const DataSet& d, const AlgorithmSettings& s,
                                         const RunContext& ctx, const std::vector<double>& grid, double passes,
                                         std::uint64_t seed) {
  return std::visit([&](const auto& l) { return grid_search_step(l, d, s, ctx, grid, passes, seed); }, m);
}
inline TrainTrace run_algorithm(const LossModel& m, const DataSet& d, const AlgorithmSettings& s,
                                const RunContext& ctx, double passes, std::uint64_t seed, const Vector& t0 = {}) {
  return std::visit([&](const auto& l) { return run_algorithm(l, d, s, ctx, passes, seed, t0); }, m);
}

}  // namespace ncvr
