#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ncvr/dataset.hpp"
#include "ncvr/errors.hpp"
#include "ncvr/format.hpp"
#include "ncvr/losses.hpp"
#include "ncvr/types.hpp"

namespace ncvr {

struct TraceRow {
  double pass = 0.0;  ///< sample-gradient evaluations / n
  double objective = 0.0;
  double grad_norm = 0.0;
  double wall_ms = 0.0;
  std::optional<double> objective_gap;
};

/// Record of one optimizer run.
struct TrainTrace {
  std::string algorithm;
  std::vector<TraceRow> rows;
  Vector final_theta;
  /// Iterate with the lowest recorded objective.
  Vector best_theta;
  double best_objective = std::numeric_limits<double>::infinity();
  std::uint64_t gradient_evaluations = 0;
  std::map<std::string, std::string> config;

  double final_objective() const {
    return rows.empty() ? std::numeric_limits<double>::quiet_NaN() : rows.back().objective;
  }
  double passes() const { return rows.empty() ? 0.0 : rows.back().pass; }
};

/// Raised when the objective or gradient norm stops being finite. Carries
/// the rows recorded before the failure.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, TrainTrace partial)
      : std::runtime_error(what), trace_(std::move(partial)) {}

  const TrainTrace& trace() const noexcept { return trace_; }

 private:
  TrainTrace trace_;
};

/// Appends monitoring rows (full objective and gradient norm, not counted
/// as gradient evaluations) and enforces strictly increasing pass counts.
template <MarginLoss L>
class TraceRecorder {
 public:
  TraceRecorder(const L& loss, const DataSet& data, TrainTrace& trace)
      : loss_(loss), data_(data), trace_(trace), start_(std::chrono::steady_clock::now()) {}

  /// Records theta at the given evaluation count. Returns the gradient norm,
  /// or nullopt if a row at this pass already exists.
  std::optional<double> record(std::uint64_t evaluations, const Vector& theta) {
    const double pass = static_cast<double>(evaluations) / static_cast<double>(data_.size());
    if (!trace_.rows.empty() && pass <= trace_.rows.back().pass) return std::nullopt;
    if (!theta.allFinite()) diverged(pass);
    TraceRow row;
    row.pass = pass;
    row.objective = batch_objective(loss_, theta, data_);
    row.grad_norm = batch_gradient(loss_, theta, data_).norm();
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    trace_.gradient_evaluations = evaluations;
    if (!std::isfinite(row.objective) || !std::isfinite(row.grad_norm)) diverged(pass);
    trace_.rows.push_back(row);
    const auto n = static_cast<std::uint64_t>(data_.size());
    next_ = (evaluations / n + 1) * n;
    last_theta_ = theta;
    if (row.objective < trace_.best_objective) {
      trace_.best_objective = row.objective;
      trace_.best_theta = theta;
    }
    return row.grad_norm;
  }

  /// Records once per full pass worth of evaluations.
  void record_if_pass_complete(std::uint64_t evaluations, const Vector& theta) {
    if (evaluations >= next_) record(evaluations, theta);
  }

  /// Runs the iteration loop. Once inputs have been validated, an
  /// InvalidInput from inside the loop can only come from overflow (a
  /// non-finite margin), so it is reported as divergence.
  template <class Body>
  void run(Body&& body) {
    try {
      body();
    } catch (const InvalidInput& e) {
      trace_.final_theta = last_theta_;
      throw DivergenceError(trace_.algorithm + ": iterate overflowed (" + e.what() + ")", trace_);
    }
  }

 private:
  [[noreturn]] void diverged(double pass) {
    trace_.final_theta = last_theta_;
    throw DivergenceError(trace_.algorithm + ": non-finite objective or gradient at pass " + format_double(pass),
                          trace_);
  }

  const L& loss_;
  const DataSet& data_;
  TrainTrace& trace_;
  std::chrono::steady_clock::time_point start_;
  std::uint64_t next_ = 0;
  Vector last_theta_;
};

inline constexpr const char* kTraceCsvHeader = "pass,objective,objective_gap,grad_norm,wall_ms";

/// Trace CSV: header line, LF endings, round-trip decimal values. An absent
/// gap, or wall time when include_wall_time is false, is an empty field.
inline void write_trace_csv(std::ostream& out, const TrainTrace& trace, bool include_wall_time = true) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : trace.rows) {
    out << format_double(r.pass) << ',' << format_double(r.objective) << ',';
    if (r.objective_gap) out << format_double(*r.objective_gap);
    out << ',' << format_double(r.grad_norm) << ',';
    if (include_wall_time) out << format_double(r.wall_ms);
    out << '\n';
  }
}

}  // namespace ncvr
