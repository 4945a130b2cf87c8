#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ncvr/datagen.hpp"
#include "ncvr/dataset.hpp"
#include "ncvr/errors.hpp"
#include "ncvr/harness/io.hpp"
#include "ncvr/harness/search.hpp"
#include "ncvr/landscape.hpp"
#include "ncvr/losses.hpp"
#include "ncvr/optim.hpp"
#include "ncvr/version.hpp"

namespace ncvr {

using json = nlohmann::json;

/// Gaps are floored here so log-scale plots stay finite.
inline constexpr double kGapFloor = 1e-16;

struct SyntheticSource {
  SyntheticSpec spec;
  Index n = 1000;
};

struct FileSource {
  std::string path;
  LoadOptions load;
  bool normalize = false;
};

struct ExperimentConfig {
  Family family = Family::BinaryClassification;
  double tukey_t0 = 4.865;
  /// Infinite: unconstrained.
  double radius = std::numeric_limits<double>::infinity();
  std::optional<SyntheticSource> synthetic;
  std::optional<FileSource> file;
  std::optional<NoiseSpec> corruption;
  std::vector<AlgorithmSettings> algorithms;
  bool grid_search = true;
  std::vector<double> step_grid = power_of_two_grid();
  /// Defaults to `passes`.
  std::optional<double> grid_passes;
  double passes = 100;
  double reference_passes = 1000;
  double cond_guess = 10.0;
  int smoothness_probes = 4;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool record_wall_time = true;
  LandscapeOptions landscape;

  void validate() const {
    if (algorithms.empty()) throw InvalidParameter("ExperimentConfig: at least one algorithm is required");
    if (!synthetic && !file) throw InvalidParameter("ExperimentConfig: no data source");
    if (synthetic && file) throw InvalidParameter("ExperimentConfig: choose either synthetic or file data");
    for (const double s : step_grid) {
      if (!(s > 0.0)) throw InvalidParameter("ExperimentConfig: grid steps must be strictly positive");
    }
    if (grid_search && step_grid.empty()) throw InvalidParameter("ExperimentConfig: empty step grid");
    if (!(radius > 0.0)) throw InvalidParameter("ExperimentConfig: radius must be positive (omit it for no constraint)");
    if (!(tukey_t0 > 0.0) || !std::isfinite(tukey_t0)) throw InvalidParameter("ExperimentConfig: tukey_t0 must be positive");
    if (!(passes >= 1.0) || !(reference_passes >= 1.0)) throw InvalidParameter("ExperimentConfig: passes must be >= 1");
  }
};

/// Stream identifiers for derive_seed.
namespace seed_stream {
inline constexpr std::uint64_t data = 1;
inline constexpr std::uint64_t corruption = 2;
inline constexpr std::uint64_t reference = 3;
inline constexpr std::uint64_t smoothness = 4;
}  // namespace seed_stream

/// Stable per-label stream id (FNV-1a), so seeds do not depend on list order.
inline std::uint64_t label_stream(const std::string& label) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// JSON config
// ---------------------------------------------------------------------------

namespace detail {

inline double radius_from_json(const json& j) {
  if (!j.contains("radius") || j["radius"].is_null()) return std::numeric_limits<double>::infinity();
  return j["radius"].get<double>();
}

inline CovarianceSpec covariance_from_json(const json& j, Index p) {
  CovarianceSpec c;
  c.p = p;
  c.cond_ratio = j.value("cond_ratio", 1.0);
  c.scale = j.value("scale", 1.0);
  c.rotate = j.value("rotate", false);
  c.seed = j.value("cov_seed", std::uint64_t{0});
  return c;
}

inline NoiseSpec noise_from_json(const json& j) {
  NoiseSpec n;
  n.delta = j.value("delta", 0.0);
  n.sigma = j.value("sigma", 1.0);
  n.validate();
  return n;
}

inline AlgorithmSettings algorithm_from_json(const json& j) {
  AlgorithmSettings s;
  if (j.is_string()) {
    s.kind = parse_algorithm(j.get<std::string>());
    return s;
  }
  s.kind = parse_algorithm(j.at("name").get<std::string>());
  s.label = j.value("label", std::string{});
  if (j.contains("step")) s.step = j["step"].get<double>();
  if (j.contains("m")) s.m = j["m"].get<std::uint64_t>();
  if (j.contains("b")) s.b = j["b"].get<std::uint64_t>();
  s.restarts = j.value("restarts", std::uint64_t{1});
  if (s.restarts < 1) throw InvalidParameter("algorithm restarts must be >= 1");
  s.mode = parse_output_mode(j.value("output", std::string("last")));
  return s;
}

}  // namespace detail

/// Parses the experiment JSON document. Unknown keys are ignored.
inline ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  c.family = parse_family(j.at("family").get<std::string>());
  c.tukey_t0 = j.value("tukey_t0", 4.865);
  c.radius = detail::radius_from_json(j);
  const json& data = j.at("data");
  if (data.contains("synthetic")) {
    const json& s = data["synthetic"];
    SyntheticSource src;
    src.n = s.at("n").get<Index>();
    src.spec.family = c.family;
    src.spec.cov = detail::covariance_from_json(s, s.at("p").get<Index>());
    src.spec.theta_seed = s.value("theta_seed", std::uint64_t{0});
    if (s.contains("noise")) src.spec.noise = detail::noise_from_json(s["noise"]);
    c.synthetic = src;
  }
  if (data.contains("file")) {
    const json& f = data["file"];
    FileSource src;
    src.path = f.at("path").get<std::string>();
    src.load.format = parse_data_format(f.value("format", std::string("csv")));
    src.load.family = c.family;
    if (f.contains("target_column")) src.load.target_column = f["target_column"].get<std::string>();
    if (f.contains("class_filter")) {
      const auto cf = f["class_filter"].get<std::vector<double>>();
      if (cf.size() != 2) throw InvalidParameter("class_filter must list [positive, negative]");
      src.load.class_filter = std::make_pair(cf[0], cf[1]);
    }
    src.load.dim = f.value("dim", Index{0});
    src.normalize = f.value("normalize", false);
    c.file = src;
  }
  if (j.contains("corruption") && !j["corruption"].is_null()) c.corruption = detail::noise_from_json(j["corruption"]);
  for (const auto& a : j.at("algorithms")) c.algorithms.push_back(detail::algorithm_from_json(a));
  c.grid_search = j.value("grid_search", true);
  if (j.contains("step_grid")) c.step_grid = j["step_grid"].get<std::vector<double>>();
  if (j.contains("grid_passes")) c.grid_passes = j["grid_passes"].get<double>();
  c.passes = j.value("passes", 100.0);
  c.reference_passes = j.value("reference_passes", 1000.0);
  c.cond_guess = j.value("cond_guess", 10.0);
  c.smoothness_probes = j.value("smoothness_probes", 4);
  c.out_dir = j.value("out_dir", std::string{});
  c.seed = j.value("seed", std::uint64_t{0});
  c.record_wall_time = j.value("record_wall_time", true);
  if (j.contains("landscape")) {
    const json& l = j["landscape"];
    LandscapeOptions& o = c.landscape;
    o.radius = l.value("radius", std::isfinite(c.radius) ? c.radius : o.radius);
    if (l.contains("radii")) o.grid.radii = l["radii"].get<std::vector<double>>();
    o.grid.directions = l.value("directions", o.grid.directions);
    o.grid.seed = l.value("probe_seed", o.grid.seed);
    o.n_pop = l.value("n_pop", o.n_pop);
    o.population_seed = l.value("population_seed", o.population_seed);
    o.kappa_radius = l.value("kappa_radius", o.kappa_radius);
    o.kappa_probes = l.value("kappa_probes", o.kappa_probes);
    o.kappa_seed = l.value("kappa_seed", o.kappa_seed);
    o.hessian = l.value("hessian", o.hessian);
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open config '" + path + "'");
  return experiment_config_from_json(json::parse(in));
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

/// Builds or loads the data set the config describes.
inline DataSet build_dataset(const ExperimentConfig& c) {
  std::optional<DataSet> data;
  if (c.synthetic) {
    data = make_synthetic(c.synthetic->spec, c.synthetic->n, derive_seed(c.seed, seed_stream::data));
  } else {
    data = load_dataset(c.file->path, c.file->load);
    if (c.file->normalize) data = normalize_features(*data);
  }
  if (c.corruption) data = corrupt_targets(*data, *c.corruption, derive_seed(c.seed, seed_stream::corruption));
  return std::move(*data);
}

inline RunContext make_run_context(const LossModel& model, const DataSet& data, const ExperimentConfig& c,
                                   double* smoothness_out = nullptr) {
  SmoothnessOptions so;
  so.probes = c.smoothness_probes;
  so.radius = std::isfinite(c.radius) ? c.radius : 1.0;
  so.seed = derive_seed(c.seed, seed_stream::smoothness);
  double smooth = smoothness_estimate(model, data, so);
  if (!(smooth > 0.0)) smooth = 1.0;  // all-flat data: any positive scale works
  if (smoothness_out) *smoothness_out = smooth;
  RunContext ctx;
  ctx.defaults = default_hyperparams(family_of(model), static_cast<std::uint64_t>(data.size()), smooth, c.cond_guess);
  ctx.constraint = BallConstraint{c.radius};
  return ctx;
}

inline ReferenceOptions reference_options(const ExperimentConfig& c) {
  ReferenceOptions o;
  o.passes = c.reference_passes;
  o.seed = derive_seed(c.seed, seed_stream::reference);
  if (c.grid_search) o.grid = c.step_grid;
  o.grid_passes = c.grid_passes.value_or(c.passes);
  return o;
}

struct AlgorithmOutcome {
  AlgorithmSettings settings;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double step = 0.0;
  std::optional<GridSearchResult> grid;
  TrainTrace trace;
};

struct ExperimentResult {
  ReferenceOptimum reference;
  /// min(reference, every recorded objective); gaps are measured against it.
  double gap_baseline = 0.0;
  bool reference_improved = false;
  double smoothness = 0.0;
  std::vector<AlgorithmOutcome> outcomes;
  json summary;
};

inline json grid_to_json(const GridSearchResult& g) {
  json cells = json::array();
  for (const auto& c : g.cells) {
    json cell{{"step", c.step}, {"diverged", c.diverged}};
    cell["final_objective"] = c.diverged ? json(nullptr) : json(c.final_objective);
    cells.push_back(cell);
  }
  return json{{"best_step", g.best_step}, {"cells", cells}};
}

inline std::string trace_file_name(const std::string& label) { return "trace_" + label + ".csv"; }

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

/// Full protocol: data, reference optimum, per-algorithm grid search and
/// budgeted run, gap computation, then trace CSVs and summary.json in
/// out_dir (when set). Per-algorithm failures land in the summary; only a
/// failed reference is fatal. A stored `reference` skips the reference run.
inline ExperimentResult run_experiment(const ExperimentConfig& c, const ReferenceOptimum* reference = nullptr) {
  c.validate();
  const LossModel model = make_loss(c.family, c.tukey_t0);
  const DataSet data = build_dataset(c);
  check_targets(model, data);

  ExperimentResult res;
  const RunContext ctx = make_run_context(model, data, c, &res.smoothness);
  const auto wall_start = std::chrono::steady_clock::now();
  if (reference) {
    if (reference->theta.size() != data.dim()) {
      throw InvalidInput("run_experiment: stored reference has dimension " + std::to_string(reference->theta.size()) +
                         ", data has " + std::to_string(data.dim()));
    }
    res.reference = *reference;
  } else {
    res.reference = reference_optimum(model, data, ctx, reference_options(c));
  }

  const double grid_passes = c.grid_passes.value_or(c.passes);
  std::vector<std::future<AlgorithmOutcome>> jobs;
  for (const auto& s : c.algorithms) {
    jobs.push_back(std::async(std::launch::async, [&, s] {
      AlgorithmOutcome out;
      out.settings = s;
      out.seed = derive_seed(c.seed, label_stream(s.name()));
      try {
        AlgorithmSettings run = s;
        if (c.grid_search && !s.step) {
          out.grid = grid_search_step(model, data, s, ctx, c.step_grid, grid_passes, out.seed);
          run.step = out.grid->best_step;
        }
        if (out.grid && grid_passes == c.passes) {
          // Same budget and seed: the winning cell is the full run.
          out.trace = out.grid->cells[out.grid->best_index].trace;
          out.trace.algorithm = s.name();
        } else {
          out.trace = run_algorithm(model, data, run, ctx, c.passes, out.seed);
        }
        out.step = run.step.value_or(default_step(ctx, s.kind));
        out.ok = true;
      } catch (const DivergenceError& e) {
        out.error = e.what();
        out.trace = e.trace();
      } catch (const std::exception& e) {
        out.error = e.what();
      }
      return out;
    }));
  }
  for (auto& j : jobs) res.outcomes.push_back(j.get());

  res.gap_baseline = res.reference.objective;
  for (const auto& o : res.outcomes) {
    for (const auto& r : o.trace.rows) res.gap_baseline = std::min(res.gap_baseline, r.objective);
  }
  res.reference_improved = res.gap_baseline < res.reference.objective;
  for (auto& o : res.outcomes) {
    for (auto& r : o.trace.rows) r.objective_gap = std::max(r.objective - res.gap_baseline, kGapFloor);
  }
  const double total_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall_start).count();

  json algos = json::object();
  for (const auto& o : res.outcomes) {
    json a{{"algorithm", algorithm_name(o.settings.kind)},
           {"status", o.ok ? "ok" : "failed"},
           {"seed", o.seed},
           {"step", o.step},
           {"trace_file", trace_file_name(o.settings.name())}};
    if (!o.error.empty()) a["error"] = o.error;
    if (o.grid) a["grid"] = grid_to_json(*o.grid);
    if (!o.trace.rows.empty()) {
      a["final_objective"] = o.trace.final_objective();
      a["final_gap"] = *o.trace.rows.back().objective_gap;
      a["passes"] = o.trace.passes();
      a["gradient_evaluations"] = o.trace.gradient_evaluations;
      a["config"] = o.trace.config;
      if (c.record_wall_time) a["wall_ms"] = o.trace.rows.back().wall_ms;
    }
    algos[o.settings.name()] = a;
  }
  json ref{{"objective", res.reference.objective},
           {"passes", res.reference.passes},
           {"step", res.reference.step},
           {"seed", res.reference.seed},
           {"improved_by_benchmark", res.reference_improved},
           {"gap_baseline", res.gap_baseline}};
  if (res.reference.grid) ref["grid"] = grid_to_json(*res.reference.grid);
  res.summary = json{{"version", kVersion},
                     {"family", family_name(c.family)},
                     {"n", data.size()},
                     {"p", data.dim()},
                     {"seed", c.seed},
                     {"passes", c.passes},
                     {"radius", std::isfinite(c.radius) ? json(c.radius) : json(nullptr)},
                     {"smoothness_estimate", res.smoothness},
                     {"data", data.meta()},
                     {"reference", ref},
                     {"algorithms", algos}};
  if (c.record_wall_time) res.summary["wall_ms"] = total_ms;

  if (!c.out_dir.empty()) {
    std::filesystem::create_directories(c.out_dir);
    for (const auto& o : res.outcomes) {
      std::ostringstream csv;
      write_trace_csv(csv, o.trace, c.record_wall_time);
      write_text_file(std::filesystem::path(c.out_dir) / trace_file_name(o.settings.name()), csv.str());
    }
    write_text_file(std::filesystem::path(c.out_dir) / "summary.json", res.summary.dump(2) + "\n");
  }
  return res;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline std::string iso8601_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json landscape_report_to_json(const LandscapeReport& r, const std::string& timestamp = iso8601_now()) {
  const auto& o = r.options;
  return json{{"grad_dev_sup", r.grad_dev_sup},
              {"hess_dev_sup", r.hess_dev_sup},
              {"mu0_hat", r.mu0_hat},
              {"kappa0_hat", r.kappa0_hat},
              {"grad_mc_stderr", r.grad_mc_stderr},
              {"n", r.n},
              {"p", r.p},
              {"n_pop", r.n_pop},
              {"grid",
               {{"radius", o.radius},
                {"radii", o.grid.radii},
                {"directions", o.grid.directions},
                {"probe_count", r.probe_count},
                {"kappa_radius", o.kappa_radius},
                {"kappa_probes", o.kappa_probes},
                {"sup_is_lower_bound", true}}},
              {"seeds",
               {{"data", r.data_seed},
                {"probe", o.grid.seed},
                {"population", o.population_seed},
                {"kappa", o.kappa_seed}}},
              {"warnings", r.warnings},
              {"timestamp", timestamp},
              {"version", kVersion}};
}

inline json reference_to_json(const ReferenceOptimum& r) {
  return json{{"objective", r.objective},
              {"passes", r.passes},
              {"step", r.step},
              {"seed", r.seed},
              {"theta", std::vector<double>(r.theta.data(), r.theta.data() + r.theta.size())},
              {"version", kVersion}};
}

inline ReferenceOptimum reference_from_json(const json& j) {
  ReferenceOptimum r;
  r.objective = j.at("objective").get<double>();
  r.passes = j.value("passes", 0.0);
  r.step = j.value("step", 0.0);
  r.seed = j.value("seed", std::uint64_t{0});
  const auto theta = j.at("theta").get<std::vector<double>>();
  if (theta.empty()) throw InvalidInput("reference: empty theta");
  r.theta = Eigen::Map<const Vector>(theta.data(), static_cast<Index>(theta.size()));
  return r;
}

}  // namespace ncvr
