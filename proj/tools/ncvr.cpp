// ncvr command-line front end.
//
//   ncvr gen       --config c.json [--out data.csv]
//   ncvr fit       --config c.json --algorithm svrg [--step 0.01] [--reference ref.json]
//   ncvr sweep     --config c.json
//   ncvr landscape --config c.json
//   ncvr reference --config c.json
//
// Every subcommand accepts --seed, --out-dir and --passes overrides.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ncvr/ncvr.hpp"

namespace fs = std::filesystem;
using namespace ncvr;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<double> passes;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "override the config seed");
  sub->add_option("--out-dir", c.out_dir, "override the output directory");
  sub->add_option("--passes", c.passes, "override the pass budget");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_experiment_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.out_dir) cfg.out_dir = *c.out_dir;
  if (c.passes) cfg.passes = *c.passes;
  cfg.validate();
  return cfg;
}

// Writes to out_dir/name when an output directory is set, else to stdout.
void emit(const ExperimentConfig& cfg, const std::string& name, const std::string& text) {
  if (cfg.out_dir.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(cfg.out_dir);
  write_text_file(fs::path(cfg.out_dir) / name, text);
  std::cerr << "wrote " << (fs::path(cfg.out_dir) / name).string() << "\n";
}

void print_summary(const ExperimentResult& r) {
  std::printf("reference objective %s%s\n", format_double(r.reference.objective).c_str(),
              r.reference_improved ? " (improved by a benchmark run)" : "");
  for (const auto& o : r.outcomes) {
    if (!o.ok) {
      std::printf("%-10s failed: %s\n", o.settings.name().c_str(), o.error.c_str());
      continue;
    }
    std::printf("%-10s step %-12s passes %-8s final gap %.3e\n", o.settings.name().c_str(),
                format_double(o.step).c_str(), format_double(o.trace.passes()).c_str(),
                *o.trace.rows.back().objective_gap);
  }
}

int cmd_gen(const Common& common, const std::string& out) {
  const ExperimentConfig cfg = load(common);
  if (!cfg.synthetic) throw InvalidParameter("gen: config has no synthetic data source");
  const DataSet data = build_dataset(cfg);
  std::ostringstream csv;
  write_dataset_csv(csv, data);
  if (!out.empty()) {
    write_text_file(out, csv.str());
    std::cerr << "wrote " << out << " (" << data.size() << " x " << data.dim() << ")\n";
  } else {
    emit(cfg, "data.csv", csv.str());
  }
  return 0;
}

int cmd_fit(const Common& common, const std::string& algorithm, std::optional<double> step,
            const std::string& reference_path) {
  ExperimentConfig cfg = load(common);
  AlgorithmSettings s;
  s.kind = parse_algorithm(algorithm);
  for (const auto& a : cfg.algorithms) {
    if (a.kind == s.kind) s = a;  // keep per-algorithm settings from the config
  }
  if (step) s.step = step;
  cfg.algorithms = {s};
  std::optional<ReferenceOptimum> ref;
  if (!reference_path.empty()) {
    std::ifstream in(reference_path);
    if (!in) throw InvalidParameter("cannot open reference '" + reference_path + "'");
    ref = reference_from_json(json::parse(in));
  }
  const ExperimentResult r = run_experiment(cfg, ref ? &*ref : nullptr);
  print_summary(r);
  return r.outcomes.front().ok ? 0 : 3;
}

int cmd_sweep(const Common& common) {
  const ExperimentResult r = run_experiment(load(common));
  print_summary(r);
  for (const auto& o : r.outcomes) {
    if (!o.ok) return 3;
  }
  return 0;
}

int cmd_landscape(const Common& common) {
  const ExperimentConfig cfg = load(common);
  if (!cfg.synthetic) throw InvalidParameter("landscape: needs a synthetic data source (the population is simulated)");
  const DataSet data = build_dataset(cfg);
  const LossModel model = make_loss(cfg.family, cfg.tukey_t0);
  const auto seed = derive_seed(cfg.seed, seed_stream::data);
  const LandscapeReport rep = landscape_report(model, cfg.synthetic->spec, data, seed, cfg.landscape);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  emit(cfg, "landscape.json", landscape_report_to_json(rep).dump(2) + "\n");
  return 0;
}

int cmd_reference(const Common& common) {
  const ExperimentConfig cfg = load(common);
  const LossModel model = make_loss(cfg.family, cfg.tukey_t0);
  const DataSet data = build_dataset(cfg);
  check_targets(model, data);
  const RunContext ctx = make_run_context(model, data, cfg);
  const ReferenceOptimum ref = reference_optimum(model, data, ctx, reference_options(cfg));
  emit(cfg, "reference.json", reference_to_json(ref).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ncvr: non-convex M-estimation with variance-reduced solvers"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common gen_c, fit_c, sweep_c, land_c, ref_c;
  std::string gen_out, fit_algorithm, fit_reference;
  std::optional<double> fit_step;

  auto* gen = app.add_subcommand("gen", "write the configured synthetic data set as CSV");
  add_common(gen, gen_c);
  gen->add_option("-o,--out", gen_out, "CSV path (default: out_dir/data.csv, or stdout)");

  auto* fit = app.add_subcommand("fit", "run a single algorithm");
  add_common(fit, fit_c);
  fit->add_option("-a,--algorithm", fit_algorithm, "gd, sgd, svrg or saga")->required();
  fit->add_option("--step", fit_step, "fixed step size (skips the grid search)");
  fit->add_option("--reference", fit_reference, "stored reference.json to measure gaps against")
      ->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "run every configured algorithm");
  add_common(sweep, sweep_c);

  auto* land = app.add_subcommand("landscape", "estimate landscape constants");
  add_common(land, land_c);

  auto* ref = app.add_subcommand("reference", "compute and store the reference optimum");
  add_common(ref, ref_c);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen(gen_c, gen_out);
    if (*fit) return cmd_fit(fit_c, fit_algorithm, fit_step, fit_reference);
    if (*sweep) return cmd_sweep(sweep_c);
    if (*land) return cmd_landscape(land_c);
    if (*ref) return cmd_reference(ref_c);
  } catch (const std::exception& e) {
    std::cerr << "ncvr: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
