#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "test_util.hpp"

using namespace ncvr;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) { return std::string(NCVR_FIXTURE_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ncvr_test_" + name);
  fs::remove_all(p);
  return p;
}

double variance(const Vector& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

DataSet classification_cond10(Index n) {
  SyntheticSpec s;
  s.cov.p = 50;
  s.cov.cond_ratio = 10;
  s.cov.scale = 4;
  s.cov.seed = 3;
  s.theta_seed = 11;
  return make_synthetic(s, n, 5);
}

RunContext context_for(const LossModel& m, const DataSet& d, double radius = INFINITY) {
  ExperimentConfig c;
  c.radius = radius;
  return make_run_context(m, d, c);
}

ExperimentConfig small_config(const std::string& out_dir) {
  const json j = json::parse(R"({
    "family": "classification",
    "data": {"synthetic": {"n": 100, "p": 5, "theta_seed": 3}},
    "algorithms": ["gd"],
    "passes": 10,
    "reference_passes": 50,
    "seed": 4,
    "record_wall_time": false
  })");
  ExperimentConfig c = experiment_config_from_json(j);
  c.out_dir = out_dir;
  return c;
}

}  // namespace

TEST(Libsvm, ParsesSparseRows) {
  LoadOptions o;
  o.format = DataFormat::Libsvm;
  o.dim = 3;
  const DataSet d = load_dataset(fixture("tiny.libsvm"), o);
  ASSERT_EQ(d.size(), 3);
  ASSERT_EQ(d.dim(), 3);
  EXPECT_EQ(Vector(d.x(0)), (Vector(3) << 0.5, 0.0, -2.0).finished());
  EXPECT_EQ(d.y(0), 1.0);
  EXPECT_EQ(Vector(d.x(1)), (Vector(3) << 0.0, 1.25, 0.0).finished());
  EXPECT_EQ(d.y(1), 0.0);
  EXPECT_EQ(d.meta().at("format"), "libsvm");
}

TEST(Libsvm, InfersDimension) {
  std::istringstream in("+1 1:0.5 3:-2\n");
  LoadOptions o;
  o.format = DataFormat::Libsvm;
  EXPECT_EQ(read_libsvm(in, o).dim(), 3);
}

TEST(Libsvm, RejectsMultiClassWithoutFilter) {
  LoadOptions o;
  o.format = DataFormat::Libsvm;
  EXPECT_THROW(load_dataset(fixture("multiclass.libsvm"), o), InvalidData);
  o.class_filter = std::make_pair(1.0, 2.0);
  const DataSet d = load_dataset(fixture("multiclass.libsvm"), o);
  ASSERT_EQ(d.size(), 3);
  EXPECT_EQ(d.targets(), (Vector(3) << 1.0, 0.0, 1.0).finished());
  EXPECT_EQ(d.dim(), 2);
}

TEST(Libsvm, ParseErrorsCarryLineNumbers) {
  LoadOptions o;
  o.format = DataFormat::Libsvm;
  try {
    load_dataset(fixture("unordered.libsvm"), o);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream bad("+1 1:abc\n");
  EXPECT_THROW(read_libsvm(bad, o), ParseError);
  std::istringstream zero("+1 0:1\n");
  EXPECT_THROW(read_libsvm(zero, o), ParseError);
  EXPECT_THROW(load_dataset(fixture("missing.libsvm"), o), InvalidData);
}

TEST(Csv, TargetColumn) {
  LoadOptions o;
  o.family = Family::RobustRegression;
  o.target_column = "y";
  const DataSet d = load_dataset(fixture("tiny.csv"), o);
  ASSERT_EQ(d.size(), 3);
  EXPECT_EQ(Vector(d.x(0)), (Vector(2) << 1.0, 2.0).finished());
  EXPECT_EQ(d.y(0), 3.0);
  EXPECT_EQ(d.y(2), 0.7);

  LoadOptions mid;
  mid.target_column = "y";
  const DataSet m = load_dataset(fixture("target_middle.csv"), mid);
  EXPECT_EQ(Vector(m.x(1)), (Vector(2) << 3.0, 4.0).finished());
  EXPECT_EQ(m.targets(), (Vector(2) << 1.0, 0.0).finished());

  mid.target_column = "nope";
  EXPECT_THROW(load_dataset(fixture("target_middle.csv"), mid), InvalidData);
  std::istringstream ragged("a,y\n1,2,3\n");
  EXPECT_THROW(read_csv(ragged, o), ParseError);
}

TEST(Csv, RoundTrip) {
  const DataSet d = ncvr::testing::random_data(Family::RobustRegression, 40, 6, 7);
  std::stringstream buf;
  write_dataset_csv(buf, d);
  LoadOptions o;
  o.family = Family::RobustRegression;
  const DataSet back = read_csv(buf, o);
  EXPECT_LE((back.features() - d.features()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((back.targets() - d.targets()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Normalize, AffineEndpointsAndConstantColumns) {
  RowMatrix x(3, 2);
  x << 0, 7, 5, 7, 10, 7;
  const DataSet n = normalize_features(DataSet(x, Vector::Zero(3)));
  EXPECT_EQ(Vector(n.features().col(0)), (Vector(3) << -1.0, 0.0, 1.0).finished());
  EXPECT_TRUE(n.features().col(1).isZero(0.0));
  EXPECT_EQ(n.meta().at("normalization_min_max"), "0:10;7:7");
}

TEST(Corrupt, NoiseVariancesAndDeterminism) {
  const DataSet d(RowMatrix::Ones(10000, 1), Vector::Zero(10000));
  const DataSet clean = corrupt_targets(d, {0.0, 9.0}, 1);
  EXPECT_GE(variance(clean.targets()), 0.9);
  EXPECT_LE(variance(clean.targets()), 1.1);
  const DataSet noisy = corrupt_targets(d, {0.1, 5.0}, 2);
  EXPECT_GE(variance(noisy.targets()), 3.06);
  EXPECT_LE(variance(noisy.targets()), 3.74);
  EXPECT_EQ(corrupt_targets(d, {0.1, 5.0}, 2).targets(), noisy.targets());
}

TEST(Reference, LeastSquaresRegime) {
  // With a huge cutoff every residual sits deep inside the quadratic part of
  // rho, so the optimum is the least-squares fit.
  SyntheticSpec s;
  s.family = Family::RobustRegression;
  s.cov.p = 5;
  s.theta_seed = 8;
  const DataSet d = make_synthetic(s, 200, 9);
  const LossModel m = make_loss(Family::RobustRegression, 100.0);
  const Matrix xtx = d.features().transpose() * d.features();
  const Vector ls = xtx.ldlt().solve(d.features().transpose() * d.targets());
  const double at_ls = batch_objective(m, ls, d);

  ReferenceOptions o;
  o.passes = 1000;
  o.seed = 1;
  o.grid = power_of_two_grid();
  o.grid_passes = 50;
  const ReferenceOptimum r = reference_optimum(m, d, context_for(m, d), o);
  EXPECT_NEAR(r.objective, at_ls, 1e-8);
  EXPECT_LE(r.objective, at_ls + 1e-12);
}

TEST(Reference, MorePassesNeverWorse) {
  const DataSet d = classification_cond10(300);
  const LossModel m = make_loss(Family::BinaryClassification);
  const RunContext ctx = context_for(m, d);
  ReferenceOptions o;
  o.seed = 3;
  o.passes = 50;
  const double short_run = reference_optimum(m, d, ctx, o).objective;
  o.passes = 200;
  const ReferenceOptimum long_run = reference_optimum(m, d, ctx, o);
  EXPECT_LE(long_run.objective, short_run);
  EXPECT_EQ(reference_optimum(m, d, ctx, o).objective, long_run.objective);
  EXPECT_NEAR(batch_objective(m, long_run.theta, d), long_run.objective, 0.0);
}

TEST(GridSearch, SingleElementAndExclusion) {
  SyntheticSpec s;
  s.family = Family::RobustRegression;
  s.cov.p = 4;
  s.cov.scale = 100;  // large features so a huge step overflows
  const DataSet d = make_synthetic(s, 100, 10);
  const LossModel m = make_loss(Family::RobustRegression);
  const RunContext ctx = context_for(m, d);
  AlgorithmSettings gd;
  gd.kind = Algorithm::GD;
  EXPECT_EQ(grid_search_step(m, d, gd, ctx, {0.125}, 5, 0).best_step, 0.125);

  const GridSearchResult g = grid_search_step(m, d, gd, ctx, {0.001, 1e308}, 5, 0);
  EXPECT_EQ(g.best_step, 0.001);
  EXPECT_TRUE(g.cells[1].diverged);
  EXPECT_THROW(grid_search_step(m, d, gd, ctx, {1e308}, 5, 0), NoViableStep);
  EXPECT_THROW(grid_search_step(m, d, gd, ctx, {}, 5, 0), InvalidParameter);
  EXPECT_THROW(grid_search_step(m, d, gd, ctx, {-1.0}, 5, 0), InvalidParameter);

  ReferenceOptions o;
  o.grid = {1e308};
  o.grid_passes = 5;
  EXPECT_THROW(reference_optimum(m, d, ctx, o), NoReference);
}

TEST(GridSearch, TiesGoToTheLargerStep) {
  // Zero features: every step yields the same objective.
  const DataSet d(RowMatrix::Zero(5, 2), Vector::Ones(5));
  const LossModel m = make_loss(Family::BinaryClassification);
  AlgorithmSettings gd;
  gd.kind = Algorithm::GD;
  EXPECT_EQ(grid_search_step(m, d, gd, context_for(m, d), {0.5, 2.0, 1.0}, 3, 0).best_step, 2.0);
}

TEST(GridSearch, SelectedGdStepBeatsSmallestStep) {
  const DataSet d = classification_cond10(2000);
  const LossModel m = make_loss(Family::BinaryClassification);
  AlgorithmSettings gd;
  gd.kind = Algorithm::GD;
  const GridSearchResult g = grid_search_step(m, d, gd, context_for(m, d), power_of_two_grid(), 30, 0);
  EXPECT_GE(g.best_step, std::ldexp(1.0, -10));
  EXPECT_LT(g.cells[g.best_index].final_objective, g.cells.front().final_objective);
}

TEST(Svrg, DefaultEpochLengthReachesHighAccuracy) {
  // Default m and T; the step comes from the grid, as in the comparison runs.
  ExperimentConfig c = load_experiment_config(std::string(NCVR_CONFIG_DIR) + "/classification_cond10.json");
  c.out_dir.clear();
  c.algorithms = {AlgorithmSettings{}};
  c.passes = 100;
  const ExperimentResult r = run_experiment(c);
  ASSERT_TRUE(r.outcomes[0].ok) << r.outcomes[0].error;
  EXPECT_LE(*r.outcomes[0].trace.rows.back().objective_gap, 1e-8);
}

TEST(Budget, EpochAndStepCounts) {
  EXPECT_EQ(svrg_epochs_for_budget(150, 2000, 2500, 1), 66u);
  EXPECT_EQ(svrg_epochs_for_budget(0.5, 2000, 2500, 1), 1u);
  EXPECT_EQ(saga_steps_for_budget(150, 2000, 159, 1), (150u * 2000u - 2000u) / 318u);
  EXPECT_EQ(saga_steps_for_budget(10, 100, 10, 2), 20u);
}

TEST(Config, ParsesShippedConfigs) {
  for (const char* name : {"classification_cond10", "classification_cond1000", "robust_regression", "quickstart"}) {
    const ExperimentConfig c = load_experiment_config(std::string(NCVR_CONFIG_DIR) + "/" + name + ".json");
    EXPECT_TRUE(c.synthetic.has_value()) << name;
    EXPECT_FALSE(c.algorithms.empty()) << name;
  }
  const ExperimentConfig r = load_experiment_config(std::string(NCVR_CONFIG_DIR) + "/robust_regression.json");
  EXPECT_EQ(r.family, Family::RobustRegression);
  EXPECT_EQ(r.radius, 10.0);
  EXPECT_EQ(r.synthetic->spec.noise.sigma, 5.0);
  const ExperimentConfig q = load_experiment_config(std::string(NCVR_CONFIG_DIR) + "/quickstart.json");
  EXPECT_EQ(q.algorithms[3].name(), "saga_b8");
  EXPECT_EQ(*q.algorithms[3].b, 8u);
}

TEST(Config, RejectsInvalidDocuments) {
  const auto parse = [](const char* text) { return experiment_config_from_json(json::parse(text)); };
  EXPECT_THROW(parse(R"({"family": "classification", "data": {}, "algorithms": ["gd"]})"), InvalidParameter);
  EXPECT_THROW(parse(R"({"family": "classification", "data": {"synthetic": {"n": 10, "p": 2}},
                         "algorithms": ["adam"]})"),
               InvalidParameter);
  EXPECT_THROW(parse(R"({"family": "classification", "data": {"synthetic": {"n": 10, "p": 2}},
                         "algorithms": []})"),
               InvalidParameter);
  EXPECT_THROW(parse(R"({"family": "classification", "radius": -1,
                         "data": {"synthetic": {"n": 10, "p": 2}}, "algorithms": ["gd"]})"),
               InvalidParameter);
  EXPECT_THROW(parse(R"({"family": "regression", "data": {"synthetic": {"n": 10, "p": 2,
                         "noise": {"delta": 2}}}, "algorithms": ["gd"]})"),
               InvalidParameter);
}

TEST(Experiment, SmokeRunWritesOneTraceAndSummary) {
  const fs::path dir = scratch_dir("smoke");
  const ExperimentResult r = run_experiment(small_config(dir.string()));
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path().filename().string());
  std::sort(files.begin(), files.end());
  EXPECT_EQ(files, (std::vector<std::string>{"summary.json", "trace_gd.csv"}));

  const std::string csv = slurp(dir / "trace_gd.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "pass,objective,objective_gap,grad_norm,wall_ms");
  for (const auto& row : r.outcomes[0].trace.rows) EXPECT_GE(*row.objective_gap, kGapFloor);

  const json summary = json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary["algorithms"]["gd"]["status"], "ok");
  EXPECT_EQ(summary["version"], kVersion);
  EXPECT_FALSE(summary.contains("wall_ms"));
  EXPECT_GE(summary["reference"]["gap_baseline"].get<double>(), 0.0);
  fs::remove_all(dir);
}

TEST(Experiment, RerunIsByteIdentical) {
  const fs::path a = scratch_dir("rerun_a"), b = scratch_dir("rerun_b");
  ExperimentConfig c = small_config(a.string());
  c.algorithms = {AlgorithmSettings{Algorithm::SGD}, AlgorithmSettings{Algorithm::SAGA}};
  run_experiment(c);
  c.out_dir = b.string();
  run_experiment(c);
  for (const char* f : {"trace_sgd.csv", "trace_saga.csv", "summary.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, WallTimeColumnWhenEnabled) {
  const fs::path dir = scratch_dir("wall");
  ExperimentConfig c = small_config(dir.string());
  c.record_wall_time = true;
  const ExperimentResult r = run_experiment(c);
  EXPECT_TRUE(r.summary.contains("wall_ms"));
  std::istringstream lines(slurp(dir / "trace_gd.csv"));
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  EXPECT_NE(line.back(), ',');
  fs::remove_all(dir);
}

TEST(Experiment, StoredReferenceIsUsed) {
  ExperimentConfig c = small_config("");
  const ExperimentResult first = run_experiment(c);
  ReferenceOptimum stored = reference_from_json(json::parse(reference_to_json(first.reference).dump()));
  EXPECT_EQ(stored.objective, first.reference.objective);
  EXPECT_EQ(stored.theta, first.reference.theta);
  const ExperimentResult second = run_experiment(c, &stored);
  EXPECT_EQ(second.gap_baseline, first.gap_baseline);

  stored.theta = Vector::Zero(2);
  EXPECT_THROW(run_experiment(c, &stored), InvalidInput);
}

TEST(Experiment, FileSourceWithCorruption) {
  const fs::path dir = scratch_dir("file");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "data.csv");
    write_dataset_csv(out, make_synthetic(SyntheticSpec{Family::RobustRegression, {3}, 1, {}}, 60, 2));
  }
  const json j = {{"family", "regression"},
                  {"data", {{"file", {{"path", (dir / "data.csv").string()}, {"normalize", true}}}}},
                  {"corruption", {{"delta", 0.1}, {"sigma", 5}}},
                  {"algorithms", {"svrg"}},
                  {"passes", 5},
                  {"reference_passes", 20},
                  {"record_wall_time", false}};
  const ExperimentConfig c = experiment_config_from_json(j);
  const DataSet d = build_dataset(c);
  EXPECT_EQ(d.meta().at("normalized"), "[-1,1]");
  EXPECT_EQ(d.meta().at("corruption_sigma"), "5");
  EXPECT_LE(d.features().cwiseAbs().maxCoeff(), 1.0);
  EXPECT_TRUE(run_experiment(c).outcomes[0].ok);
  fs::remove_all(dir);
}
