// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ncvr/ncvr.hpp"

#ifndef NCVR_CONFIG_DIR
#define NCVR_CONFIG_DIR "configs"
#endif
#ifndef NCVR_ACCEPTANCE_OUT
#define NCVR_ACCEPTANCE_OUT "acceptance_out"
#endif

namespace fs = std::filesystem;
using namespace ncvr;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string sci(double v) { return fmt("%.3e", v); }

// Random data for the derivative checks. Targets respect the family's domain.
DataSet random_data(Family fam, Index n, Index p, Rng& rng) {
  std::normal_distribution<double> g;
  RowMatrix x(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) x(i, j) = g(rng);
  Vector y(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Index i = 0; i < n; ++i) y[i] = fam == Family::BinaryClassification ? (u(rng) < 0.5 ? 0.0 : 1.0) : 3.0 * g(rng);
  return DataSet(std::move(x), std::move(y));
}

double rel_err(const Vector& a, const Vector& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-8});
  return (a - b).norm() / scale;
}

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& theta, double h) {
  Vector g(theta.size());
  for (Index j = 0; j < theta.size(); ++j) {
    Vector tp = theta, tm = theta;
    tp[j] += h;
    tm[j] -= h;
    g[j] = (f(tp) - f(tm)) / (2.0 * h);
  }
  return g;
}

Verdict criterion_derivatives() {
  Rng rng{derive_seed(101, 1)};
  std::uniform_int_distribution<Index> pick_p(1, 20), pick_n(1, 30);
  std::normal_distribution<double> g;
  double worst_grad = 0.0, worst_hess = 0.0;
  for (const Family fam : {Family::BinaryClassification, Family::RobustRegression}) {
    const LossModel model = make_loss(fam, 4.865);
    for (int inst = 0; inst < 100; ++inst) {
      const Index p = pick_p(rng), n = pick_n(rng);
      const DataSet d = random_data(fam, n, p, rng);
      Vector theta(p);
      for (Index j = 0; j < p; ++j) theta[j] = g(rng) / std::sqrt(static_cast<double>(p));
      const double h = 1e-5;

      const Vector x0 = d.x(0);
      const auto f_sample = [&](const Vector& t) { return sample_loss(model, t, x0, d.y(0)); };
      worst_grad = std::max(worst_grad, rel_err(sample_gradient(model, theta, x0, d.y(0)), fd_gradient(f_sample, theta, h)));

      const auto f_batch = [&](const Vector& t) { return batch_objective(model, t, d); };
      worst_grad = std::max(worst_grad, rel_err(batch_gradient(model, theta, d), fd_gradient(f_batch, theta, h)));

      Matrix hfd(p, p);
      for (Index j = 0; j < p; ++j) {
        Vector tp = theta, tm = theta;
        tp[j] += h;
        tm[j] -= h;
        hfd.col(j) = (batch_gradient(model, tp, d) - batch_gradient(model, tm, d)) / (2.0 * h);
      }
      const Matrix hs = batch_hessian(model, theta, d);
      const double scale = std::max({hs.norm(), hfd.norm(), 1e-8});
      worst_hess = std::max(worst_hess, (hs - hfd).norm() / scale);
    }
  }
  return {worst_grad <= 1e-6 && worst_hess <= 1e-4,
          "worst rel grad err " + sci(worst_grad) + " (tol 1e-6), worst rel Hessian err " + sci(worst_hess) +
              " (tol 1e-4)"};
}

Verdict criterion_unbiasedness() {
  Rng rng{derive_seed(102, 1)};
  std::normal_distribution<double> g;
  double worst_svrg = 0.0, worst_saga = 0.0;
  for (const Family fam : {Family::BinaryClassification, Family::RobustRegression}) {
    const LossModel model = make_loss(fam, 4.865);
    const Index n = 64, p = 7;
    const DataSet d = random_data(fam, n, p, rng);
    const Vector theta = standard_normal_vector(p, rng) * 0.5;
    const Vector snap = standard_normal_vector(p, rng) * 0.5;
    const Vector full = batch_gradient(model, theta, d);

    const Vector snap_grad = batch_gradient(model, snap, d);
    Vector avg = Vector::Zero(p);
    for (Index i = 0; i < n; ++i) avg += svrg_vr_gradient(i, theta, snap, snap_grad, model, d);
    worst_svrg = std::max(worst_svrg, (avg / static_cast<double>(n) - full).cwiseAbs().maxCoeff());

    std::visit(
        [&](const auto& loss) {
          CountingOracle oracle(loss, d);
          SagaState st;
          st.theta = theta;
          st.anchors = RowMatrix(n, p);
          st.anchor_slopes = Vector(n);
          for (Index i = 0; i < n; ++i) {
            st.anchors.row(i) = (standard_normal_vector(p, rng) * 0.5).transpose();
            st.anchor_slopes[i] = loss.slope(st.anchors.row(i).dot(d.x(i)), d.y(i));
          }
          st.mean_grad = saga_table_gradient(loss, d, st);
          Vector sum = Vector::Zero(p);
          for (Index i = 0; i < n; ++i) {
            const Index one[1] = {i};
            sum += saga_direction(st, std::span<const Index>(one, 1), oracle);
          }
          worst_saga = std::max(worst_saga, (sum / static_cast<double>(n) - full).cwiseAbs().maxCoeff());
        },
        model);
  }
  return {worst_svrg <= 1e-12 && worst_saga <= 1e-12,
          "max |mean direction - grad| svrg " + sci(worst_svrg) + ", saga(b=1) " + sci(worst_saga) + " (tol 1e-12)"};
}

Verdict criterion_saga_invariant() {
  double worst = 0.0;
  int steps_checked = 0;
  for (const Family fam : {Family::BinaryClassification, Family::RobustRegression}) {
    SyntheticSpec spec;
    spec.family = fam;
    spec.cov.p = 10;
    spec.noise = {0.1, 5.0};
    const DataSet d = make_synthetic(spec, 200, 5);
    std::visit(
        [&](const auto& loss) {
          SagaConfig cfg;
          cfg.b = 4;
          cfg.step = 0.05;
          CountingOracle oracle(loss, d);
          SagaSampler sampler(d.size());
          Rng rng{derive_seed(103, 1)};
          SagaState st = init_saga_state(oracle, Vector(Vector::Zero(d.dim())));
          for (int k = 0; k < 500; ++k) {
            saga_step(st, cfg, oracle, sampler, rng);
            worst = std::max(worst, (saga_table_gradient(loss, d, st) - st.mean_grad).cwiseAbs().maxCoeff());
            ++steps_checked;
          }
        },
        make_loss(fam));
  }
  return {worst <= 1e-10 && steps_checked == 1000,
          "max table drift " + sci(worst) + " over " + std::to_string(steps_checked) + " steps (tol 1e-10)"};
}

ExperimentResult run_config(const std::string& name, const std::string& out_dir) {
  ExperimentConfig c = load_experiment_config(std::string(NCVR_CONFIG_DIR) + "/" + name + ".json");
  c.out_dir = out_dir;
  return run_experiment(c);
}

std::map<std::string, double> final_gaps(const ExperimentResult& r, std::string& text) {
  std::map<std::string, double> out;
  for (const auto& o : r.outcomes) {
    const double gap = o.ok && !o.trace.rows.empty() ? *o.trace.rows.back().objective_gap : INFINITY;
    out[o.settings.name()] = gap;
    text += (text.empty() ? "" : ", ") + o.settings.name() + " " + sci(gap);
  }
  return out;
}

std::string run_dir(int round, const std::string& name) {
  return (fs::path(NCVR_ACCEPTANCE_OUT) / ("round" + std::to_string(round)) / name).string();
}

// R^2 of the least-squares line through (pass, log10 gap) for rows in [lo, hi].
double linear_r2(const TrainTrace& t, double lo, double hi, int& used) {
  std::vector<double> xs, ys;
  for (const auto& r : t.rows) {
    const double gap = *r.objective_gap;
    if (gap >= lo && gap <= hi) {
      xs.push_back(r.pass);
      ys.push_back(std::log10(gap));
    }
  }
  used = static_cast<int>(xs.size());
  if (xs.size() < 3) return 0.0;
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) mx += xs[k] / n, my += ys[k] / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  return syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
}

Verdict criterion_deviation_scaling() {
  const Index p = 20;
  SyntheticSpec spec;
  spec.family = Family::BinaryClassification;
  spec.cov.p = p;
  spec.theta_seed = 21;
  const MonteCarloPopulation pop(PopulationOracle{spec, 200000, 77});
  const ProbeGrid grid{{0.5, 1.0, 1.5}, 4, 5};
  const std::vector<Vector> probes = grid.points(p);
  std::vector<double> avg;
  std::string text;
  for (const Index n : {Index{500}, Index{2000}, Index{8000}}) {
    double sum = 0.0;
    for (std::uint64_t s = 1; s <= 5; ++s) {
      sum += grad_deviation_sup(BinaryClassificationLoss{}, make_synthetic(spec, n, derive_seed(1000 + s, 1)), pop, probes);
    }
    avg.push_back(sum / 5.0);
    text += (text.empty() ? "" : ", ") + std::string("n=") + std::to_string(n) + " " + sci(avg.back());
  }
  const double ratio = avg[2] / avg[0];
  const bool monotone = avg[0] > avg[1] && avg[1] > avg[2];
  return {monotone && ratio >= 0.15 && ratio <= 0.6,
          text + "; ratio 8000/500 " + fmt("%.3f", ratio) + " (want [0.15, 0.6], monotone)"};
}

Verdict criterion_landscape_positivity() {
  SyntheticSpec spec;
  spec.family = Family::BinaryClassification;
  spec.cov.p = 5;
  spec.theta_seed = 31;
  const MonteCarloPopulation pop(PopulationOracle{spec, 1000000, 9});
  const Vector theta_star = sample_theta_star(5, spec.theta_seed);
  const LandscapeOptions opts;
  const std::vector<Vector> probes = opts.grid.points(5);
  const double mu0 = mu0_estimate(BinaryClassificationLoss{}, pop, theta_star, probes);
  const double kappa0 =
      kappa0_estimate(BinaryClassificationLoss{}, pop, theta_star, opts.kappa_radius, opts.kappa_probes, opts.kappa_seed);
  return {mu0 > 0.0 && kappa0 > 0.0, "mu0_hat " + sci(mu0) + ", kappa0_hat " + sci(kappa0)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

int main() {
  int failed = 0;
  const auto report = [&](int id, const std::string& title, double limit_s, const std::function<Verdict()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0 && secs >= limit_s) {
      v.pass = false;
      v.detail += "; runtime over " + fmt("%.0f", limit_s) + " s";
    }
    if (!v.pass) ++failed;
    std::printf("%s [%d] %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
  };

  fs::remove_all(NCVR_ACCEPTANCE_OUT);

  report(1, "derivatives vs central differences", 10, criterion_derivatives);
  report(2, "stochastic directions unbiased by enumeration", 1, criterion_unbiasedness);
  report(3, "SAGA table mean invariant", 5, criterion_saga_invariant);

  ExperimentResult cls10;
  report(4, "classification cond=10, 150 passes", 60, [&] {
    cls10 = run_config("classification_cond10", run_dir(1, "classification_cond10"));
    std::string text;
    auto g = final_gaps(cls10, text);
    return Verdict{g["svrg"] <= 1e-8 && g["saga"] <= 1e-8 && g["gd"] > g["svrg"] && g["sgd"] >= 1e-3, text};
  });
  report(5, "classification cond=1000, 300 passes", 120, [&] {
    const auto r = run_config("classification_cond1000", run_dir(1, "classification_cond1000"));
    std::string text;
    auto g = final_gaps(r, text);
    return Verdict{g["gd"] >= 1e-4 && g["svrg"] <= 1e-6 && g["saga"] <= 1e-6, text};
  });
  report(6, "robust regression t0=4.865 r=10", 120, [&] {
    const auto r = run_config("robust_regression", run_dir(1, "robust_regression"));
    std::string text;
    auto g = final_gaps(r, text);
    return Verdict{g["svrg"] <= 1e-7 && g["saga"] <= 1e-7 && g["sgd"] >= 1e-4, text};
  });
  report(7, "SVRG linear rate on log gap", 0, [&] {
    for (const auto& o : cls10.outcomes) {
      if (o.settings.name() != "svrg") continue;
      int used = 0;
      const double r2 = linear_r2(o.trace, 1e-8, 1e-2, used);
      return Verdict{used >= 3 && r2 >= 0.95, "R^2 " + fmt("%.4f", r2) + " over " + std::to_string(used) + " rows"};
    }
    return Verdict{false, "no svrg run from criterion 4"};
  });
  report(8, "gradient deviation shrinks with n", 180, criterion_deviation_scaling);
  report(9, "landscape positivity at Sigma = I, p = 5", 60, criterion_landscape_positivity);
  report(10, "byte-identical reruns", 0, [&] {
    int files = 0;
    std::string mismatch;
    for (const char* name : {"classification_cond10", "classification_cond1000", "robust_regression"}) {
      run_config(name, run_dir(2, name));
      for (const auto& e : fs::directory_iterator(run_dir(1, name))) {
        const fs::path other = fs::path(run_dir(2, name)) / e.path().filename();
        ++files;
        if (!fs::exists(other) || slurp(e.path()) != slurp(other)) mismatch += " " + e.path().filename().string();
      }
    }
    return Verdict{files > 0 && mismatch.empty(),
                   std::to_string(files) + " files compared" + (mismatch.empty() ? "" : "; differ:" + mismatch)};
  });

  std::printf("%s: %d of 10 criteria failed\n", failed ? "FAILED" : "OK", failed);
  return failed ? 1 : 0;
}
