// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mmtensor/cli.hpp"
#include "mmtensor/evaluation.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Every proposed-method model fitted below is checked for a nonincreasing
// training path.
struct PathAudit {
  std::size_t models = 0;
  std::size_t violations = 0;

  void check(const mmt::RegressionModel& m) {
    ++models;
    for (std::size_t r = 1; r < m.train_rmse_path.size(); ++r)
      if (m.train_rmse_path[r] > m.train_rmse_path[r - 1]) {
        ++violations;
        return;
      }
  }
} g_paths;

Outcome ac1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto w = oracle::random_unit_rank(rng, oracle::random_shape(rng, 2, 3, 20));
    const double a = mmt::l1_norm(w), b = oracle::elementwise_l1(oracle::outer(w.factors()));
    worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-300));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && secs < 5.0, fmt("max rel err %.2e, %.2f s", worst, secs)};
}

Outcome ac2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1002);
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    const auto shape = oracle::random_shape(rng, 2, 3, 20);
    const auto x = oracle::random_dense(rng, shape);
    const auto w = oracle::random_unit_rank(rng, shape);
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, shape.size() - 1)(rng);
    const double got = mmt::dot(w.factor(j), mmt::contract_except(x, w, j));
    const double want = oracle::brute_inner(x, w);
    worst = std::max(worst, std::abs(got - want) / std::max(std::abs(want), 1e-300));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && secs < 10.0, fmt("max rel err %.2e, %.2f s", worst, secs)};
}

Outcome ac3() {
  const mmt::Shape shape{10, 8, 3};
  double worst = 0.0;
  std::size_t converged = 0, zero = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    mmt::SynthConfig c;
    c.n_subjects = 200;
    c.shape = shape;
    c.support_density = 0.3;
    c.noise_std = 0.05;
    c.noise_in_rescaled_units = true;
    c.seed = 3000 + seed;
    auto ds = mmt::generate_synthetic(c).dataset;
    const double mean = std::accumulate(ds.y.begin(), ds.y.end(), 0.0) / static_cast<double>(ds.y.size());
    for (double& v : ds.y) v -= mean;
    mmt::FitConfig cfg;
    cfg.seed = seed;
    const auto f = mmt::fit_unit_rank(ds.xs, ds.y, cfg);
    if (f.tensor.is_zero()) {
      ++zero;
      continue;
    }
    if (!f.converged) continue;
    ++converged;
    for (std::size_t j = 0; j < shape.size(); ++j)
      worst = std::max(worst, oracle::mode_kkt_violation(ds.xs, ds.y, f.tensor, f.lambda, j));
  }
  const bool pass = worst <= 1e-6 && converged + zero == 50;
  return {pass, fmt("%zu/50 converged (%zu zero), max KKT violation %.2e", converged, zero, worst)};
}

Outcome ac4() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t seeds = 5;
  double f1_sum = 0.0, ratio_sum = 0.0, sparsity_sum = 0.0, worst_ratio = 0.0, min_sparsity = 100.0;
  double min_f1 = 1.0;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    mmt::SynthConfig c;
    c.n_subjects = 360;
    c.shape = {20, 20, 3};
    c.true_rank = 3;
    c.support_density = 0.1;
    c.noise_std = 0.05;
    c.noise_in_rescaled_units = true;
    c.seed = seed;
    const auto s = mmt::generate_synthetic(c);
    std::vector<std::size_t> tr(300), te(60);
    std::iota(tr.begin(), tr.end(), 0);
    std::iota(te.begin(), te.end(), 300);
    const auto train = s.dataset.subset(tr), test = s.dataset.subset(te);

    mmt::MethodGrids grids;
    for (std::size_t r = 1; r <= 10; ++r) grids.proposed_ranks.push_back(r);
    const auto method = mmt::make_method("proposed", grids);
    mmt::ProtocolConfig pc;
    pc.seed = seed;
    const auto grid = method->grid(train.shape());
    const auto cv = mmt::cross_validate(train, *method, grid, pc, seed);
    const auto model = std::get<mmt::RegressionModel>(method->fit(train, cv.best, seed));
    g_paths.check(model);

    const auto coef = mmt::coefficient_tensor(model);
    const auto truth = mmt::planted_coefficient(s.truth, c.shape);
    const double f1 = oracle::support_f1(coef.values(), truth.values(), 1e-10);
    std::vector<double> pred;
    for (const auto& x : test.xs) pred.push_back(mmt::predict(model, x));
    const double ratio = oracle::naive_rmse(pred, test.y) / s.noise_floor();
    const double sp = mmt::model_sparsity(model, 1e-10);
    std::printf("  AC4 seed %llu: R=%zu F1 %.3f, test RMSE %.2fx floor, sparsity %.2f%%\n",
                static_cast<unsigned long long>(seed), model.components.size(), f1, ratio, sp);
    f1_sum += f1;
    ratio_sum += ratio;
    sparsity_sum += sp;
    min_f1 = std::min(min_f1, f1);
    worst_ratio = std::max(worst_ratio, ratio);
    min_sparsity = std::min(min_sparsity, sp);
  }
  const double n = static_cast<double>(seeds);
  const double f1 = f1_sum / n, ratio = ratio_sum / n, sp = sparsity_sum / n;
  const double secs = seconds_since(t0);
  const bool pass = f1 >= 0.8 && ratio <= 1.5 && sp >= 90.0 && secs < 300.0;
  return {pass, fmt("seeds 0-4 mean: F1 %.3f (>= 0.8: %s, min %.3f), RMSE %.2fx floor (<= 1.5: %s, max %.2f), "
                    "sparsity %.2f%% (>= 90: %s, min %.2f), %.1f s",
                    f1, f1 >= 0.8 ? "yes" : "no", min_f1, ratio, ratio <= 1.5 ? "yes" : "no", worst_ratio, sp,
                    sp >= 90.0 ? "yes" : "no", min_sparsity, secs)};
}

Outcome ac5() {
  std::mt19937_64 rng(1005);
  std::normal_distribution<double> d;
  const Eigen::Index n = 120, p = 12;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = d(rng);
    y(i) = X(i, 0) - 2.0 * X(i, 3) + 0.5 * X(i, 7) + 0.3 + 0.1 * d(rng);
  }
  const auto ols = oracle::normal_equations(X, y);
  const auto diff = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); };

  const auto lasso0 = mmt::lasso_fit(X, y, 0.0);
  const double e_lasso = std::max(diff(lasso0.weights, ols.w), std::abs(lasso0.intercept - ols.b));

  double e_enet = 0.0;
  for (double lambda : {0.01, 0.1, 0.5}) {
    const auto a = mmt::enet_fit(X, y, lambda, 1.0), b = mmt::lasso_fit(X, y, lambda);
    e_enet = std::max({e_enet, diff(a.weights, b.weights), std::abs(a.intercept - b.intercept)});
  }

  double e_glasso = 0.0;
  for (auto mode : {mmt::GroupMode::ByRoi, mmt::GroupMode::ByModality}) {
    const auto g = mmt::glasso_fit(X, y, mmt::GroupSpec::from_shape({4, 3}, mode), 0.0, 0.0);
    e_glasso = std::max({e_glasso, diff(g.weights, ols.w), std::abs(g.intercept - ols.b)});
  }

  const auto pca = mmt::pca_lr_fit(X, y, 1.0);
  const Eigen::VectorXd pred_pca = (X * pca.weights).array() + pca.intercept;
  const Eigen::VectorXd pred_ols = (X * ols.w).array() + ols.b;
  const double e_pca = diff(pred_pca, pred_ols);

  const bool pass = e_lasso <= 1e-6 && e_enet <= 1e-8 && e_glasso <= 1e-6 && e_pca <= 1e-6;
  return {pass, fmt("lasso(0) vs OLS %.1e, enet(a=1) vs lasso %.1e, glasso(0,0) vs OLS %.1e, "
                    "PCA+LR(1) vs OLS predictions %.1e",
                    e_lasso, e_enet, e_glasso, e_pca)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome ac6() {
  const fs::path root = fs::temp_directory_path() / "mmtensor_acceptance_ac6";
  fs::remove_all(root);
  std::ostringstream out, err;
  const auto run = [&](std::vector<std::string> args) { return mmt::run_cli(args, out, err); };
  if (run({"--out", (root / "data").string(), "--seed", "7", "synth", "--kind", "tensor", "--n", "72", "--shape",
           "4x3x3", "--rank", "2", "--density", "0.4", "--noise", "0.05", "--noise-rescaled"}) != 0)
    return {false, "synth failed: " + err.str()};
  const std::vector<std::string> bench{"--seed", "11", "benchmark", "--input", (root / "data/tensors.json").string(),
                                       "--max-rank", "5", "--trials", "3"};
  for (const char* dir : {"run1", "run2"}) {
    std::vector<std::string> args{"--out", (root / dir).string()};
    if (std::string(dir) == "run2") args.insert(args.end(), {"--jobs", "3"});
    args.insert(args.end(), bench.begin(), bench.end());
    if (run(args) != 0) return {false, std::string("benchmark failed: ") + err.str()};
  }
  std::size_t compared = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "run1")) {
    if (!entry.is_regular_file() || entry.path().filename() == "manifest.json") continue;
    const auto rel = fs::relative(entry.path(), root / "run1");
    ++compared;
    if (slurp(entry.path()) != slurp(root / "run2" / rel)) ++differing;
  }
  fs::remove_all(root);
  return {compared >= 3 && differing == 0,
          fmt("%zu report files compared (jobs 1 vs 3), %zu differ", compared, differing)};
}

/// RMSE over R is nonincreasing-then-flat: no step up in R raises the mean
/// test RMSE by more than 2%, and the last R is within 2% of the best.
bool rank_trend_holds(const std::vector<mmt::CurvePoint>& curve) {
  double best = curve.front().rmse_mean;
  for (std::size_t k = 1; k < curve.size(); ++k) {
    if (curve[k].rmse_mean > 1.02 * curve[k - 1].rmse_mean) return false;
    best = std::min(best, curve[k].rmse_mean);
  }
  return curve.back().rmse_mean <= 1.02 * best;
}

bool sparsity_trend_holds(const std::vector<mmt::CurvePoint>& curve) {
  for (std::size_t k = 1; k < curve.size(); ++k)
    if (curve[k].sparsity_mean > curve[k - 1].sparsity_mean) return false;
  return true;
}

Outcome ac7() {
  std::size_t rank_ok = 0, sparsity_ok = 0, k_ok = 0;
  const std::vector<std::size_t> rs{0, 1, 2, 3, 4, 5, 6, 8};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    mmt::SynthConfig c;
    c.n_subjects = 240;
    c.shape = {12, 12, 3};
    c.true_rank = 3;
    c.support_density = 0.25;
    c.noise_std = 0.05;
    c.noise_in_rescaled_units = true;
    c.seed = 700 + seed;
    const auto ds = mmt::generate_synthetic(c).dataset;
    mmt::ProtocolConfig pc;
    pc.seed = seed;
    pc.n_trials = 3;
    const auto curve = mmt::sweep_rank(ds, rs, pc);
    rank_ok += rank_trend_holds(curve);
    sparsity_ok += sparsity_trend_holds(curve);

    auto fc = mmt::protocol_fit_config();
    fc.max_rank = rs.back();
    fc.seed = seed;
    g_paths.check(mmt::fit(mmt::split(ds, pc, 0).first, fc));

    mmt::CohortSynthConfig cc;
    cc.n_subjects = 120;
    cc.true_rank = 2;
    cc.noise_std = 0.0;
    cc.seed = 800 + seed;
    const auto cohort = mmt::generate_synthetic_cohort(cc).cohort;
    const std::vector<std::size_t> ks{1, 116};
    mmt::ProtocolConfig kc;
    kc.seed = seed;
    kc.n_trials = 3;
    const auto kcurve = mmt::sweep_k(cohort, mmt::ScoreKind::ADAS13, mmt::RepresentationKind::Connectivity, ks,
                                     cc.sigma, 2, kc);
    k_ok += kcurve[1].rmse_mean <= kcurve[0].rmse_mean;
    std::printf("  AC7 seed %llu: R curve %s, sparsity %s, RMSE k=1 %.4f vs k=116 %.4f\n",
                static_cast<unsigned long long>(seed), rank_trend_holds(curve) ? "ok" : "violated",
                sparsity_trend_holds(curve) ? "ok" : "violated", kcurve[0].rmse_mean, kcurve[1].rmse_mean);
  }
  const bool pass = rank_ok >= 4 && sparsity_ok >= 4 && k_ok >= 4;
  return {pass, fmt("RMSE-vs-R trend %zu/5, sparsity-vs-R trend %zu/5, k=116 <= k=1 %zu/5", rank_ok,
                    sparsity_ok, k_ok)};
}

Outcome ac8() {
  const double r = mmt::rmse(std::vector<double>{0, 2}, std::vector<double>{0, 0});
  const mmt::RegressionModel empty{{4, 3}, {}, {}, 0.0};
  const double sp_empty = mmt::model_sparsity(empty);

  std::mt19937_64 rng(1008);
  Eigen::MatrixXd X(50, 8);
  Eigen::VectorXd y(50);
  std::normal_distribution<double> d;
  for (Eigen::Index i = 0; i < 50; ++i) {
    for (Eigen::Index j = 0; j < 8; ++j) X(i, j) = d(rng);
    y(i) = d(rng);
  }
  const double sp_pca = mmt::linear_sparsity(mmt::pca_lr_fit(X, y, 0.5));
  const bool pass = r == std::sqrt(2.0) && sp_empty == 100.0 && sp_pca == 0.0;
  return {pass, fmt("rmse([0,2],[0,0]) = %.17g, empty-model sparsity %.1f, PCA+LR sparsity %.1f", r, sp_empty,
                    sp_pca)};
}

Outcome ac9() {
  return {g_paths.models > 0 && g_paths.violations == 0,
          fmt("%zu fitted models checked, %zu with an increasing train RMSE path", g_paths.models,
              g_paths.violations)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
      {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}};
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s  %s\n", name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
