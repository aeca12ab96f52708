#include "mmtensor/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include "mmtensor/errors.hpp"
#include "mmtensor/format.hpp"
#include "mmtensor/parallel.hpp"
#include "mmtensor/random.hpp"

namespace mmt {

namespace {

// Seed streams, kept apart so that e.g. fold seeds never alias split seeds.
constexpr std::uint64_t kSplitStream = 0x5350;
constexpr std::uint64_t kCvStream = 0x4356;
constexpr std::uint64_t kFitStream = 0x4649;

std::vector<double> linspace_steps(double first, double step, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = std::round((first + step * static_cast<double>(i)) * 1e9) / 1e9;
  return out;
}

std::vector<double> predict_all(const TrainedModel& m, const Dataset& ds) {
  std::vector<double> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out[i] = predict(m, ds.xs[i]);
  return out;
}

std::string kv(const std::string& key, double v) { return key + "=" + format_double(v); }

class ProposedMethod final : public Method {
 public:
  ProposedMethod(std::vector<std::size_t> ranks, FitConfig base)
      : ranks_(std::move(ranks)), base_(base) {
    if (ranks_.empty()) throw InputError("proposed method needs at least one rank");
    for (auto r : ranks_)
      if (r < 1) throw InputError("ranks must be positive");
  }

  std::string name() const override { return "proposed"; }

  std::vector<HyperParams> grid(const Shape&) const override {
    std::vector<HyperParams> g;
    for (auto r : ranks_) g.push_back(HyperParams{.rank = r});
    return g;
  }

  TrainedModel fit(const Dataset& train, const HyperParams& hp, std::uint64_t seed) const override {
    FitConfig cfg = base_;
    cfg.max_rank = hp.rank;
    cfg.seed = seed;
    return mmt::fit(train, cfg);
  }

  // The sequence is nested in R, so one fit at the largest rank scores every
  // grid point.
  std::vector<double> validation_rmse(const Dataset& train, const Dataset& validation,
                                      std::span<const HyperParams> grid,
                                      std::uint64_t seed) const override {
    std::size_t top = 1;
    for (const auto& hp : grid) top = std::max(top, hp.rank);
    const auto full = std::get<RegressionModel>(fit(train, HyperParams{.rank = top}, seed));
    std::vector<double> out;
    for (const auto& hp : grid) {
      const TrainedModel m = truncate(full, hp.rank);
      out.push_back(rmse(validation.y, predict_all(m, validation)));
    }
    return out;
  }

  std::string describe(const HyperParams& hp) const override {
    return "rank=" + std::to_string(hp.rank);
  }

 private:
  std::vector<std::size_t> ranks_;
  FitConfig base_;
};

/// Vector-space methods share design-matrix handling.
class LinearMethod : public Method {
 public:
  explicit LinearMethod(LinearFitOptions opts) : opts_(opts) {}

  TrainedModel fit(const Dataset& train, const HyperParams& hp, std::uint64_t) const override {
    auto m = fit_matrix(design_matrix(train.xs), to_vector(train.y), train.shape(), hp);
    m.input_shape = train.shape();
    return m;
  }

  std::vector<double> validation_rmse(const Dataset& train, const Dataset& validation,
                                      std::span<const HyperParams> grid,
                                      std::uint64_t) const override {
    const auto X = design_matrix(train.xs);
    const auto y = to_vector(train.y);
    const auto V = design_matrix(validation.xs);
    return score(X, y, V, validation.y, train.shape(), grid);
  }

 protected:
  virtual LinearModel fit_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const Shape& shape, const HyperParams& hp) const = 0;

  virtual std::vector<double> score(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const Eigen::MatrixXd& V, std::span<const double> v_y,
                                    const Shape& shape, std::span<const HyperParams> grid) const {
    std::vector<double> out;
    for (const auto& hp : grid) out.push_back(holdout_rmse(fit_matrix(X, y, shape, hp), V, v_y));
    return out;
  }

  static double holdout_rmse(const LinearModel& m, const Eigen::MatrixXd& V,
                             std::span<const double> v_y) {
    const Eigen::VectorXd pred = (V * m.weights).array() + m.intercept;
    return rmse(v_y, std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())));
  }

  static Eigen::VectorXd to_vector(std::span<const double> v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  LinearFitOptions opts_;
};

class LassoMethod final : public LinearMethod {
 public:
  LassoMethod(std::vector<double> lambdas, LinearFitOptions opts)
      : LinearMethod(opts), lambdas_(std::move(lambdas)) {}
  std::string name() const override { return "lasso"; }
  std::vector<HyperParams> grid(const Shape&) const override {
    std::vector<HyperParams> g;
    for (double l : lambdas_) g.push_back(HyperParams{.lambda = l});
    return g;
  }
  std::string describe(const HyperParams& hp) const override { return kv("lambda", hp.lambda); }

 protected:
  LinearModel fit_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Shape&,
                         const HyperParams& hp) const override {
    return lasso_fit(X, y, hp.lambda, opts_);
  }

 private:
  std::vector<double> lambdas_;
};

class EnetMethod final : public LinearMethod {
 public:
  EnetMethod(std::vector<double> lambdas, std::vector<double> alphas, LinearFitOptions opts)
      : LinearMethod(opts), lambdas_(std::move(lambdas)), alphas_(std::move(alphas)) {}
  std::string name() const override { return "enet"; }
  std::vector<HyperParams> grid(const Shape&) const override {
    std::vector<HyperParams> g;
    for (double l : lambdas_)
      for (double a : alphas_) g.push_back(HyperParams{.lambda = l, .alpha = a});
    return g;
  }
  std::string describe(const HyperParams& hp) const override {
    return kv("lambda", hp.lambda) + ";" + kv("alpha", hp.alpha);
  }

 protected:
  LinearModel fit_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Shape&,
                         const HyperParams& hp) const override {
    return enet_fit(X, y, hp.lambda, hp.alpha, opts_);
  }

 private:
  std::vector<double> lambdas_, alphas_;
};

class GlassoMethod final : public LinearMethod {
 public:
  GlassoMethod(std::vector<double> coarse, std::vector<double> fine, LinearFitOptions opts)
      : LinearMethod(opts), coarse_(std::move(coarse)), fine_(std::move(fine)) {}
  std::string name() const override { return "glasso"; }

  std::vector<HyperParams> grid(const Shape& shape) const override {
    std::vector<HyperParams> g;
    for (auto mode : {GroupMode::ByModality, GroupMode::ByRoi}) {
      if (!GroupSpec::supports(shape, mode)) continue;
      for (double lg : coarse_)
        for (double l1 : coarse_)
          g.push_back(HyperParams{.lambda_group = lg, .lambda_l1 = l1, .grouping = mode});
    }
    return g;
  }

  std::vector<HyperParams> refine(const HyperParams& best, const Shape&) const override {
    std::vector<HyperParams> g;
    for (double a : fine_)
      for (double b : fine_)
        g.push_back(HyperParams{.lambda_group = best.lambda_group * a,
                                .lambda_l1 = best.lambda_l1 * b,
                                .grouping = best.grouping});
    return g;
  }

  std::string describe(const HyperParams& hp) const override {
    return "grouping=" + group_mode_name(hp.grouping) + ";" + kv("lambda_group", hp.lambda_group) +
           ";" + kv("lambda_l1", hp.lambda_l1);
  }

 protected:
  LinearModel fit_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Shape& shape,
                         const HyperParams& hp) const override {
    return glasso_fit(X, y, GroupSpec::from_shape(shape, hp.grouping), hp.lambda_group,
                      hp.lambda_l1, opts_);
  }

  // One warm-started path per grouping, from the heaviest penalties down.
  std::vector<double> score(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::MatrixXd& V,
                            std::span<const double> v_y, const Shape& shape,
                            std::span<const HyperParams> grid) const override {
    std::vector<double> out(grid.size());
    for (auto mode : {GroupMode::ByModality, GroupMode::ByRoi}) {
      std::vector<std::size_t> order;
      for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid[i].grouping == mode) order.push_back(i);
      if (order.empty()) continue;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (grid[a].lambda_group != grid[b].lambda_group) return grid[a].lambda_group > grid[b].lambda_group;
        return grid[a].lambda_l1 > grid[b].lambda_l1;
      });
      std::vector<GlassoPenalty> penalties;
      for (auto i : order) penalties.push_back({grid[i].lambda_group, grid[i].lambda_l1});
      const auto models = glasso_path(X, y, GroupSpec::from_shape(shape, mode), penalties, opts_);
      for (std::size_t k = 0; k < order.size(); ++k) out[order[k]] = holdout_rmse(models[k], V, v_y);
    }
    return out;
  }

 private:
  std::vector<double> coarse_, fine_;
};

class PcaLrMethod final : public LinearMethod {
 public:
  explicit PcaLrMethod(std::vector<double> fractions)
      : LinearMethod({}), fractions_(std::move(fractions)) {}
  std::string name() const override { return "pca-lr"; }
  std::vector<HyperParams> grid(const Shape&) const override {
    std::vector<HyperParams> g;
    for (double f : fractions_) g.push_back(HyperParams{.fraction = f});
    return g;
  }
  std::string describe(const HyperParams& hp) const override { return kv("fraction", hp.fraction); }

 protected:
  LinearModel fit_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Shape&,
                         const HyperParams& hp) const override {
    return pca_lr_fit(X, y, hp.fraction);
  }

  // one SVD serves every fraction
  std::vector<double> score(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const Eigen::MatrixXd& V, std::span<const double> v_y, const Shape&,
                            std::span<const HyperParams> grid) const override {
    const auto basis = pca_basis(X, y);
    std::vector<double> out;
    for (const auto& hp : grid) out.push_back(holdout_rmse(pca_lr_from_basis(basis, hp.fraction), V, v_y));
    return out;
  }

 private:
  std::vector<double> fractions_;
};

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

double predict(const TrainedModel& m, const DenseTensor& x) {
  return std::visit([&](const auto& model) -> double {
    if constexpr (std::is_same_v<std::decay_t<decltype(model)>, RegressionModel>)
      return mmt::predict(model, x);
    else
      return model.predict(x);
  }, m);
}

double sparsity(const TrainedModel& m, double zero_tol) {
  return std::visit([&](const auto& model) -> double {
    if constexpr (std::is_same_v<std::decay_t<decltype(model)>, RegressionModel>)
      return model_sparsity(model, zero_tol);
    else
      return linear_sparsity(model, zero_tol);
  }, m);
}

std::vector<HyperParams> Method::refine(const HyperParams&, const Shape&) const { return {}; }

std::vector<double> Method::validation_rmse(const Dataset& train, const Dataset& validation,
                                            std::span<const HyperParams> grid,
                                            std::uint64_t seed) const {
  std::vector<double> out;
  for (const auto& hp : grid) out.push_back(rmse(validation.y, predict_all(fit(train, hp, seed), validation)));
  return out;
}

MethodGrids MethodGrids::defaults() {
  MethodGrids g;
  for (std::size_t r = 1; r <= 70; ++r) g.proposed_ranks.push_back(r);
  g.lasso_lambdas = linspace_steps(0.1, 0.1, 10);
  g.enet_lambdas = linspace_steps(0.1, 0.1, 10);
  g.enet_alphas = linspace_steps(0.1, 0.1, 10);
  for (int e = -6; e <= 1; ++e) g.glasso_coarse.push_back(std::pow(10.0, e));
  g.glasso_fine = linspace_steps(1.0, 1.0, 10);
  g.pca_fractions = linspace_steps(0.05, 0.05, 20);
  return g;
}

FitConfig protocol_fit_config() {
  FitConfig cfg;
  cfg.fit_intercept = true;
  return cfg;
}

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {"pca-lr", "lasso", "enet", "glasso", "proposed"};
  return names;
}

std::unique_ptr<Method> make_method(const std::string& name, const MethodGrids& grids,
                                    const FitConfig& proposed, const LinearFitOptions& linear) {
  if (name == "proposed") return std::make_unique<ProposedMethod>(grids.proposed_ranks, proposed);
  if (name == "lasso") return std::make_unique<LassoMethod>(grids.lasso_lambdas, linear);
  if (name == "enet") return std::make_unique<EnetMethod>(grids.enet_lambdas, grids.enet_alphas, linear);
  if (name == "glasso") return std::make_unique<GlassoMethod>(grids.glasso_coarse, grids.glasso_fine, linear);
  if (name == "pca-lr") return std::make_unique<PcaLrMethod>(grids.pca_fractions);
  throw InputError("unknown method '" + name + "' (expected proposed, lasso, enet, glasso or pca-lr)");
}

void ProtocolConfig::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw InputError("test_fraction must lie in (0, 1)");
  if (cv_folds < 2) throw InputError("cv_folds must be at least 2");
  if (n_trials < 1) throw InputError("n_trials must be at least 1");
}

double rmse(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.empty()) throw InputError("rmse of empty vectors");
  if (y_true.size() != y_pred.size()) throw InputError("rmse: length mismatch");
  double ss = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double d = y_true[i] - y_pred[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(y_true.size()));
}

Split split_indices(std::size_t n, const ProtocolConfig& cfg, std::size_t trial,
                    std::span<const double> y) {
  cfg.validate();
  if (n < 6) throw InputError("train/test split needs at least 6 subjects, got " + std::to_string(n));
  auto n_test = static_cast<std::size_t>(std::llround(cfg.test_fraction * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  const std::size_t stream = cfg.resplit_per_trial ? trial : 0;
  Rng rng(derive_seed(derive_seed(cfg.seed, kSplitStream), stream));
  auto order = iota_indices(n);
  deterministic_shuffle(order, rng);

  std::vector<bool> is_test(n, false);
  if (cfg.stratify) {
    if (y.size() != n) throw InputError("stratified split needs the responses");
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return y[a] < y[b]; });
    for (std::size_t t = 0; t < n_test; ++t) {
      const auto pos = static_cast<std::size_t>((static_cast<double>(t) + 0.5) *
                                                static_cast<double>(n) / static_cast<double>(n_test));
      is_test[order[std::min(pos, n - 1)]] = true;
    }
  } else {
    for (std::size_t t = 0; t < n_test; ++t) is_test[order[t]] = true;
  }
  Split s;
  for (std::size_t i = 0; i < n; ++i) (is_test[i] ? s.test : s.train).push_back(i);
  return s;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const ProtocolConfig& cfg, std::size_t trial) {
  ds.validate();
  const auto s = split_indices(ds.size(), cfg, trial, ds.y);
  return {ds.subset(s.train), ds.subset(s.test)};
}

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t folds,
                                                    std::uint64_t seed) {
  if (folds < 2) throw InputError("need at least two folds");
  if (n < folds)
    throw InputError("cannot make " + std::to_string(folds) + " folds from " + std::to_string(n) +
                     " subjects");
  Rng rng(seed);
  auto order = iota_indices(n);
  deterministic_shuffle(order, rng);
  std::vector<std::vector<std::size_t>> out(folds);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t size = n / folds + (f < n % folds ? 1 : 0);
    out[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                  order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    std::sort(out[f].begin(), out[f].end());
    pos += size;
  }
  return out;
}

CvResult cross_validate(const Dataset& train, const Method& method,
                        std::span<const HyperParams> grid, const ProtocolConfig& cfg,
                        std::uint64_t seed) {
  if (grid.empty()) throw InputError("cross-validation grid is empty");
  cfg.validate();
  const auto shape = train.shape();

  CvResult result;
  if (grid.size() == 1 && method.refine(grid.front(), shape).empty()) {
    result.best = grid.front();
    result.evaluated = {grid.front()};
    result.mean_rmse = {std::numeric_limits<double>::quiet_NaN()};
    result.best_rmse = std::numeric_limits<double>::quiet_NaN();
    return result;
  }

  const auto folds = kfold_indices(train.size(), cfg.cv_folds, seed);
  const auto evaluate = [&](std::span<const HyperParams> points) {
    std::vector<double> total(points.size(), 0.0);
    for (std::size_t f = 0; f < folds.size(); ++f) {
      std::vector<std::size_t> rest;
      for (std::size_t g = 0; g < folds.size(); ++g)
        if (g != f) rest.insert(rest.end(), folds[g].begin(), folds[g].end());
      std::sort(rest.begin(), rest.end());
      const auto scores = method.validation_rmse(train.subset(rest), train.subset(folds[f]), points,
                                                 derive_seed(seed, f));
      for (std::size_t k = 0; k < points.size(); ++k) total[k] += scores[k];
    }
    for (double& t : total) t /= static_cast<double>(folds.size());
    return total;
  };

  const auto consider = [&](std::span<const HyperParams> points) {
    const auto scores = evaluate(points);
    for (std::size_t k = 0; k < points.size(); ++k) {
      result.evaluated.push_back(points[k]);
      result.mean_rmse.push_back(scores[k]);
      if (result.evaluated.size() == 1 || scores[k] < result.best_rmse) {
        result.best = points[k];
        result.best_rmse = scores[k];
      }
    }
  };
  consider(grid);
  const auto second = method.refine(result.best, shape);
  if (!second.empty()) consider(second);
  return result;
}

std::vector<Aggregate> aggregate(std::vector<TrialRecord> records) {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.score, a.representation, a.method, a.trial) <
           std::tie(b.score, b.representation, b.method, b.trial);
  });
  std::vector<Aggregate> out;
  for (std::size_t i = 0; i < records.size();) {
    std::size_t j = i;
    std::vector<double> r, s;
    while (j < records.size() && records[j].score == records[i].score &&
           records[j].representation == records[i].representation &&
           records[j].method == records[i].method) {
      r.push_back(records[j].rmse);
      s.push_back(records[j].sparsity);
      ++j;
    }
    Aggregate a;
    a.score = records[i].score;
    a.representation = records[i].representation;
    a.method = records[i].method;
    a.n_trials = r.size();
    a.rmse_mean = mean_of(r);
    a.rmse_std = sample_std(r);
    a.sparsity_mean = mean_of(s);
    a.sparsity_std = sample_std(s);
    out.push_back(a);
    i = j;
  }
  return out;
}

void EvalReport::merge(const EvalReport& other) {
  records.insert(records.end(), other.records.begin(), other.records.end());
  aggregates = aggregate(records);
  if (roi_ranking.empty()) roi_ranking = other.roi_ranking;
  if (modality_ranking.empty()) modality_ranking = other.modality_ranking;
}

BenchmarkResult run_benchmark(const Dataset& ds, const std::string& representation,
                              std::span<const Method* const> methods, const ProtocolConfig& cfg,
                              std::size_t top_n) {
  ds.validate();
  cfg.validate();
  if (methods.empty()) throw InputError("benchmark needs at least one method");

  struct TrialOutput {
    std::vector<TrialRecord> records;
    std::vector<TrainedModel> models;
  };
  const auto trials = parallel_map<TrialOutput>(cfg.n_trials, cfg.jobs, [&](std::size_t t) {
    const auto [train, test] = split(ds, cfg, t);
    TrialOutput out;
    for (const Method* method : methods) {
      const auto grid = method->grid(train.shape());
      const auto cv = cross_validate(train, *method, grid, cfg, derive_seed(derive_seed(cfg.seed, kCvStream), t));
      auto model = method->fit(train, cv.best, derive_seed(derive_seed(cfg.seed, kFitStream), t));
      TrialRecord rec;
      rec.trial = t;
      rec.score = ds.score_name;
      rec.representation = representation;
      rec.method = method->name();
      rec.rmse = rmse(test.y, predict_all(model, test));
      rec.sparsity = sparsity(model, cfg.zero_tol);
      rec.cv_rmse = cv.best_rmse;
      rec.hyperparameters = method->describe(cv.best);
      out.records.push_back(std::move(rec));
      out.models.push_back(std::move(model));
    }
    return out;
  });

  BenchmarkResult result;
  std::vector<RegressionModel> proposed;
  for (const auto& t : trials) {
    for (std::size_t k = 0; k < t.records.size(); ++k) {
      result.report.records.push_back(t.records[k]);
      result.models.push_back(t.models[k]);
      if (const auto* m = std::get_if<RegressionModel>(&t.models[k])) proposed.push_back(*m);
    }
  }
  result.report.aggregates = aggregate(result.report.records);
  if (!proposed.empty()) {
    result.report.roi_ranking = roi_ranking(proposed, top_n, cfg.zero_tol);
    result.report.modality_ranking = modality_ranking(proposed);
  }
  return result;
}

std::vector<RoiRank> roi_ranking(std::span<const RegressionModel> models, std::size_t top_n,
                                 double zero_tol) {
  if (models.empty()) return {};
  const Shape shape = models.front().input_shape;
  for (const auto& m : models)
    if (m.input_shape != shape) throw InputError("roi_ranking: models have different shapes");
  const std::size_t n_roi = shape.front();
  std::vector<std::size_t> roi_modes;
  for (std::size_t j = 0; j < shape.size(); ++j)
    if (shape[j] == n_roi) roi_modes.push_back(j);

  std::vector<std::size_t> frequency(n_roi, 0);
  std::vector<double> mass(n_roi, 0.0);
  std::vector<std::size_t> index(shape.size());
  std::vector<std::size_t> touched;
  for (const auto& m : models) {
    const auto coef = coefficient_tensor(m);
    std::vector<bool> selected(n_roi, false);
    std::fill(index.begin(), index.end(), 0);
    for (double v : coef.values()) {
      touched.clear();
      for (auto j : roi_modes) touched.push_back(index[j]);
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      for (auto roi : touched) {
        mass[roi] += std::abs(v);
        if (std::abs(v) > zero_tol) selected[roi] = true;
      }
      // advance the row-major multi-index
      for (std::size_t j = shape.size(); j-- > 0;) {
        if (++index[j] < shape[j]) break;
        index[j] = 0;
      }
    }
    for (std::size_t r = 0; r < n_roi; ++r)
      if (selected[r]) ++frequency[r];
  }

  std::vector<RoiRank> ranks;
  for (std::size_t r = 0; r < n_roi; ++r)
    if (frequency[r] > 0)
      ranks.push_back({r, frequency[r], mass[r] / static_cast<double>(models.size())});
  std::sort(ranks.begin(), ranks.end(), [](const auto& a, const auto& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    if (a.mean_mass != b.mean_mass) return a.mean_mass > b.mean_mass;
    return a.roi < b.roi;
  });
  if (ranks.size() > top_n) ranks.resize(top_n);
  return ranks;
}

std::vector<ModalityScore> modality_ranking(std::span<const RegressionModel> models) {
  if (models.empty()) return {};
  const auto& shape = models.front().input_shape;
  if (shape.size() < 2 || shape.back() != 3) return {};
  std::vector<ModalityScore> total(3);
  for (std::size_t k = 0; k < 3; ++k) total[k].modality = k;
  for (const auto& m : models)
    for (const auto& s : modality_contribution(m, shape.size() - 1)) total[s.modality].score += s.score;
  for (auto& s : total) s.score /= static_cast<double>(models.size());
  std::stable_sort(total.begin(), total.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  return total;
}

std::vector<CurvePoint> sweep_k(const Cohort& cohort, ScoreKind score, RepresentationKind kind,
                                std::span<const std::size_t> k_values, double sigma,
                                std::size_t rank, const ProtocolConfig& cfg,
                                const FitConfig& fit_cfg, NormalizationMode norm) {
  if (kind == RepresentationKind::Concat) throw InputError("k sweep needs a graph representation");
  MethodGrids grids;
  grids.proposed_ranks = {rank};
  const auto method = make_method("proposed", grids, fit_cfg);
  const Method* methods[] = {method.get()};

  std::vector<CurvePoint> curve;
  for (auto k : k_values) {
    Representation rep;
    rep.kind = kind;
    rep.graph.k = k;
    rep.graph.sigma = sigma;
    rep.graph.validate();
    const auto ds = build_dataset(cohort, rep, score, norm);
    const auto result = run_benchmark(ds, rep.label(), methods, cfg);
    const auto& agg = result.report.aggregates.front();
    curve.push_back({k, agg.rmse_mean, agg.rmse_std, agg.sparsity_mean, agg.sparsity_std,
                     k >= kRoiCount - 1});
  }
  return curve;
}

std::vector<CurvePoint> sweep_rank(const Dataset& ds, std::span<const std::size_t> r_values,
                                   const ProtocolConfig& cfg, const FitConfig& fit_cfg) {
  ds.validate();
  cfg.validate();
  if (r_values.empty()) throw InputError("rank sweep needs at least one value");
  const std::size_t top = std::max<std::size_t>(1, *std::max_element(r_values.begin(), r_values.end()));

  struct TrialCurve {
    std::vector<double> rmse, sparsity;
  };
  const auto trials = parallel_map<TrialCurve>(cfg.n_trials, cfg.jobs, [&](std::size_t t) {
    const auto [train, test] = split(ds, cfg, t);
    FitConfig c = fit_cfg;
    c.max_rank = top;
    c.seed = derive_seed(derive_seed(cfg.seed, kFitStream), t);
    const auto full = fit(train, c);
    TrialCurve out;
    for (auto r : r_values) {
      // R = 0 is the empty model, which predicts 0
      const TrainedModel m = r == 0 ? RegressionModel{full.input_shape, {}, {}, 0.0} : truncate(full, r);
      out.rmse.push_back(rmse(test.y, predict_all(m, test)));
      out.sparsity.push_back(sparsity(m, cfg.zero_tol));
    }
    return out;
  });

  std::vector<CurvePoint> curve;
  for (std::size_t k = 0; k < r_values.size(); ++k) {
    std::vector<double> r, s;
    for (const auto& t : trials) {
      r.push_back(t.rmse[k]);
      s.push_back(t.sparsity[k]);
    }
    curve.push_back({r_values[k], mean_of(r), sample_std(r), mean_of(s), sample_std(s), false});
  }
  return curve;
}

}  // namespace mmt
