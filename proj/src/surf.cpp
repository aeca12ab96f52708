#include "mmtensor/surf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "mmtensor/errors.hpp"
#include "mmtensor/random.hpp"

namespace mmt {

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double l1(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double l2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

void check_problem(std::span<const DenseTensor> xs, std::span<const double> y) {
  if (xs.empty()) throw InputError("unit-rank fit needs at least one subject");
  if (xs.size() != y.size())
    throw InputError("unit-rank fit: " + std::to_string(xs.size()) + " tensors but " +
                     std::to_string(y.size()) + " responses");
  const auto& shape = xs.front().shape();
  for (const auto& x : xs)
    if (x.shape() != shape) throw InputError("unit-rank fit: tensors must share one shape");
}

/// Mode-j least-squares statistics with all other factors held fixed:
/// gram = Z^T Z / N, cross = Z^T y / N, where row i of Z is
/// contract_except(x_i, w, j).
struct ModeSystem {
  std::size_t dim = 0;
  std::vector<double> gram;
  std::vector<double> cross;
};

ModeSystem mode_system(std::span<const DenseTensor> xs, std::span<const double> y,
                       const std::vector<std::vector<double>>& factors, std::size_t mode) {
  const auto& shape = xs.front().shape();
  const std::size_t n = xs.size();
  const std::size_t dim = shape[mode];
  ModeSystem sys;
  sys.dim = dim;
  sys.gram.assign(dim * dim, 0.0);
  sys.cross.assign(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = contract_except(xs[i].values(), shape, factors, mode);
    for (std::size_t a = 0; a < dim; ++a) {
      sys.cross[a] += z[a] * y[i];
      const double za = z[a];
      if (za == 0.0) continue;
      double* row = sys.gram.data() + a * dim;
      for (std::size_t b = a; b < dim; ++b) row[b] += za * z[b];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t a = 0; a < dim; ++a) {
    sys.cross[a] *= inv_n;
    for (std::size_t b = a; b < dim; ++b) {
      sys.gram[a * dim + b] *= inv_n;
      sys.gram[b * dim + a] = sys.gram[a * dim + b];
    }
  }
  return sys;
}

// d/dw_k of the mean squared loss: -2 (cross_k - (gram w)_k)
double loss_gradient(const ModeSystem& sys, std::span<const double> w, std::size_t k) {
  const double* row = sys.gram.data() + k * sys.dim;
  double gw = 0.0;
  for (std::size_t b = 0; b < sys.dim; ++b) gw += row[b] * w[b];
  return -2.0 * (sys.cross[k] - gw);
}

double kkt_violation(const ModeSystem& sys, std::span<const double> w, double penalty) {
  double worst = 0.0;
  for (std::size_t k = 0; k < sys.dim; ++k) {
    const double g = loss_gradient(sys, w, k);
    const double v = w[k] != 0.0 ? std::abs(g + penalty * (w[k] > 0 ? 1.0 : -1.0))
                                 : std::max(0.0, std::abs(g) - penalty);
    worst = std::max(worst, v);
  }
  return worst;
}

// Loss part (without the y^T y / N constant): -2 w^T cross + w^T gram w.
double quadratic_part(const ModeSystem& sys, std::span<const double> w) {
  double q = 0.0;
  for (std::size_t a = 0; a < sys.dim; ++a) {
    if (w[a] == 0.0) continue;
    double gw = 0.0;
    for (std::size_t b = 0; b < sys.dim; ++b) gw += sys.gram[a * sys.dim + b] * w[b];
    q += w[a] * (gw - 2.0 * sys.cross[a]);
  }
  return q;
}

/// Cyclic coordinate descent for min w^T G w - 2 c^T w + penalty ||w||_1.
void lasso_cd(const ModeSystem& sys, double penalty, std::vector<double>& w,
              std::size_t max_sweeps) {
  const std::size_t dim = sys.dim;
  // gw = G w, kept current across coordinate updates
  std::vector<double> gw(dim, 0.0);
  for (std::size_t a = 0; a < dim; ++a)
    for (std::size_t b = 0; b < dim; ++b) gw[a] += sys.gram[a * dim + b] * w[b];

  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_step = 0.0;
    double scale = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double gkk = sys.gram[k * dim + k];
      double next = 0.0;
      if (gkk > 0.0) {
        const double rho = sys.cross[k] - (gw[k] - gkk * w[k]);
        next = soft_threshold(rho, 0.5 * penalty) / gkk;
      }
      const double delta = next - w[k];
      if (delta != 0.0) {
        const double* col = sys.gram.data() + k * dim;
        for (std::size_t a = 0; a < dim; ++a) gw[a] += col[a] * delta;
        w[k] = next;
      }
      max_step = std::max(max_step, 2.0 * gkk * std::abs(delta));
      scale = std::max(scale, std::abs(sys.cross[k]));
    }
    if (max_step <= 1e-14 * std::max(1.0, scale)) break;
  }
}

double mean_square(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s / static_cast<double>(v.size());
}

double penalty_except(const std::vector<std::vector<double>>& factors, std::size_t mode) {
  double p = 1.0;
  for (std::size_t j = 0; j < factors.size(); ++j)
    if (j != mode) p *= l1(factors[j]);
  return p;
}

std::vector<double> predictions(std::span<const DenseTensor> xs, const UnitRankTensor& w) {
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = inner_product(xs[i], w);
  return out;
}

template <typename T>
std::vector<T> gather(std::span<const T> v, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

UnitRankFit zero_fit(const Shape& shape, std::span<const double> y, double lambda) {
  return UnitRankFit{UnitRankTensor::zeros(shape), lambda, mean_square(y), 0, true};
}

}  // namespace

void FitConfig::validate() const {
  if (max_rank < 1) throw InputError("max_rank must be at least 1");
  if (inner_max_iters < 1) throw InputError("inner_max_iters must be at least 1");
  if (!(convergence_tol > 0.0)) throw InputError("convergence_tol must be positive");
  if (!(kkt_tol > 0.0)) throw InputError("kkt_tol must be positive");
  if (lambda_grid_size < 2) throw InputError("lambda_grid_size must be at least 2");
  if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0))
    throw InputError("lambda_min_ratio must lie in (0, 1)");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw InputError("validation_fraction must lie in (0, 1)");
}

double unit_rank_objective(std::span<const DenseTensor> xs, std::span<const double> y,
                           const UnitRankTensor& w, double lambda) {
  check_problem(xs, y);
  double loss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = inner_product(xs[i], w) - y[i];
    loss += r * r;
  }
  return loss / static_cast<double>(xs.size()) + lambda * l1_norm(w);
}

UnitRankTensor canonicalize(const UnitRankTensor& w) {
  if (w.is_zero()) return UnitRankTensor::zeros(w.shape());
  auto factors = w.factors();
  for (std::size_t j = 1; j < factors.size(); ++j) {
    auto& f = factors[j];
    const double norm = l2(f);
    for (double& v : f) v /= norm;
    for (double& v : factors[0]) v *= norm;
    std::size_t arg = 0;
    for (std::size_t k = 1; k < f.size(); ++k)
      if (std::abs(f[k]) > std::abs(f[arg])) arg = k;
    if (f[arg] < 0.0) {
      for (double& v : f) v = -v;
      for (double& v : factors[0]) v = -v;
    }
  }
  // -0.0 -> 0.0 keeps serialization stable
  for (auto& f : factors)
    for (double& v : f)
      if (v == 0.0) v = 0.0;
  return UnitRankTensor(std::move(factors));
}

UnitRankTensor power_init(std::span<const DenseTensor> xs, std::span<const double> y,
                          std::size_t iterations, std::uint64_t seed) {
  check_problem(xs, y);
  const auto& shape = xs.front().shape();
  std::vector<double> g(element_count(shape), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto v = xs[i].values();
    for (std::size_t e = 0; e < g.size(); ++e) g[e] += y[i] * v[e];
  }
  if (all_zero(g)) return UnitRankTensor::zeros(shape);

  Rng rng(seed);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> factors;
  for (auto extent : shape) {
    std::vector<double> f(extent);
    for (double& v : f) v = normal(rng);
    const double norm = l2(f);
    for (double& v : f) v /= norm;
    factors.push_back(std::move(f));
  }
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t j = 0; j < shape.size(); ++j) {
      auto z = contract_except(g, shape, factors, j);
      const double norm = l2(z);
      if (norm == 0.0) return UnitRankTensor::zeros(shape);
      for (double& v : z) v /= norm;
      factors[j] = std::move(z);
    }
  }
  return UnitRankTensor(std::move(factors));
}

double lambda_max(std::span<const DenseTensor> xs, std::span<const double> y,
                  const UnitRankTensor& init) {
  check_problem(xs, y);
  if (init.is_zero()) return 0.0;
  const auto sys = mode_system(xs, y, init.factors(), 0);
  double worst = 0.0;
  for (double c : sys.cross) worst = std::max(worst, std::abs(c));
  return 2.0 * worst / penalty_except(init.factors(), 0);
}

UnitRankFit fit_unit_rank_fixed(std::span<const DenseTensor> xs, std::span<const double> y,
                                double lambda, const UnitRankTensor& init, const FitConfig& cfg) {
  check_problem(xs, y);
  const auto& shape = xs.front().shape();
  if (init.shape() != shape) throw InputError("initial factors do not match the tensor shape");
  if (lambda < 0.0 || !std::isfinite(lambda)) throw InputError("lambda must be nonnegative");
  if (init.is_zero()) return zero_fit(shape, y, lambda);

  const double yy = mean_square(y);
  auto factors = init.factors();
  const std::size_t order = shape.size();

  UnitRankFit result{UnitRankTensor::zeros(shape), lambda, yy, 0, false};
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t pass = 1; pass <= cfg.inner_max_iters; ++pass) {
    double worst_kkt = 0.0;
    double objective = yy;
    for (std::size_t j = 0; j < order; ++j) {
      const double other = penalty_except(factors, j);
      if (other == 0.0) return zero_fit(shape, y, lambda);
      const double penalty = lambda * other;
      const auto sys = mode_system(xs, y, factors, j);
      worst_kkt = std::max(worst_kkt, kkt_violation(sys, factors[j], penalty));
      lasso_cd(sys, penalty, factors[j], cfg.cd_max_sweeps);
      if (all_zero(factors[j])) return zero_fit(shape, y, lambda);
      objective = yy + quadratic_part(sys, factors[j]) + penalty * l1(factors[j]);
    }
    factors = canonicalize(UnitRankTensor(std::move(factors))).factors();
    result.passes = pass;
    result.objective = objective;
    const double change = std::abs(previous - objective);
    previous = objective;
    if (change <= cfg.convergence_tol * std::max(std::abs(objective), 1e-300) &&
        worst_kkt <= cfg.kkt_tol) {
      result.converged = true;
      break;
    }
  }
  result.tensor = UnitRankTensor(std::move(factors));
  if (!std::isfinite(result.objective)) throw NumericalError("unit-rank fit diverged");
  return result;
}

UnitRankFit fit_unit_rank(std::span<const DenseTensor> xs, std::span<const double> residuals,
                          const FitConfig& cfg) {
  check_problem(xs, residuals);
  cfg.validate();
  const auto& shape = xs.front().shape();
  if (all_zero(residuals)) return zero_fit(shape, residuals, 0.0);

  const std::size_t n = xs.size();
  Rng rng(cfg.seed);

  // Held-out split for lambda selection. Tiny problems skip it and take the
  // smallest lambda on the grid.
  std::vector<std::size_t> order = iota_indices(n);
  deterministic_shuffle(order, rng);
  const bool holdout = n >= 5;
  std::size_t n_val = 0;
  if (holdout) {
    n_val = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(n)));
    n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  }
  std::vector<std::size_t> fit_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(fit_idx.begin(), fit_idx.end());
  std::sort(val_idx.begin(), val_idx.end());

  const auto fit_xs = gather(xs, fit_idx);
  const auto fit_y = gather(residuals, fit_idx);
  const auto val_xs = gather(xs, val_idx);
  const auto val_y = gather(residuals, val_idx);

  const std::uint64_t init_seed = rng();
  const auto init = power_init(fit_xs, fit_y, cfg.power_iterations, init_seed);
  const double lmax = lambda_max(fit_xs, fit_y, init);
  if (!(lmax > 0.0)) return zero_fit(shape, residuals, 0.0);

  std::vector<double> grid(cfg.lambda_grid_size);
  for (std::size_t t = 0; t < grid.size(); ++t)
    grid[t] = lmax * std::pow(cfg.lambda_min_ratio,
                              static_cast<double>(t) / static_cast<double>(grid.size() - 1));

  double chosen = grid.back();
  if (holdout) {
    const double zero_rmse = std::sqrt(mean_square(val_y));
    double best_rmse = std::numeric_limits<double>::infinity();
    UnitRankTensor warm = init;
    for (double lambda : grid) {
      const auto path_fit = fit_unit_rank_fixed(fit_xs, fit_y, lambda, warm, cfg);
      if (!path_fit.tensor.is_zero()) warm = path_fit.tensor;
      const auto pred = predictions(val_xs, path_fit.tensor);
      double se = 0.0;
      for (std::size_t i = 0; i < pred.size(); ++i) se += (pred[i] - val_y[i]) * (pred[i] - val_y[i]);
      const double rmse = std::sqrt(se / static_cast<double>(pred.size()));
      // grid runs high to low, so "<=" lets the lower lambda win ties
      if (rmse <= best_rmse) {
        best_rmse = rmse;
        chosen = lambda;
      }
    }
    if (!(best_rmse < zero_rmse)) return zero_fit(shape, residuals, lmax);
  }

  const auto full_init = holdout ? power_init(xs, residuals, cfg.power_iterations, init_seed) : init;
  auto result = fit_unit_rank_fixed(xs, residuals, chosen, full_init, cfg);
  if (result.tensor.is_zero() || result.objective > mean_square(residuals))
    return zero_fit(shape, residuals, chosen);
  return result;
}

FitResult fit_detailed(const Dataset& ds, const FitConfig& cfg) {
  ds.validate();
  cfg.validate();
  const std::size_t n = ds.size();

  FitResult out;
  out.model.input_shape = ds.shape();
  out.model.intercept =
      cfg.fit_intercept ? std::accumulate(ds.y.begin(), ds.y.end(), 0.0) / static_cast<double>(n)
                        : 0.0;
  out.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.residuals[i] = ds.y[i] - out.model.intercept;

  // With an intercept the components are fitted to centered tensors.
  std::vector<DenseTensor> centered;
  std::optional<DenseTensor> mean_x;
  if (cfg.fit_intercept) {
    std::vector<double> mean(element_count(ds.shape()), 0.0);
    for (const auto& x : ds.xs) {
      const auto v = x.values();
      for (std::size_t e = 0; e < mean.size(); ++e) mean[e] += v[e];
    }
    for (double& v : mean) v /= static_cast<double>(n);
    centered.reserve(n);
    for (const auto& x : ds.xs) {
      std::vector<double> c(x.values().begin(), x.values().end());
      for (std::size_t e = 0; e < c.size(); ++e) c[e] -= mean[e];
      centered.emplace_back(ds.shape(), std::move(c));
    }
    mean_x.emplace(ds.shape(), std::move(mean));
  }
  const std::span<const DenseTensor> xs = cfg.fit_intercept ? std::span<const DenseTensor>(centered)
                                                            : std::span<const DenseTensor>(ds.xs);

  double previous = std::sqrt(mean_square(out.residuals));
  for (std::size_t r = 0; r < cfg.max_rank; ++r) {
    FitConfig step = cfg;
    step.seed = derive_seed(cfg.seed, r);
    auto unit = fit_unit_rank(xs, out.residuals, step);
    if (unit.tensor.is_zero()) break;

    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = out.residuals[i] - inner_product(xs[i], unit.tensor);
    const double rmse = std::sqrt(mean_square(next));
    if (rmse > previous) break;

    const double offset = mean_x ? -inner_product(*mean_x, unit.tensor) : 0.0;
    out.model.components.push_back({std::move(unit.tensor), unit.lambda, offset});
    out.model.train_rmse_path.push_back(rmse);
    out.residuals = std::move(next);
    const bool stalled = previous - rmse < cfg.convergence_tol * previous;
    previous = rmse;
    if (stalled) break;
  }
  return out;
}

RegressionModel fit(const Dataset& ds, const FitConfig& cfg) { return fit_detailed(ds, cfg).model; }

double predict(const RegressionModel& m, const DenseTensor& x) {
  if (x.shape() != m.input_shape)
    throw InputError("predict: model expects shape " + shape_to_string(m.input_shape) + ", got " +
                     shape_to_string(x.shape()));
  double y = m.intercept;
  for (const auto& c : m.components) y += inner_product(x, c.tensor) + c.offset;
  return y;
}

DenseTensor coefficient_tensor(const RegressionModel& m) {
  std::vector<double> sum(element_count(m.input_shape), 0.0);
  for (const auto& c : m.components) {
    const auto w = materialize(c.tensor);
    for (std::size_t e = 0; e < sum.size(); ++e) sum[e] += w.values()[e];
  }
  return DenseTensor(m.input_shape, std::move(sum));
}

RegressionModel truncate(const RegressionModel& m, std::size_t rank) {
  RegressionModel out = m;
  if (rank < out.components.size()) {
    out.components.erase(out.components.begin() + static_cast<std::ptrdiff_t>(rank), out.components.end());
    out.train_rmse_path.resize(rank);
  }
  return out;
}

double sparsity_percent(std::span<const double> values, double zero_tol) {
  if (values.empty()) return 100.0;
  const auto zeros = std::count_if(values.begin(), values.end(),
                                   [&](double v) { return std::abs(v) <= zero_tol; });
  return 100.0 * static_cast<double>(zeros) / static_cast<double>(values.size());
}

double model_sparsity(const RegressionModel& m, double zero_tol) {
  if (m.components.empty()) return 100.0;
  return sparsity_percent(coefficient_tensor(m).values(), zero_tol);
}

std::vector<ModalityScore> modality_contribution(const RegressionModel& m,
                                                 std::size_t modality_mode) {
  if (modality_mode >= m.input_shape.size() || m.input_shape[modality_mode] != 3)
    throw InputError("modality mode must index a mode of length 3");
  std::vector<ModalityScore> scores(3);
  for (std::size_t k = 0; k < 3; ++k) scores[k].modality = k;
  if (!m.components.empty()) {
    for (const auto& c : m.components) {
      const auto f = c.tensor.factor(modality_mode);
      for (std::size_t k = 0; k < 3; ++k) scores[k].score += std::abs(f[k]);
    }
    for (auto& s : scores) s.score /= static_cast<double>(m.components.size());
  }
  std::stable_sort(scores.begin(), scores.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  return scores;
}

}  // namespace mmt
