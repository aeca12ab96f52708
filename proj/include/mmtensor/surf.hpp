#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmtensor/dataset.hpp"
#include "mmtensor/tensor.hpp"

namespace mmt {

/// Settings for the sequential sparse unit-rank regression.
struct FitConfig {
  /// Upper bound on the number of unit-rank components R.
  std::size_t max_rank = 10;
  /// Cap on alternating passes over all modes in one unit-rank fit.
  std::size_t inner_max_iters = 300;
  /// Relative objective change that ends the alternating passes; also the
  /// minimum relative training-RMSE gain required to keep adding components.
  double convergence_tol = 1e-6;
  /// Mode-wise stationarity required (in gradient units) before the
  /// alternating passes are declared converged.
  double kkt_tol = 1e-8;
  std::size_t lambda_grid_size = 10;
  /// Smallest grid value is lambda_max * lambda_min_ratio.
  double lambda_min_ratio = 1e-3;
  /// Held-out share of the residuals used to pick lambda.
  double validation_fraction = 0.2;
  std::size_t power_iterations = 20;
  std::size_t cd_max_sweeps = 2000;
  /// Fit an unpenalized constant before the unit-rank sequence.
  bool fit_intercept = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Component {
  UnitRankTensor tensor;
  double lambda = 0.0;
  /// Constant added with this component; -<mean x, tensor> when fitted with an intercept.
  double offset = 0.0;
};

struct RegressionModel {
  Shape input_shape;
  std::vector<Component> components;
  /// Training RMSE after each accepted component.
  std::vector<double> train_rmse_path;
  double intercept = 0.0;
};

struct UnitRankFit {
  UnitRankTensor tensor;
  double lambda = 0.0;
  double objective = 0.0;
  std::size_t passes = 0;
  bool converged = false;
};

/// (1/N) sum_i (<w, x_i> - y_i)^2 + lambda ||w||_1
double unit_rank_objective(std::span<const DenseTensor> xs, std::span<const double> y,
                           const UnitRankTensor& w, double lambda);

/// Rank-1 higher-order power iteration on sum_i y_i x_i from a seeded
/// random start. Returns the zero tensor when that sum vanishes.
UnitRankTensor power_init(std::span<const DenseTensor> xs, std::span<const double> y,
                          std::size_t iterations, std::uint64_t seed);

/// Smallest lambda for which zero is optimal in the first mode update
/// started from `init`.
double lambda_max(std::span<const DenseTensor> xs, std::span<const double> y,
                  const UnitRankTensor& init);

/// Alternating mode-wise Lasso at a fixed lambda, started from `init`.
/// The result is in canonical form (see canonicalize).
UnitRankFit fit_unit_rank_fixed(std::span<const DenseTensor> xs, std::span<const double> y,
                                double lambda, const UnitRankTensor& init, const FitConfig& cfg);

/// One unit-rank step with lambda chosen on an internal held-out split and
/// a refit on all residuals. Returns the zero component when no lambda on
/// the grid beats predicting zero on the held-out part.
UnitRankFit fit_unit_rank(std::span<const DenseTensor> xs, std::span<const double> residuals,
                          const FitConfig& cfg);

/// Scale every factor but the first to unit l2 norm with a nonnegative
/// largest-magnitude entry; the first factor absorbs scale and sign.
UnitRankTensor canonicalize(const UnitRankTensor& w);

struct FitResult {
  RegressionModel model;
  /// y_i - intercept - sum_r <W_r, X_i> as tracked by the solver.
  std::vector<double> residuals;
};

FitResult fit_detailed(const Dataset& ds, const FitConfig& cfg);
RegressionModel fit(const Dataset& ds, const FitConfig& cfg);

double predict(const RegressionModel& m, const DenseTensor& x);
DenseTensor coefficient_tensor(const RegressionModel& m);

/// Keep the first `rank` components (a nested model of the same fit).
RegressionModel truncate(const RegressionModel& m, std::size_t rank);

inline constexpr double kDefaultZeroTol = 1e-10;

/// Percentage of entries with |v| <= zero_tol.
double sparsity_percent(std::span<const double> values, double zero_tol = kDefaultZeroTol);
double model_sparsity(const RegressionModel& m, double zero_tol = kDefaultZeroTol);

struct ModalityScore {
  std::size_t modality = 0;
  double score = 0.0;
};

/// Mean |w_r(mode)[m]| over components, sorted descending; ties keep the
/// VBM, FDG, AV45 order.
std::vector<ModalityScore> modality_contribution(const RegressionModel& m,
                                                 std::size_t modality_mode);

}  // namespace mmt
