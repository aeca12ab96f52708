#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mmtensor/baselines.hpp"
#include "mmtensor/data_io.hpp"
#include "mmtensor/dataset.hpp"
#include "mmtensor/surf.hpp"

namespace mmt {

// ---------------------------------------------------------------------------
// Methods under comparison
// ---------------------------------------------------------------------------

/// One point of a method's hyperparameter grid. Each method reads only the
/// fields that concern it.
struct HyperParams {
  std::size_t rank = 1;
  double lambda = 0.0;
  double alpha = 1.0;
  double lambda_group = 0.0;
  double lambda_l1 = 0.0;
  GroupMode grouping = GroupMode::ByRoi;
  double fraction = 1.0;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

using TrainedModel = std::variant<RegressionModel, LinearModel>;

double predict(const TrainedModel& m, const DenseTensor& x);
double sparsity(const TrainedModel& m, double zero_tol = kDefaultZeroTol);

class Method {
 public:
  virtual ~Method() = default;

  virtual std::string name() const = 0;
  virtual std::vector<HyperParams> grid(const Shape& shape) const = 0;
  /// Second-stage grid around the best first-stage point (empty: none).
  virtual std::vector<HyperParams> refine(const HyperParams& best, const Shape& shape) const;
  virtual TrainedModel fit(const Dataset& train, const HyperParams& hp, std::uint64_t seed) const = 0;
  /// Held-out RMSE for each grid point after training on `train`. The default
  /// fits every point separately.
  virtual std::vector<double> validation_rmse(const Dataset& train, const Dataset& validation,
                                              std::span<const HyperParams> grid,
                                              std::uint64_t seed) const;
  /// "key=value;key=value" description of the fields this method uses.
  virtual std::string describe(const HyperParams& hp) const = 0;
};

/// Hyperparameter grids for the five methods.
struct MethodGrids {
  std::vector<std::size_t> proposed_ranks;  // default 1..70
  std::vector<double> lasso_lambdas;        // default 0.1..1.0
  std::vector<double> enet_lambdas;         // default 0.1..1.0
  std::vector<double> enet_alphas;          // default 0.1..1.0
  std::vector<double> glasso_coarse;        // default 1e-6..1e1
  std::vector<double> glasso_fine;          // multipliers of the chosen magnitude, default 1..10
  std::vector<double> pca_fractions;        // default 0.05..1.0

  static MethodGrids defaults();
};

/// Solver settings used by the proposed method inside the protocol: the
/// library defaults plus an unpenalized intercept.
FitConfig protocol_fit_config();

std::unique_ptr<Method> make_method(const std::string& name, const MethodGrids& grids,
                                    const FitConfig& proposed = protocol_fit_config(),
                                    const LinearFitOptions& linear = {});

/// "proposed", "lasso", "enet", "glasso", "pca-lr"
const std::vector<std::string>& method_names();

// ---------------------------------------------------------------------------
// Protocol
// ---------------------------------------------------------------------------

struct ProtocolConfig {
  /// Share of subjects held out for testing (5:1 split).
  double test_fraction = 1.0 / 6.0;
  std::size_t cv_folds = 5;
  std::size_t n_trials = 5;
  std::uint64_t seed = 0;
  /// Draw a fresh train/test split for every trial; otherwise reuse trial 0's.
  bool resplit_per_trial = true;
  /// Spread the test set evenly over the sorted responses.
  bool stratify = false;
  std::size_t jobs = 1;
  double zero_tol = kDefaultZeroTol;

  void validate() const;
};

double rmse(std::span<const double> y_true, std::span<const double> y_pred);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Test size = round(N * test_fraction); deterministic in (seed, trial).
Split split_indices(std::size_t n, const ProtocolConfig& cfg, std::size_t trial,
                    std::span<const double> y = {});
std::pair<Dataset, Dataset> split(const Dataset& ds, const ProtocolConfig& cfg, std::size_t trial);

/// Disjoint, exhaustive, near-equal folds in seeded random order.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t folds,
                                                    std::uint64_t seed);

struct CvResult {
  HyperParams best;
  double best_rmse = 0.0;
  std::vector<HyperParams> evaluated;
  std::vector<double> mean_rmse;
};

/// Lowest mean fold RMSE wins; ties go to the earlier grid point.
CvResult cross_validate(const Dataset& train, const Method& method,
                        std::span<const HyperParams> grid, const ProtocolConfig& cfg,
                        std::uint64_t seed);

struct TrialRecord {
  std::size_t trial = 0;
  std::string score;
  std::string representation;
  std::string method;
  double rmse = 0.0;
  double sparsity = 0.0;
  double cv_rmse = 0.0;
  std::string hyperparameters;
};

struct Aggregate {
  std::string score;
  std::string representation;
  std::string method;
  std::size_t n_trials = 0;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;
  double sparsity_mean = 0.0;
  double sparsity_std = 0.0;
};

struct RoiRank {
  std::size_t roi = 0;
  std::size_t frequency = 0;
  double mean_mass = 0.0;
};

struct EvalReport {
  std::vector<TrialRecord> records;
  std::vector<Aggregate> aggregates;
  std::vector<RoiRank> roi_ranking;
  std::vector<ModalityScore> modality_ranking;

  /// Appends another report's records and recomputes the aggregates.
  void merge(const EvalReport& other);
};

/// Mean and sample (n-1) standard deviation per (score, representation,
/// method), in sorted key order.
std::vector<Aggregate> aggregate(std::vector<TrialRecord> records);

struct BenchmarkResult {
  EvalReport report;
  /// Test-set-evaluated model for each record, same order.
  std::vector<TrainedModel> models;
};

BenchmarkResult run_benchmark(const Dataset& ds, const std::string& representation,
                              std::span<const Method* const> methods, const ProtocolConfig& cfg,
                              std::size_t top_n = 10);

/// ROI = index along mode 0; every mode with the same extent is an ROI mode.
/// An ROI is selected in a model when any coefficient touching it exceeds
/// zero_tol. Sorted by frequency, then mean |coefficient| mass, then index.
std::vector<RoiRank> roi_ranking(std::span<const RegressionModel> models, std::size_t top_n,
                                 double zero_tol = kDefaultZeroTol);

/// Mean modality scores over models; empty when no trailing mode of length 3.
std::vector<ModalityScore> modality_ranking(std::span<const RegressionModel> models);

struct CurvePoint {
  std::size_t value = 0;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;
  double sparsity_mean = 0.0;
  double sparsity_std = 0.0;
  bool fully_connected = false;
};

/// One benchmark of the proposed method (fixed rank) per k.
std::vector<CurvePoint> sweep_k(const Cohort& cohort, ScoreKind score, RepresentationKind kind,
                                std::span<const std::size_t> k_values, double sigma,
                                std::size_t rank, const ProtocolConfig& cfg,
                                const FitConfig& fit_cfg = protocol_fit_config(),
                                NormalizationMode norm = NormalizationMode::InstrumentRange);

/// Test RMSE and sparsity against max_rank. Each trial fits once at the
/// largest R and evaluates the nested prefixes; R = 0 is the empty model
/// (no intercept), which predicts 0.
std::vector<CurvePoint> sweep_rank(const Dataset& ds, std::span<const std::size_t> r_values,
                                   const ProtocolConfig& cfg,
                                   const FitConfig& fit_cfg = protocol_fit_config());

}  // namespace mmt
