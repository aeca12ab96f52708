#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmtensor/dataset.hpp"
#include "mmtensor/graph.hpp"
#include "mmtensor/tensor.hpp"

namespace mmt {

// ---------------------------------------------------------------------------
// Cohort CSV
//
// Header: subject_id, 348 feature columns <MOD>_<ROI> (MOD in VBM/FDG/AV45,
// ROI an AAL-116 label), DSS, ADAS13, MMSE. Column order is free; values use
// '.' as decimal point.
// ---------------------------------------------------------------------------

struct RawScores {
  double dss = 0.0;
  double adas13 = 0.0;
  double mmse = 0.0;

  friend bool operator==(const RawScores&, const RawScores&) = default;
};

struct Cohort {
  std::vector<std::string> ids;
  std::vector<SubjectFeatures> subjects;
  std::vector<RawScores> scores;

  std::size_t size() const { return ids.size(); }
};

/// "VBM_Hippocampus_L" etc.
std::string feature_column_name(std::size_t modality, std::size_t roi);

/// Throws InputError with the offending row/column named; IoError when the
/// file cannot be read.
Cohort load_cohort(const std::filesystem::path& path);
Cohort parse_cohort(std::istream& in, const std::string& source = "<stream>");

/// Columns in canonical order; numbers in shortest round-trip form.
void write_cohort(std::ostream& out, const Cohort& cohort);
void write_cohort(const std::filesystem::path& path, const Cohort& cohort);

// ---------------------------------------------------------------------------
// Clinical scores
// ---------------------------------------------------------------------------

enum class ScoreKind { DSS, ADAS13, MMSE };

std::string_view score_name(ScoreKind kind);
ScoreKind parse_score(std::string_view name);

enum class NormalizationMode {
  /// Fixed instrument ranges: DSS 1..5, ADAS-13 0..85, MMSE 0..30.
  InstrumentRange,
  /// Min-max over the cohort at hand.
  CohortMinMax,
};

/// Maps one raw score to [0, 1], higher = more severe. MMSE is flipped.
double normalize_score(ScoreKind kind, double raw);

std::vector<double> normalize_scores(ScoreKind kind, std::span<const double> raw,
                                     NormalizationMode mode = NormalizationMode::InstrumentRange);

std::vector<double> raw_score_column(const Cohort& cohort, ScoreKind kind);

/// Tensors for every subject under `rep` with the chosen normalized score.
Dataset build_dataset(const Cohort& cohort, const Representation& rep, ScoreKind score,
                      NormalizationMode mode = NormalizationMode::InstrumentRange);

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

struct SynthConfig {
  std::size_t n_subjects = 200;
  Shape shape{20, 20, 3};
  std::size_t true_rank = 1;
  /// Fraction of nonzero entries in each planted factor.
  double support_density = 0.1;
  double noise_std = 0.0;
  /// Interpret noise_std in the units of the [0,1]-rescaled response rather
  /// than of the raw signal.
  bool noise_in_rescaled_units = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// y01 = scale * raw + offset
struct AffineMap {
  double scale = 1.0;
  double offset = 0.0;

  double apply(double raw) const { return scale * raw + offset; }
  double invert(double y01) const { return (y01 - offset) / scale; }
};

struct SyntheticData {
  Dataset dataset;
  std::vector<UnitRankTensor> truth;
  /// <sum_r W*_r, X_i> without noise.
  std::vector<double> signal;
  /// signal + noise, before rescaling.
  std::vector<double> raw_response;
  AffineMap rescale;
  /// Standard deviation of the noise actually drawn, in raw units.
  double noise_std_raw = 0.0;

  /// Noise standard deviation in the units of dataset.y.
  double noise_floor() const { return noise_std_raw * rescale.scale; }
};

/// X entries and planted factor values are i.i.d. standard normal; each
/// factor has ceil(density * I_j) nonzeros at seeded positions.
SyntheticData generate_synthetic(const SynthConfig& cfg);

DenseTensor planted_coefficient(const std::vector<UnitRankTensor>& truth, const Shape& shape);

/// Synthetic cohort whose response is planted on the fully connected
/// (k = 116) connectivity representation.
struct CohortSynthConfig {
  std::size_t n_subjects = 120;
  std::size_t true_rank = 1;
  double support_density = 0.05;
  double noise_std = 0.0;
  /// Per-subject jitter of ROI features around the shared ROI means.
  double feature_spread = 0.25;
  double sigma = 1.0;
  std::uint64_t seed = 0;
};

struct SyntheticCohort {
  Cohort cohort;
  /// Response in [0,1]; ADAS13 and MMSE columns encode it exactly.
  std::vector<double> response;
  std::vector<UnitRankTensor> truth;
};

SyntheticCohort generate_synthetic_cohort(const CohortSynthConfig& cfg);

/// Raw scores whose instrument-range normalization is y01 (DSS is rounded
/// to the nearest stage).
RawScores scores_from_response(double y01);

}  // namespace mmt
