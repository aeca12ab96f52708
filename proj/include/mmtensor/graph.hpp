#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmtensor/tensor.hpp"

namespace mmt {

inline constexpr std::size_t kRoiCount = 116;
inline constexpr std::size_t kModalityCount = 3;

/// Modality axis order used everywhere: VBM, FDG, AV45.
enum class Modality : std::size_t { VBM = 0, FDG = 1, AV45 = 2 };

std::string_view modality_name(std::size_t modality);
/// Index of "VBM" / "FDG" / "AV45"; throws InputError otherwise.
std::size_t modality_index(std::string_view name);

/// ROI-level measurements for one subject: 116 AAL regions x 3 modalities.
class SubjectFeatures {
 public:
  /// `row_major` holds roi 0 (VBM, FDG, AV45), roi 1 (...), ...
  explicit SubjectFeatures(std::vector<double> row_major);

  static SubjectFeatures zeros();

  double operator()(std::size_t roi, std::size_t modality) const {
    return values_[roi * kModalityCount + modality];
  }
  std::span<const double> values() const { return values_; }
  std::vector<double> modality_column(std::size_t modality) const;

  friend bool operator==(const SubjectFeatures&, const SubjectFeatures&) = default;

 private:
  std::vector<double> values_;
};

struct GraphConfig {
  std::size_t k = kRoiCount;
  double sigma = 1.0;
  /// z-score each modality column across ROIs before computing distances.
  bool zscore = false;

  void validate() const;
};

/// The 116x3 representation: tensor[i][m] = features(i, m).
DenseTensor build_concat(const SubjectFeatures& s);

/// exp(-||a - b||^2 / sigma^2)
double gaussian_similarity(std::span<const double> a, std::span<const double> b, double sigma);

/// Symmetric kNN graph over arbitrary points with Gaussian edge weights.
///
/// Each node keeps its min(k, n-1) nearest other nodes (ties go to the lower
/// index); the result is symmetrized by elementwise max and the diagonal is 1.
DenseTensor knn_gaussian_graph(const std::vector<std::vector<double>>& points, std::size_t k,
                               double sigma);

/// 116x116 connectivity with r_i = (VBM, FDG, AV45) of ROI i.
DenseTensor build_connectivity(const SubjectFeatures& s, const GraphConfig& cfg);

/// 116x116x3: slice [:, :, m] is the kNN graph of modality m's scalar values.
DenseTensor build_connectivity_stack(const SubjectFeatures& s, const GraphConfig& cfg);

enum class RepresentationKind { Concat, Connectivity, Stack };

struct Representation {
  RepresentationKind kind = RepresentationKind::Concat;
  GraphConfig graph;

  /// "concat", "connectivity:k", "stack:k".
  std::string label() const;
  /// Accepts "concat", "connectivity", "connectivity:<k>", "stack", "stack:<k>";
  /// throws InputError for anything else.
  static Representation parse(std::string_view text, double sigma = 1.0);
};

DenseTensor build_representation(const SubjectFeatures& s, const Representation& rep);

}  // namespace mmt
