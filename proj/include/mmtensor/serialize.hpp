#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmtensor/dataset.hpp"
#include "mmtensor/evaluation.hpp"

namespace mmt {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Models
//
// {"format": "mmtensor-model", "version": 1, "method": ..., "input_shape": [...],
//  "intercept": b, ...}
// proposed: "components": [{"lambda": l, "factors": [[...], ...]}], "train_rmse_path": [...]
// linear:   "weights": [...], "hyperparameters": {...}, "grouping": "by-roi"
// Numbers are written in shortest round-trip decimal form.
// ---------------------------------------------------------------------------

Json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const Json& j);

void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Tensor dumps
//
// {"format": "mmtensor-tensors", "representation": ..., "shape": [...],
//  "subjects": [{"id": ..., "values": [...]}], "responses": {"ADAS13": [...]}}
// Values are row-major.
// ---------------------------------------------------------------------------

struct TensorDump {
  std::string representation;
  Shape shape;
  std::vector<std::string> ids;
  std::vector<DenseTensor> tensors;
  /// Response name -> one value per subject.
  std::map<std::string, std::vector<double>> responses;

  /// Dataset with the named response; throws InputError if absent.
  Dataset dataset(const std::string& response) const;
  void validate() const;
};

Json dump_to_json(const TensorDump& dump);
TensorDump dump_from_json(const Json& j);
void save_dump(const std::filesystem::path& path, const TensorDump& dump);
TensorDump load_dump(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Reports and curves
// ---------------------------------------------------------------------------

inline constexpr const char* kReportCsvHeader =
    "trial,score,representation,method,rmse,sparsity,cv_rmse,hyperparameters";
inline constexpr const char* kSummaryCsvHeader =
    "score,representation,method,n_trials,rmse_mean,rmse_std,sparsity_mean,sparsity_std";
inline constexpr const char* kRoiCsvHeader = "rank,roi,label,frequency,mean_mass";
inline constexpr const char* kModalityCsvHeader = "rank,modality,score";

/// `value_name` heads the first column ("k" or "rank").
std::string curve_csv_header(const std::string& value_name);

Json report_to_json(const EvalReport& report);
void write_report_csv(std::ostream& out, const std::vector<TrialRecord>& records);
void write_summary_csv(std::ostream& out, const std::vector<Aggregate>& aggregates);
/// Labels come from the AAL list when the ROI extent is 116.
void write_roi_csv(std::ostream& out, const std::vector<RoiRank>& ranks, std::size_t roi_extent);
void write_modality_csv(std::ostream& out, const std::vector<ModalityScore>& scores);
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve,
                     const std::string& value_name);

std::string csv_escape(const std::string& field);

/// Whole-file helpers that throw IoError.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace mmt
