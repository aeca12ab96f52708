#include "mmtensor/serialize.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mmtensor/aal.hpp"
#include "mmtensor/errors.hpp"
#include "mmtensor/format.hpp"
#include "mmtensor/graph.hpp"

namespace mmt {

namespace {

constexpr const char* kModelFormat = "mmtensor-model";
constexpr const char* kDumpFormat = "mmtensor-tensors";

// -0.0 would print as "-0" and break byte comparisons between equal models.
double clean(double v) { return v == 0.0 ? 0.0 : v; }

Json number_array(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(clean(x));
  return a;
}

std::vector<double> read_numbers(const Json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw InputError(what + " must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Shape read_shape(const Json& j) {
  if (!j.is_array() || j.empty()) throw InputError("shape must be a non-empty array");
  Shape s;
  for (const auto& x : j) {
    if (!x.is_number_unsigned() || x.get<std::size_t>() == 0)
      throw InputError("shape entries must be positive integers");
    s.push_back(x.get<std::size_t>());
  }
  return s;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
  return j.at(key);
}

std::string csv_number(double v) { return std::isnan(v) ? std::string() : format_double(clean(v)); }

Json json_number(double v) { return std::isfinite(v) ? Json(clean(v)) : Json(nullptr); }

}  // namespace

// ---------------------------------------------------------------------------

Json model_to_json(const TrainedModel& model) {
  Json j;
  j["format"] = kModelFormat;
  j["version"] = 1;
  if (const auto* m = std::get_if<RegressionModel>(&model)) {
    j["method"] = "proposed";
    j["input_shape"] = m->input_shape;
    j["intercept"] = clean(m->intercept);
    Json comps = Json::array();
    for (const auto& c : m->components) {
      Json factors = Json::array();
      for (const auto& f : c.tensor.factors()) factors.push_back(number_array(f));
      comps.push_back(Json{{"lambda", clean(c.lambda)}, {"offset", clean(c.offset)}, {"factors", factors}});
    }
    j["components"] = comps;
    j["train_rmse_path"] = number_array(m->train_rmse_path);
  } else {
    const auto& l = std::get<LinearModel>(model);
    j["method"] = l.method;
    j["input_shape"] = l.input_shape;
    j["intercept"] = clean(l.intercept);
    Json hp = Json::object();
    for (const auto& [k, v] : l.hyperparameters) hp[k] = clean(v);
    j["hyperparameters"] = hp;
    if (!l.grouping.empty()) j["grouping"] = l.grouping;
    j["weights"] = number_array(std::span<const double>(l.weights.data(), static_cast<std::size_t>(l.weights.size())));
  }
  return j;
}

TrainedModel model_from_json(const Json& j) {
  try {
    if (field(j, "format") != kModelFormat) throw InputError("not an mmtensor model document");
    const auto method = field(j, "method").get<std::string>();
    const Shape shape = read_shape(field(j, "input_shape"));
    const double intercept = field(j, "intercept").get<double>();
    if (method == "proposed") {
      RegressionModel m;
      m.input_shape = shape;
      m.intercept = intercept;
      for (const auto& c : field(j, "components")) {
        std::vector<std::vector<double>> factors;
        for (const auto& f : field(c, "factors")) factors.push_back(read_numbers(f, "factor"));
        UnitRankTensor t(std::move(factors));
        if (t.shape() != shape) throw InputError("component shape does not match input_shape");
        const double offset = c.contains("offset") ? c.at("offset").get<double>() : 0.0;
        m.components.push_back({std::move(t), field(c, "lambda").get<double>(), offset});
      }
      m.train_rmse_path = read_numbers(field(j, "train_rmse_path"), "train_rmse_path");
      return m;
    }
    LinearModel l;
    l.method = method;
    l.input_shape = shape;
    l.intercept = intercept;
    for (const auto& [k, v] : field(j, "hyperparameters").items()) l.hyperparameters[k] = v.get<double>();
    if (j.contains("grouping")) l.grouping = j.at("grouping").get<std::string>();
    const auto w = read_numbers(field(j, "weights"), "weights");
    if (w.size() != element_count(shape)) throw InputError("weights length does not match input_shape");
    l.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    return l;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model document: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  write_json_file(path, model_to_json(model));
}

TrainedModel load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(read_json_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

void TensorDump::validate() const {
  if (ids.size() != tensors.size()) throw InputError("tensor dump: ids and tensors differ in length");
  for (const auto& t : tensors)
    if (t.shape() != shape)
      throw InputError("tensor dump: subject tensor has shape " + shape_to_string(t.shape()) +
                       ", expected " + shape_to_string(shape));
  for (const auto& [name, v] : responses)
    if (v.size() != ids.size())
      throw InputError("tensor dump: response '" + name + "' has " + std::to_string(v.size()) +
                       " values for " + std::to_string(ids.size()) + " subjects");
}

Dataset TensorDump::dataset(const std::string& response) const {
  const auto it = responses.find(response);
  if (it == responses.end()) {
    std::string known;
    for (const auto& [name, v] : responses) known += (known.empty() ? "" : ", ") + name;
    throw InputError("response '" + response + "' not in tensor dump (available: " + known + ")");
  }
  Dataset ds{ids, tensors, it->second, response};
  ds.validate();
  return ds;
}

Json dump_to_json(const TensorDump& dump) {
  dump.validate();
  Json j;
  j["format"] = kDumpFormat;
  j["version"] = 1;
  j["representation"] = dump.representation;
  j["shape"] = dump.shape;
  Json subjects = Json::array();
  for (std::size_t i = 0; i < dump.ids.size(); ++i)
    subjects.push_back(Json{{"id", dump.ids[i]}, {"values", number_array(dump.tensors[i].values())}});
  j["subjects"] = subjects;
  Json responses = Json::object();
  for (const auto& [name, v] : dump.responses) responses[name] = number_array(v);
  j["responses"] = responses;
  return j;
}

TensorDump dump_from_json(const Json& j) {
  try {
    if (field(j, "format") != kDumpFormat) throw InputError("not an mmtensor tensor dump");
    TensorDump d;
    d.representation = field(j, "representation").get<std::string>();
    d.shape = read_shape(field(j, "shape"));
    for (const auto& s : field(j, "subjects")) {
      d.ids.push_back(field(s, "id").get<std::string>());
      auto values = read_numbers(field(s, "values"), "subject values");
      if (values.size() != element_count(d.shape))
        throw InputError("subject '" + d.ids.back() + "' has " + std::to_string(values.size()) +
                         " values, expected " + std::to_string(element_count(d.shape)));
      d.tensors.emplace_back(d.shape, std::move(values));
    }
    for (const auto& [name, v] : field(j, "responses").items())
      d.responses[name] = read_numbers(v, "response " + name);
    d.validate();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed tensor dump: ") + e.what());
  }
}

void save_dump(const std::filesystem::path& path, const TensorDump& dump) {
  write_json_file(path, dump_to_json(dump));
}

TensorDump load_dump(const std::filesystem::path& path) {
  try {
    return dump_from_json(read_json_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

std::string curve_csv_header(const std::string& value_name) {
  return value_name + ",rmse_mean,rmse_std,sparsity_mean,sparsity_std,fully_connected";
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

Json report_to_json(const EvalReport& report) {
  Json j;
  j["format"] = "mmtensor-report";
  j["version"] = 1;
  Json records = Json::array();
  for (const auto& r : report.records)
    records.push_back(Json{{"trial", r.trial},
                           {"score", r.score},
                           {"representation", r.representation},
                           {"method", r.method},
                           {"rmse", json_number(r.rmse)},
                           {"sparsity", json_number(r.sparsity)},
                           {"cv_rmse", json_number(r.cv_rmse)},
                           {"hyperparameters", r.hyperparameters}});
  j["records"] = records;
  Json aggs = Json::array();
  for (const auto& a : report.aggregates)
    aggs.push_back(Json{{"score", a.score},
                        {"representation", a.representation},
                        {"method", a.method},
                        {"n_trials", a.n_trials},
                        {"rmse_mean", json_number(a.rmse_mean)},
                        {"rmse_std", json_number(a.rmse_std)},
                        {"sparsity_mean", json_number(a.sparsity_mean)},
                        {"sparsity_std", json_number(a.sparsity_std)}});
  j["aggregates"] = aggs;
  Json rois = Json::array();
  for (const auto& r : report.roi_ranking)
    rois.push_back(Json{{"roi", r.roi}, {"frequency", r.frequency}, {"mean_mass", json_number(r.mean_mass)}});
  j["roi_ranking"] = rois;
  Json mods = Json::array();
  for (const auto& m : report.modality_ranking)
    mods.push_back(Json{{"modality", std::string(modality_name(m.modality))}, {"score", json_number(m.score)}});
  j["modality_ranking"] = mods;
  return j;
}

void write_report_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << kReportCsvHeader << '\n';
  for (const auto& r : records)
    out << r.trial << ',' << csv_escape(r.score) << ',' << csv_escape(r.representation) << ','
        << csv_escape(r.method) << ',' << csv_number(r.rmse) << ',' << csv_number(r.sparsity) << ','
        << csv_number(r.cv_rmse) << ',' << csv_escape(r.hyperparameters) << '\n';
}

void write_summary_csv(std::ostream& out, const std::vector<Aggregate>& aggregates) {
  out << kSummaryCsvHeader << '\n';
  for (const auto& a : aggregates)
    out << csv_escape(a.score) << ',' << csv_escape(a.representation) << ',' << csv_escape(a.method)
        << ',' << a.n_trials << ',' << csv_number(a.rmse_mean) << ',' << csv_number(a.rmse_std)
        << ',' << csv_number(a.sparsity_mean) << ',' << csv_number(a.sparsity_std) << '\n';
}

void write_roi_csv(std::ostream& out, const std::vector<RoiRank>& ranks, std::size_t roi_extent) {
  out << kRoiCsvHeader << '\n';
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    const auto& r = ranks[i];
    const std::string label = roi_extent == kRoiCount ? std::string(aal_label(r.roi))
                                                      : "roi" + std::to_string(r.roi + 1);
    out << i + 1 << ',' << r.roi + 1 << ',' << csv_escape(label) << ',' << r.frequency << ','
        << csv_number(r.mean_mass) << '\n';
  }
}

void write_modality_csv(std::ostream& out, const std::vector<ModalityScore>& scores) {
  out << kModalityCsvHeader << '\n';
  for (std::size_t i = 0; i < scores.size(); ++i)
    out << i + 1 << ',' << modality_name(scores[i].modality) << ',' << csv_number(scores[i].score)
        << '\n';
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve,
                     const std::string& value_name) {
  out << curve_csv_header(value_name) << '\n';
  for (const auto& p : curve)
    out << p.value << ',' << csv_number(p.rmse_mean) << ',' << csv_number(p.rmse_std) << ','
        << csv_number(p.sparsity_mean) << ',' << csv_number(p.sparsity_std) << ','
        << (p.fully_connected ? "fully-connected" : "") << '\n';
}

// ---------------------------------------------------------------------------

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

Json read_json_file(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace mmt
