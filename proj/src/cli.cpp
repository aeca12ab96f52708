#include "mmtensor/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "mmtensor/data_io.hpp"
#include "mmtensor/errors.hpp"
#include "mmtensor/evaluation.hpp"
#include "mmtensor/format.hpp"
#include "mmtensor/random.hpp"
#include "mmtensor/serialize.hpp"

namespace fs = std::filesystem;

namespace mmt {

namespace {

constexpr const char* kVersion = "1.0.0";

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

/// "1,2,5", "1:10" or "1:10:3" (inclusive).
std::vector<std::size_t> parse_values(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  const auto number = [&](const std::string& s) {
    const auto v = parse_double(s);
    if (!v || *v < 0 || std::floor(*v) != *v) throw UsageError("bad value '" + s + "' in '" + text + "'");
    return static_cast<std::size_t>(*v);
  };
  while (std::getline(ss, item, ',')) {
    std::vector<std::string> parts;
    std::stringstream is(item);
    std::string p;
    while (std::getline(is, p, ':')) parts.push_back(p);
    if (parts.size() == 1) {
      out.push_back(number(parts[0]));
    } else if (parts.size() == 2 || parts.size() == 3) {
      const auto lo = number(parts[0]), hi = number(parts[1]);
      const std::size_t step = parts.size() == 3 ? number(parts[2]) : 1;
      if (step == 0 || lo > hi) throw UsageError("bad range '" + item + "'");
      for (auto v = lo; v <= hi; v += step) out.push_back(v);
    } else {
      throw UsageError("bad value list '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError("empty value list");
  return out;
}

Shape parse_shape(const std::string& text) {
  Shape s;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, 'x')) {
    const auto v = parse_double(item);
    if (!v || *v < 1 || std::floor(*v) != *v) throw UsageError("bad shape '" + text + "'");
    s.push_back(static_cast<std::size_t>(*v));
  }
  if (s.empty()) throw UsageError("bad shape '" + text + "'");
  return s;
}

Representation parse_representation(const std::string& text, double sigma, bool zscore) {
  try {
    auto rep = Representation::parse(text, sigma);
    rep.graph.zscore = zscore;
    return rep;
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
}

NormalizationMode parse_normalization(const std::string& text) {
  return text == "cohort" ? NormalizationMode::CohortMinMax : NormalizationMode::InstrumentRange;
}

bool is_json_path(const std::string& path) { return fs::path(path).extension() == ".json"; }

std::string safe_name(std::string s) {
  for (char& c : s)
    if (c == ':' || c == '/' || c == ' ') c = '-';
  return s;
}

std::string to_text(const auto& write) {
  std::ostringstream ss;
  write(ss);
  return ss.str();
}

struct Global {
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out = "mmtensor-out";
};

/// Collects the run's inputs and outputs and writes manifest.json last.
class Run {
 public:
  Run(std::string command, const std::vector<std::string>& args, const Global& g, CLI::App& app)
      : command_(std::move(command)), args_(args), global_(g), app_(app), started_(utc_now()) {
    std::error_code ec;
    fs::create_directories(g.out, ec);
    if (ec) throw IoError("cannot create output directory " + g.out + ": " + ec.message());
  }

  void input(const std::string& path) { inputs_.push_back(path); }

  fs::path path(const std::string& name) {
    outputs_.push_back(name);
    return fs::path(global_.out) / name;
  }

  void finish(std::ostream& out) {
    Json m;
    m["format"] = "mmtensor-manifest";
    m["tool"] = "mmtensor";
    m["version"] = kVersion;
    m["command"] = command_;
    m["argv"] = args_;
    m["seed"] = global_.seed;
    m["jobs"] = global_.jobs;
    m["config"] = app_.config_to_str(true, false);
    Json inputs = Json::array();
    for (const auto& p : inputs_) inputs.push_back(Json{{"path", p}, {"fnv1a64", file_digest(p)}});
    m["inputs"] = inputs;
    m["outputs"] = outputs_;
    m["started"] = started_;
    m["finished"] = utc_now();
    write_json_file(fs::path(global_.out) / "manifest.json", m);
    out << "wrote " << outputs_.size() << " file(s) and manifest.json to " << global_.out << '\n';
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  Global global_;
  CLI::App& app_;
  std::string started_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
};

// ---------------------------------------------------------------------------

struct ConstructOpts {
  std::string input;
  std::string representation = "concat";
  std::size_t k = 0;
  double sigma = 1.0;
  bool zscore = false;
  bool verify = false;
  std::string normalization = "instrument";
};

bool verify_graph(const DenseTensor& t, std::string& why) {
  const auto& s = t.shape();
  const std::size_t n = s[0];
  const std::size_t slices = s.size() == 3 ? s[2] : 1;
  const auto v = t.values();
  for (std::size_t m = 0; m < slices; ++m)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double a = v[(i * n + j) * slices + m], b = v[(j * n + i) * slices + m];
        if (i == j && a != 1.0) {
          why = "diagonal entry is not 1";
          return false;
        }
        if (a != b) {
          why = "matrix is not symmetric";
          return false;
        }
        if (!(a >= 0.0 && a <= 1.0)) {
          why = "weight outside [0, 1]";
          return false;
        }
      }
  return true;
}

void cmd_construct(const ConstructOpts& o, Run& run, std::ostream& out) {
  auto rep = parse_representation(o.representation, o.sigma, o.zscore);
  if (o.k != 0) {
    if (rep.kind == RepresentationKind::Concat) throw UsageError("--k applies to graph representations only");
    rep.graph.k = o.k;
    try {
      rep.graph.validate();
    } catch (const InputError& e) {
      throw UsageError(e.what());
    }
  }
  run.input(o.input);
  const auto cohort = load_cohort(o.input);
  const auto norm = parse_normalization(o.normalization);

  TensorDump dump;
  dump.representation = rep.label();
  dump.ids = cohort.ids;
  for (const auto& s : cohort.subjects) dump.tensors.push_back(build_representation(s, rep));
  dump.shape = dump.tensors.empty() ? build_representation(SubjectFeatures::zeros(), rep).shape()
                                    : dump.tensors.front().shape();
  for (auto kind : {ScoreKind::DSS, ScoreKind::ADAS13, ScoreKind::MMSE})
    dump.responses[std::string(score_name(kind))] =
        normalize_scores(kind, raw_score_column(cohort, kind), norm);
  const auto path = run.path("tensors.json");
  save_dump(path, dump);

  if (o.verify) {
    if (rep.kind != RepresentationKind::Concat)
      for (std::size_t i = 0; i < dump.tensors.size(); ++i) {
        std::string why;
        if (!verify_graph(dump.tensors[i], why))
          throw NumericalError("verify: subject " + dump.ids[i] + ": " + why);
      }
    const auto back = load_dump(path);
    if (back.ids != dump.ids || back.tensors != dump.tensors || back.responses != dump.responses)
      throw NumericalError("verify: tensor dump does not read back identically");
    out << "verify: " << dump.tensors.size() << " subject tensors of shape "
        << shape_to_string(dump.shape) << " ok\n";
  }
}

// ---------------------------------------------------------------------------

struct FitOpts {
  std::string tensors;
  std::string score;
  std::string method = "proposed";
  std::size_t rank = 10;
  double lambda = 0.1;
  double alpha = 0.5;
  double lambda_group = 1e-3;
  double lambda_l1 = 1e-3;
  std::string grouping = "by-roi";
  double fraction = 1.0;
  bool no_intercept = false;
  bool cv = false;
  std::size_t folds = 5;
};

std::string pick_response(const TensorDump& dump, const std::string& requested) {
  if (!requested.empty()) return requested;
  if (dump.responses.size() == 1) return dump.responses.begin()->first;
  throw UsageError("the tensor dump has several responses; choose one with --score");
}

void cmd_fit(const FitOpts& o, const Global& g, Run& run, std::ostream& out) {
  run.input(o.tensors);
  const auto dump = load_dump(o.tensors);
  const auto ds = dump.dataset(pick_response(dump, o.score));

  FitConfig fit_cfg = protocol_fit_config();
  fit_cfg.fit_intercept = !o.no_intercept;
  MethodGrids grids = MethodGrids::defaults();
  grids.proposed_ranks.clear();
  for (std::size_t r = 1; r <= o.rank; ++r) grids.proposed_ranks.push_back(r);
  const auto method = make_method(o.method, grids, fit_cfg);

  HyperParams hp{.rank = o.rank,
                 .lambda = o.lambda,
                 .alpha = o.alpha,
                 .lambda_group = o.lambda_group,
                 .lambda_l1 = o.lambda_l1,
                 .grouping = parse_group_mode(o.grouping),
                 .fraction = o.fraction};
  Json cv_json = nullptr;
  if (o.cv) {
    ProtocolConfig pc;
    pc.cv_folds = o.folds;
    pc.seed = g.seed;
    const auto grid = method->grid(ds.shape());
    const auto cv = cross_validate(ds, *method, grid, pc, derive_seed(g.seed, 1));
    hp = cv.best;
    cv_json = Json{{"folds", o.folds}, {"grid_points", cv.evaluated.size()},
                   {"best_rmse", std::isfinite(cv.best_rmse) ? Json(cv.best_rmse) : Json(nullptr)}};
  }
  const auto model = method->fit(ds, hp, derive_seed(g.seed, 0));
  save_model(run.path("model.json"), model);

  std::vector<double> pred(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) pred[i] = predict(model, ds.xs[i]);
  Json d;
  d["method"] = o.method;
  d["score"] = ds.score_name;
  d["representation"] = dump.representation;
  d["n_subjects"] = ds.size();
  d["hyperparameters"] = method->describe(hp);
  d["train_rmse"] = rmse(ds.y, pred);
  d["sparsity"] = sparsity(model);
  if (const auto* m = std::get_if<RegressionModel>(&model)) {
    d["components"] = m->components.size();
    d["train_rmse_path"] = m->train_rmse_path;
  }
  d["cross_validation"] = cv_json;
  write_json_file(run.path("diagnostics.json"), d);
  out << o.method << ": train RMSE " << format_double(d["train_rmse"].get<double>()) << ", sparsity "
      << format_double(d["sparsity"].get<double>()) << "%\n";
}

// ---------------------------------------------------------------------------

struct ProtocolOpts {
  std::size_t trials = 5;
  std::size_t folds = 5;
  double test_fraction = 1.0 / 6.0;
  bool same_split = false;
  bool stratify = false;
  double sigma = 1.0;
  bool zscore = false;
  std::string normalization = "instrument";

  ProtocolConfig config(const Global& g) const {
    ProtocolConfig c;
    c.n_trials = trials;
    c.cv_folds = folds;
    c.test_fraction = test_fraction;
    c.resplit_per_trial = !same_split;
    c.stratify = stratify;
    c.seed = g.seed;
    c.jobs = g.jobs;
    return c;
  }
};

void add_protocol_options(CLI::App* sub, ProtocolOpts& p) {
  sub->add_option("--trials", p.trials, "Independent train/test trials")->capture_default_str();
  sub->add_option("--folds", p.folds, "Cross-validation folds")->capture_default_str();
  sub->add_option("--test-fraction", p.test_fraction, "Share of subjects held out for testing")
      ->capture_default_str();
  sub->add_flag("--same-split", p.same_split, "Reuse one train/test split for every trial");
  sub->add_flag("--stratify", p.stratify, "Spread the test set over the sorted responses");
  sub->add_option("--sigma", p.sigma, "Gaussian kernel width for graph representations")
      ->capture_default_str();
  sub->add_flag("--zscore", p.zscore, "z-score modality columns before graph construction");
  sub->add_option("--normalization", p.normalization, "Score normalization")
      ->check(CLI::IsMember({"instrument", "cohort"}))
      ->capture_default_str();
}

/// (label, dataset) pairs for every requested representation and score.
std::vector<std::pair<std::string, Dataset>> load_datasets(const std::string& input,
                                                           const std::vector<std::string>& reps,
                                                           std::vector<std::string> scores,
                                                           const ProtocolOpts& p) {
  std::vector<std::pair<std::string, Dataset>> out;
  if (is_json_path(input)) {
    const auto dump = load_dump(input);
    if (scores.empty())
      for (const auto& [name, v] : dump.responses) scores.push_back(name);
    for (const auto& s : scores) out.emplace_back(dump.representation, dump.dataset(s));
    return out;
  }
  const auto cohort = load_cohort(input);
  if (scores.empty()) scores = {"DSS", "ADAS13", "MMSE"};
  for (const auto& r : reps) {
    const auto rep = parse_representation(r, p.sigma, p.zscore);
    for (const auto& s : scores)
      out.emplace_back(rep.label(), build_dataset(cohort, rep, parse_score(s), parse_normalization(p.normalization)));
  }
  return out;
}

struct BenchmarkOpts {
  std::string input;
  std::vector<std::string> representations{"concat"};
  std::vector<std::string> scores;
  std::vector<std::string> methods;
  std::size_t max_rank = 70;
  std::size_t top_n = 10;
  ProtocolOpts protocol;
};

void cmd_benchmark(const BenchmarkOpts& o, const Global& g, Run& run, std::ostream& out) {
  run.input(o.input);
  const auto cfg = o.protocol.config(g);
  MethodGrids grids = MethodGrids::defaults();
  grids.proposed_ranks.clear();
  for (std::size_t r = 1; r <= o.max_rank; ++r) grids.proposed_ranks.push_back(r);
  const auto names = o.methods.empty() ? method_names() : o.methods;
  std::vector<std::unique_ptr<Method>> owned;
  std::vector<const Method*> methods;
  for (const auto& n : names) {
    owned.push_back(make_method(n, grids));
    methods.push_back(owned.back().get());
  }

  EvalReport report;
  std::size_t models_written = 0;
  for (const auto& [label, ds] : load_datasets(o.input, o.representations, o.scores, o.protocol)) {
    const auto result = run_benchmark(ds, label, methods, cfg, o.top_n);
    report.merge(result.report);
    for (std::size_t i = 0; i < result.models.size(); ++i) {
      const auto& rec = result.report.records[i];
      if (!std::holds_alternative<RegressionModel>(result.models[i])) continue;
      if (models_written == 0) fs::create_directories(fs::path(g.out) / "models");
      save_model(run.path("models/" + safe_name(rec.score + "_" + rec.representation) + "_trial" +
                          std::to_string(rec.trial) + ".json"),
                 result.models[i]);
      ++models_written;
    }
    out << ds.score_name << " / " << label << ": " << result.report.records.size() << " runs\n";
  }

  write_json_file(run.path("report.json"), report_to_json(report));
  write_text_file(run.path("report.csv"), to_text([&](std::ostream& s) { write_report_csv(s, report.records); }));
  write_text_file(run.path("summary.csv"), to_text([&](std::ostream& s) { write_summary_csv(s, report.aggregates); }));
  for (const auto& a : report.aggregates)
    out << "  " << a.score << ' ' << a.representation << ' ' << a.method << ": RMSE "
        << std::fixed << std::setprecision(4) << a.rmse_mean << " +- " << a.rmse_std << ", sparsity "
        << std::setprecision(2) << a.sparsity_mean << "%\n"
        << std::defaultfloat;
}

// ---------------------------------------------------------------------------

struct SweepOpts {
  std::string input;
  std::string sweep;
  std::string values;
  std::string representation = "connectivity";
  std::string score;
  std::size_t rank = 3;
  ProtocolOpts protocol;
};

void cmd_sweep(const SweepOpts& o, const Global& g, Run& run, std::ostream& out) {
  run.input(o.input);
  const auto values = parse_values(o.values);
  const auto cfg = o.protocol.config(g);
  std::vector<CurvePoint> curve;
  if (o.sweep == "k") {
    if (is_json_path(o.input)) throw UsageError("a k sweep needs a cohort CSV input");
    const auto rep = parse_representation(o.representation, o.protocol.sigma, o.protocol.zscore);
    if (rep.kind == RepresentationKind::Concat) throw UsageError("a k sweep needs a graph representation");
    for (auto k : values)
      if (k < 1 || k > kRoiCount) throw UsageError("k values must lie in 1..116");
    const auto cohort = load_cohort(o.input);
    curve = sweep_k(cohort, parse_score(o.score.empty() ? "ADAS13" : o.score), rep.kind, values,
                    o.protocol.sigma, o.rank, cfg, protocol_fit_config(),
                    parse_normalization(o.protocol.normalization));
  } else {
    std::vector<std::string> scores;
    if (!o.score.empty()) scores = {o.score};
    else if (!is_json_path(o.input)) scores = {"ADAS13"};
    const auto sets = load_datasets(o.input, {o.representation}, scores, o.protocol);
    if (sets.size() != 1) throw UsageError("the input has several responses; choose one with --score");
    curve = sweep_rank(sets.front().second, values, cfg);
    for (std::size_t i = 1; i < curve.size(); ++i)
      if (curve[i].value > curve[i - 1].value && curve[i].sparsity_mean > curve[i - 1].sparsity_mean)
        out << "warning: mean sparsity rises from R=" << curve[i - 1].value << " to R=" << curve[i].value << '\n';
  }
  const std::string name = o.sweep == "k" ? "k" : "rank";
  write_text_file(run.path("curve_" + name + ".csv"),
                  to_text([&](std::ostream& s) { write_curve_csv(s, curve, name); }));
  out << curve.size() << " curve points\n";
}

// ---------------------------------------------------------------------------

struct ReportOpts {
  std::string models;
  std::size_t top_n = 10;
};

void cmd_report(const ReportOpts& o, Run& run, std::ostream& out) {
  if (!fs::is_directory(o.models)) throw IoError("not a directory: " + o.models);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(o.models))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<RegressionModel> models;
  for (const auto& f : files) {
    const auto j = read_json_file(f);
    if (!j.is_object() || j.value("format", "") != "mmtensor-model") continue;
    run.input(f.string());
    auto m = model_from_json(j);
    if (auto* r = std::get_if<RegressionModel>(&m)) models.push_back(std::move(*r));
  }
  if (models.empty()) throw InputError("no proposed-method models found in " + o.models);
  for (const auto& m : models)
    if (m.input_shape != models.front().input_shape)
      throw InputError("models in " + o.models + " have different input shapes; rank them separately");

  const auto rois = roi_ranking(models, o.top_n);
  const auto mods = modality_ranking(models);
  const auto extent = models.front().input_shape.front();
  write_text_file(run.path("roi_ranking.csv"), to_text([&](std::ostream& s) { write_roi_csv(s, rois, extent); }));
  write_text_file(run.path("modality_ranking.csv"), to_text([&](std::ostream& s) { write_modality_csv(s, mods); }));
  EvalReport r;
  r.roi_ranking = rois;
  r.modality_ranking = mods;
  auto j = report_to_json(r);
  j["n_models"] = models.size();
  write_json_file(run.path("ranking.json"), j);
  out << models.size() << " models, " << rois.size() << " ranked ROIs\n";
}

// ---------------------------------------------------------------------------

struct SynthOpts {
  std::string kind = "tensor";
  std::size_t n = 200;
  std::string shape = "20x20x3";
  std::size_t rank = 1;
  double density = 0.1;
  double noise = 0.0;
  bool noise_rescaled = false;
  double spread = 0.25;
  double sigma = 1.0;
};

void cmd_synth(const SynthOpts& o, const Global& g, Run& run, std::ostream& out) {
  if (o.kind == "tensor") {
    SynthConfig c;
    c.n_subjects = o.n;
    c.shape = parse_shape(o.shape);
    c.true_rank = o.rank;
    c.support_density = o.density;
    c.noise_std = o.noise;
    c.noise_in_rescaled_units = o.noise_rescaled;
    c.seed = g.seed;
    const auto s = generate_synthetic(c);
    TensorDump d;
    d.representation = "synthetic";
    d.shape = c.shape;
    d.ids = s.dataset.ids;
    d.tensors = s.dataset.xs;
    d.responses["y"] = s.dataset.y;
    save_dump(run.path("tensors.json"), d);
    RegressionModel truth;
    truth.input_shape = c.shape;
    for (const auto& t : s.truth) truth.components.push_back({t, 0.0});
    save_model(run.path("truth.json"), truth);
    out << "synthetic tensors: " << d.ids.size() << " subjects of shape " << shape_to_string(d.shape)
        << ", noise floor " << format_double(s.noise_floor()) << '\n';
  } else {
    CohortSynthConfig c;
    c.n_subjects = o.n;
    c.true_rank = o.rank;
    c.support_density = o.density;
    c.noise_std = o.noise;
    c.feature_spread = o.spread;
    c.sigma = o.sigma;
    c.seed = g.seed;
    const auto s = generate_synthetic_cohort(c);
    write_cohort(run.path("cohort.csv"), s.cohort);
    RegressionModel truth;
    truth.input_shape = {kRoiCount, kRoiCount};
    for (const auto& t : s.truth) truth.components.push_back({t, 0.0});
    save_model(run.path("truth.json"), truth);
    out << "synthetic cohort: " << s.cohort.size() << " subjects\n";
  }
}

}  // namespace

std::string file_digest(const std::string& path) {
  const auto bytes = read_text_file(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse low-rank tensor regression on multi-modality ROI data", "mmtensor"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "Read options from a config file (command-line flags win)");
  app.require_subcommand(1);
  app.fallthrough();

  Global g;
  app.add_option("--seed", g.seed, "Base seed for all randomness")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads for independent trials")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  ConstructOpts co;
  auto* construct = app.add_subcommand("construct", "Build per-subject tensors from a cohort CSV");
  construct->add_option("--input", co.input, "Cohort CSV")->required();
  construct->add_option("--representation", co.representation,
                        "concat, connectivity[:k] or stack[:k]")->capture_default_str();
  construct->add_option("--k", co.k, "Nearest neighbours per ROI (overrides the :k suffix)");
  construct->add_option("--sigma", co.sigma, "Gaussian kernel width")->capture_default_str();
  construct->add_flag("--zscore", co.zscore, "z-score modality columns before graph construction");
  construct->add_option("--normalization", co.normalization, "Score normalization")
      ->check(CLI::IsMember({"instrument", "cohort"}))
      ->capture_default_str();
  construct->add_flag("--verify", co.verify, "Check graph symmetry/diagonal and the written dump");

  FitOpts fo;
  auto* fitc = app.add_subcommand("fit", "Fit one model to a tensor dump");
  fitc->add_option("--tensors", fo.tensors, "Tensor dump JSON")->required();
  fitc->add_option("--score", fo.score, "Response to fit (default: the only one present)");
  fitc->add_option("--method", fo.method, "Regression method")
      ->check(CLI::IsMember(method_names()))
      ->capture_default_str();
  fitc->add_option("--rank", fo.rank, "Maximum rank R (proposed)")->capture_default_str();
  fitc->add_option("--lambda", fo.lambda, "Penalty (lasso, enet)")->capture_default_str();
  fitc->add_option("--alpha", fo.alpha, "l1 share (enet)")->capture_default_str();
  fitc->add_option("--lambda-group", fo.lambda_group, "Group penalty (glasso)")->capture_default_str();
  fitc->add_option("--lambda-l1", fo.lambda_l1, "l1 penalty (glasso)")->capture_default_str();
  fitc->add_option("--grouping", fo.grouping, "Groups (glasso)")
      ->check(CLI::IsMember({"by-roi", "by-modality"}))
      ->capture_default_str();
  fitc->add_option("--fraction", fo.fraction, "Component fraction (pca-lr)")->capture_default_str();
  fitc->add_flag("--no-intercept", fo.no_intercept, "Fit the proposed model without an intercept");
  fitc->add_flag("--cv", fo.cv, "Choose hyperparameters by cross-validation over the default grid");
  fitc->add_option("--folds", fo.folds, "Folds for --cv")->capture_default_str();

  BenchmarkOpts bo;
  auto* bench = app.add_subcommand("benchmark", "Cross-validated comparison of methods");
  bench->add_option("--input", bo.input, "Cohort CSV or tensor dump JSON")->required();
  bench->add_option("--representation", bo.representations, "Representations (CSV input)")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--score", bo.scores, "Scores (default: all)")->delimiter(',');
  bench->add_option("--methods", bo.methods, "Methods (default: all)")
      ->delimiter(',')
      ->check(CLI::IsMember(method_names()));
  bench->add_option("--max-rank", bo.max_rank, "Largest R on the proposed method's grid")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--top-n", bo.top_n, "ROIs in the ranking")->capture_default_str();
  add_protocol_options(bench, bo.protocol);

  SweepOpts so;
  auto* sweep = app.add_subcommand("sweep", "Test RMSE and sparsity against k or R");
  sweep->add_option("--input", so.input, "Cohort CSV (k or rank) or tensor dump JSON (rank)")->required();
  sweep->add_option("--sweep", so.sweep, "Swept hyperparameter")
      ->required()
      ->check(CLI::IsMember({"k", "rank"}));
  sweep->add_option("--values", so.values, "Values: 1,2,5 or 1:10 or 1:116:5")->required();
  sweep->add_option("--representation", so.representation,
                    "connectivity or stack for k sweeps; any representation for rank sweeps on CSV")
      ->capture_default_str();
  sweep->add_option("--score", so.score, "Response");
  sweep->add_option("--rank", so.rank, "Fixed R for k sweeps")->capture_default_str();
  add_protocol_options(sweep, so.protocol);

  ReportOpts ro;
  auto* report = app.add_subcommand("report", "ROI and modality rankings from saved models");
  report->add_option("--models", ro.models, "Directory of model JSON files")->required();
  report->add_option("--top-n", ro.top_n, "ROIs in the ranking")->capture_default_str();

  SynthOpts yo;
  auto* synth = app.add_subcommand("synth", "Generate synthetic data with a planted model");
  synth->add_option("--kind", yo.kind, "tensor (generic shape) or cohort (CSV)")
      ->check(CLI::IsMember({"tensor", "cohort"}))
      ->capture_default_str();
  synth->add_option("--n", yo.n, "Subjects")->capture_default_str();
  synth->add_option("--shape", yo.shape, "Tensor shape (tensor kind)")->capture_default_str();
  synth->add_option("--rank", yo.rank, "Planted rank")->capture_default_str();
  synth->add_option("--density", yo.density, "Nonzero share of each planted factor")->capture_default_str();
  synth->add_option("--noise", yo.noise, "Noise standard deviation")->capture_default_str();
  synth->add_flag("--noise-rescaled", yo.noise_rescaled,
                  "Measure --noise in units of the [0,1]-rescaled response");
  synth->add_option("--spread", yo.spread, "Per-subject feature jitter (cohort kind)")->capture_default_str();
  synth->add_option("--sigma", yo.sigma, "Kernel width of the planted graph (cohort kind)")
      ->capture_default_str();

  std::vector<std::string> argv_store{"mmtensor"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    Run run(sub->get_name(), args, g, app);
    if (sub == construct) cmd_construct(co, run, out);
    else if (sub == fitc) cmd_fit(fo, g, run, out);
    else if (sub == bench) cmd_benchmark(bo, g, run, out);
    else if (sub == sweep) cmd_sweep(so, g, run, out);
    else if (sub == report) cmd_report(ro, run, out);
    else cmd_synth(yo, g, run, out);
    run.finish(out);
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace mmt
