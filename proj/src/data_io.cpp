#include "mmtensor/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

#include "mmtensor/aal.hpp"
#include "mmtensor/errors.hpp"
#include "mmtensor/format.hpp"
#include "mmtensor/random.hpp"

namespace mmt {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// RFC 4180-style split of one physical line (no embedded newlines).
std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  if (quoted) throw InputError("row " + std::to_string(line_no) + ": unterminated quoted field");
  cells.emplace_back(trim(cell));
  return cells;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void check_score_range(ScoreKind kind, double raw) {
  switch (kind) {
    case ScoreKind::DSS:
      if (!(raw >= 1.0 && raw <= 5.0) || raw != std::floor(raw))
        throw InputError("DSS must be an integer stage in 1..5, got " + format_double(raw));
      return;
    case ScoreKind::ADAS13:
      if (!(raw >= 0.0 && raw <= 85.0))
        throw InputError("ADAS13 must lie in [0, 85], got " + format_double(raw));
      return;
    case ScoreKind::MMSE:
      if (!(raw >= 0.0 && raw <= 30.0))
        throw InputError("MMSE must lie in [0, 30], got " + format_double(raw));
      return;
  }
}

constexpr std::array<ScoreKind, 3> kScoreKinds = {ScoreKind::DSS, ScoreKind::ADAS13,
                                                  ScoreKind::MMSE};

double& score_ref(RawScores& s, ScoreKind kind) {
  switch (kind) {
    case ScoreKind::DSS:
      return s.dss;
    case ScoreKind::ADAS13:
      return s.adas13;
    case ScoreKind::MMSE:
      break;
  }
  return s.mmse;
}

}  // namespace

std::string feature_column_name(std::size_t modality, std::size_t roi) {
  return std::string(modality_name(modality)) + "_" + std::string(aal_label(roi));
}

Cohort parse_cohort(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  // skip a UTF-8 byte order mark and blank leading lines
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw InputError(source + ": empty file, header row required");

  const auto header = split_csv_line(line, line_no);
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!column.emplace(header[c], c).second)
      throw InputError(source + ": duplicate column '" + header[c] + "' in header");
  }
  const auto require = [&](const std::string& name) {
    const auto it = column.find(name);
    if (it == column.end()) throw InputError(source + ": missing column " + name);
    return it->second;
  };

  const std::size_t id_col = require("subject_id");
  std::vector<std::size_t> feature_cols(kRoiCount * kModalityCount);
  for (std::size_t m = 0; m < kModalityCount; ++m)
    for (std::size_t r = 0; r < kRoiCount; ++r)
      feature_cols[r * kModalityCount + m] = require(feature_column_name(m, r));
  std::array<std::size_t, 3> score_cols{};
  for (std::size_t s = 0; s < 3; ++s) score_cols[s] = require(std::string(score_name(kScoreKinds[s])));

  Cohort cohort;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line, line_no);
    const std::string where = source + ": row " + std::to_string(line_no);
    if (cells.size() != header.size())
      throw InputError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(cells.size()));
    const std::string& id = cells[id_col];
    if (id.empty()) throw InputError(where + ": empty subject_id");
    if (const auto [it, fresh] = seen.emplace(id, line_no); !fresh)
      throw InputError(where + ": duplicate subject_id '" + id + "' (first seen on row " +
                       std::to_string(it->second) + ")");

    const auto number = [&](std::size_t col) {
      const auto v = parse_double(cells[col]);
      if (!v || !std::isfinite(*v))
        throw InputError(where + " (subject " + id + "), column " + header[col] + ": '" +
                         cells[col] + "' is not a finite number");
      return *v;
    };
    std::vector<double> features(feature_cols.size());
    for (std::size_t f = 0; f < feature_cols.size(); ++f) features[f] = number(feature_cols[f]);

    RawScores scores;
    for (std::size_t s = 0; s < 3; ++s) {
      const double v = number(score_cols[s]);
      try {
        check_score_range(kScoreKinds[s], v);
      } catch (const InputError& e) {
        throw InputError(where + " (subject " + id + "), column " + header[score_cols[s]] + ": " +
                         e.what());
      }
      score_ref(scores, kScoreKinds[s]) = v;
    }
    cohort.ids.push_back(id);
    cohort.subjects.emplace_back(std::move(features));
    cohort.scores.push_back(scores);
  }
  if (cohort.ids.empty()) throw InputError(source + ": no subject rows");
  return cohort;
}

Cohort load_cohort(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_cohort(in, path.string());
}

void write_cohort(std::ostream& out, const Cohort& cohort) {
  out << "subject_id";
  for (std::size_t m = 0; m < kModalityCount; ++m)
    for (std::size_t r = 0; r < kRoiCount; ++r) out << ',' << feature_column_name(m, r);
  out << ",DSS,ADAS13,MMSE\n";
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    out << quote_if_needed(cohort.ids[i]);
    for (std::size_t m = 0; m < kModalityCount; ++m)
      for (std::size_t r = 0; r < kRoiCount; ++r)
        out << ',' << format_double(cohort.subjects[i](r, m));
    const auto& s = cohort.scores[i];
    out << ',' << format_double(s.dss) << ',' << format_double(s.adas13) << ','
        << format_double(s.mmse) << '\n';
  }
}

void write_cohort(const std::filesystem::path& path, const Cohort& cohort) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_cohort(out, cohort);
  if (!out) throw IoError("failed writing " + path.string());
}

std::string_view score_name(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::DSS:
      return "DSS";
    case ScoreKind::ADAS13:
      return "ADAS13";
    case ScoreKind::MMSE:
      return "MMSE";
  }
  return {};
}

ScoreKind parse_score(std::string_view name) {
  for (auto kind : kScoreKinds)
    if (score_name(kind) == name) return kind;
  throw InputError("unknown score '" + std::string(name) + "' (expected DSS, ADAS13 or MMSE)");
}

double normalize_score(ScoreKind kind, double raw) {
  check_score_range(kind, raw);
  switch (kind) {
    case ScoreKind::DSS:
      return (raw - 1.0) / 4.0;
    case ScoreKind::ADAS13:
      return raw / 85.0;
    case ScoreKind::MMSE:
      return (30.0 - raw) / 30.0;
  }
  return 0.0;
}

std::vector<double> normalize_scores(ScoreKind kind, std::span<const double> raw,
                                     NormalizationMode mode) {
  std::vector<double> out(raw.size());
  if (mode == NormalizationMode::InstrumentRange) {
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = normalize_score(kind, raw[i]);
    return out;
  }
  for (double v : raw) check_score_range(kind, v);
  if (raw.empty()) return out;
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double span = *hi - *lo;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (span == 0.0) {
      out[i] = 0.0;
    } else if (kind == ScoreKind::MMSE) {
      out[i] = (*hi - raw[i]) / span;
    } else {
      out[i] = (raw[i] - *lo) / span;
    }
  }
  return out;
}

std::vector<double> raw_score_column(const Cohort& cohort, ScoreKind kind) {
  std::vector<double> out;
  out.reserve(cohort.size());
  for (auto s : cohort.scores) out.push_back(score_ref(s, kind));
  return out;
}

Dataset build_dataset(const Cohort& cohort, const Representation& rep, ScoreKind score,
                      NormalizationMode mode) {
  Dataset ds;
  ds.score_name = std::string(score_name(score));
  ds.ids = cohort.ids;
  ds.y = normalize_scores(score, raw_score_column(cohort, score), mode);
  ds.xs.reserve(cohort.size());
  for (const auto& s : cohort.subjects) ds.xs.push_back(build_representation(s, rep));
  return ds;
}

void SynthConfig::validate() const {
  if (n_subjects < 1) throw InputError("n_subjects must be positive");
  if (shape.empty()) throw InputError("synthetic shape must have at least one mode");
  for (auto e : shape)
    if (e < 1) throw InputError("synthetic shape extents must be positive");
  if (true_rank < 1) throw InputError("true_rank must be positive");
  if (!(support_density > 0.0 && support_density <= 1.0))
    throw InputError("support_density must lie in (0, 1]");
  if (!(noise_std >= 0.0)) throw InputError("noise_std must be nonnegative");
}

namespace {

std::vector<UnitRankTensor> plant_components(const Shape& shape, std::size_t rank, double density,
                                             Rng& rng) {
  std::normal_distribution<double> normal;
  std::vector<UnitRankTensor> truth;
  for (std::size_t r = 0; r < rank; ++r) {
    std::vector<std::vector<double>> factors;
    for (auto extent : shape) {
      const auto nnz = static_cast<std::size_t>(std::ceil(density * static_cast<double>(extent)));
      if (nnz == 0) throw InputError("support_density yields no nonzero entries");
      auto positions = iota_indices(extent);
      deterministic_shuffle(positions, rng);
      std::vector<double> f(extent, 0.0);
      for (std::size_t t = 0; t < std::min(nnz, extent); ++t) {
        double v = 0.0;
        while (v == 0.0) v = normal(rng);
        f[positions[t]] = v;
      }
      factors.push_back(std::move(f));
    }
    truth.emplace_back(std::move(factors));
  }
  return truth;
}

AffineMap minmax_map(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double span = *hi - *lo;
  if (span == 0.0) return AffineMap{1.0, -*lo};
  return AffineMap{1.0 / span, -*lo / span};
}

}  // namespace

SyntheticData generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::normal_distribution<double> normal;

  SyntheticData out;
  out.truth = plant_components(cfg.shape, cfg.true_rank, cfg.support_density, rng);
  const auto coef = planted_coefficient(out.truth, cfg.shape);
  const std::size_t n_elem = element_count(cfg.shape);

  Dataset& ds = out.dataset;
  ds.score_name = "synthetic";
  for (std::size_t i = 0; i < cfg.n_subjects; ++i) {
    std::vector<double> v(n_elem);
    for (double& e : v) e = normal(rng);
    ds.xs.emplace_back(cfg.shape, std::move(v));
    ds.ids.push_back("syn" + std::to_string(i + 1));
    out.signal.push_back(inner_product_dense(ds.xs.back(), coef));
  }

  out.noise_std_raw = cfg.noise_std;
  if (cfg.noise_in_rescaled_units) out.noise_std_raw = cfg.noise_std / minmax_map(out.signal).scale;

  out.raw_response = out.signal;
  for (double& y : out.raw_response) y += out.noise_std_raw * normal(rng);

  out.rescale = minmax_map(out.raw_response);
  ds.y.reserve(cfg.n_subjects);
  for (double y : out.raw_response) ds.y.push_back(std::clamp(out.rescale.apply(y), 0.0, 1.0));
  return out;
}

DenseTensor planted_coefficient(const std::vector<UnitRankTensor>& truth, const Shape& shape) {
  std::vector<double> sum(element_count(shape), 0.0);
  for (const auto& w : truth) {
    const auto m = materialize(w);
    if (m.shape() != shape) throw InputError("planted component shape mismatch");
    for (std::size_t e = 0; e < sum.size(); ++e) sum[e] += m.values()[e];
  }
  return DenseTensor(shape, std::move(sum));
}

RawScores scores_from_response(double y01) {
  RawScores s;
  s.dss = 1.0 + std::round(4.0 * y01);
  s.adas13 = 85.0 * y01;
  s.mmse = 30.0 - 30.0 * y01;
  return s;
}

SyntheticCohort generate_synthetic_cohort(const CohortSynthConfig& cfg) {
  if (cfg.n_subjects < 1) throw InputError("n_subjects must be positive");
  Rng rng(cfg.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> means(kRoiCount * kModalityCount);
  for (double& m : means) m = unit(rng);

  SyntheticCohort out;
  out.truth = plant_components({kRoiCount, kRoiCount}, cfg.true_rank, cfg.support_density, rng);
  const auto coef = planted_coefficient(out.truth, {kRoiCount, kRoiCount});

  GraphConfig full;
  full.k = kRoiCount;
  full.sigma = cfg.sigma;
  std::vector<double> raw;
  for (std::size_t i = 0; i < cfg.n_subjects; ++i) {
    std::vector<double> v(means.size());
    for (std::size_t e = 0; e < v.size(); ++e) v[e] = means[e] + cfg.feature_spread * normal(rng);
    out.cohort.subjects.emplace_back(std::move(v));
    out.cohort.ids.push_back("sub" + std::to_string(i + 1));
    raw.push_back(
        inner_product_dense(build_connectivity(out.cohort.subjects.back(), full), coef));
  }
  for (double& y : raw) y += cfg.noise_std * normal(rng);
  const auto map = minmax_map(raw);
  for (double y : raw) {
    // round-trip through the ADAS-13 encoding so the CSV reproduces it exactly
    const double y01 = std::clamp(map.apply(y), 0.0, 1.0);
    const auto scores = scores_from_response(y01);
    out.cohort.scores.push_back(scores);
    out.response.push_back(normalize_score(ScoreKind::ADAS13, scores.adas13));
  }
  return out;
}

}  // namespace mmt
