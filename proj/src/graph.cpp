#include "mmtensor/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "mmtensor/errors.hpp"

namespace mmt {

namespace {

constexpr std::array<std::string_view, kModalityCount> kModalityNames = {"VBM", "FDG", "AV45"};

std::vector<double> zscored(std::vector<double> column) {
  const double n = static_cast<double>(column.size());
  const double mean = std::accumulate(column.begin(), column.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : column) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  for (double& v : column) v = sd > 0.0 ? (v - mean) / sd : v - mean;
  return column;
}

std::vector<std::vector<double>> roi_points(const SubjectFeatures& s, bool zscore) {
  std::array<std::vector<double>, kModalityCount> cols;
  for (std::size_t m = 0; m < kModalityCount; ++m) {
    cols[m] = s.modality_column(m);
    if (zscore) cols[m] = zscored(std::move(cols[m]));
  }
  std::vector<std::vector<double>> points(kRoiCount, std::vector<double>(kModalityCount));
  for (std::size_t i = 0; i < kRoiCount; ++i)
    for (std::size_t m = 0; m < kModalityCount; ++m) points[i][m] = cols[m][i];
  return points;
}

}  // namespace

std::string_view modality_name(std::size_t modality) { return kModalityNames.at(modality); }

std::size_t modality_index(std::string_view name) {
  for (std::size_t m = 0; m < kModalityCount; ++m)
    if (kModalityNames[m] == name) return m;
  throw InputError("unknown modality '" + std::string(name) + "'");
}

SubjectFeatures::SubjectFeatures(std::vector<double> row_major) : values_(std::move(row_major)) {
  if (values_.size() != kRoiCount * kModalityCount)
    throw InputError("subject features need 116x3 values, got " + std::to_string(values_.size()));
  for (double v : values_)
    if (!std::isfinite(v)) throw InputError("subject features must be finite");
}

SubjectFeatures SubjectFeatures::zeros() {
  return SubjectFeatures(std::vector<double>(kRoiCount * kModalityCount, 0.0));
}

std::vector<double> SubjectFeatures::modality_column(std::size_t modality) const {
  if (modality >= kModalityCount) throw InputError("modality index out of range");
  std::vector<double> col(kRoiCount);
  for (std::size_t i = 0; i < kRoiCount; ++i) col[i] = (*this)(i, modality);
  return col;
}

void GraphConfig::validate() const {
  if (k < 1 || k > kRoiCount)
    throw InputError("k must be in [1, 116], got " + std::to_string(k));
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError("sigma must be positive");
}

DenseTensor build_concat(const SubjectFeatures& s) {
  return DenseTensor({kRoiCount, kModalityCount}, {s.values().begin(), s.values().end()});
}

double gaussian_similarity(std::span<const double> a, std::span<const double> b, double sigma) {
  if (a.size() != b.size()) throw InputError("gaussian_similarity: length mismatch");
  if (!(sigma > 0.0)) throw InputError("gaussian_similarity: sigma must be positive");
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
  return std::exp(-d2 / (sigma * sigma));
}

DenseTensor knn_gaussian_graph(const std::vector<std::vector<double>>& points, std::size_t k,
                               double sigma) {
  const std::size_t n = points.size();
  if (n == 0) throw InputError("knn graph needs at least one point");
  if (k < 1) throw InputError("knn graph needs k >= 1");
  const std::size_t keep = std::min(k, n - 1);

  std::vector<double> sim(n * n);
  std::vector<double> dist2(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < points[i].size(); ++c) {
        const double diff = points[i][c] - points[j].at(c);
        d2 += diff * diff;
      }
      dist2[i * n + j] = d2;
      sim[i * n + j] = std::exp(-d2 / (sigma * sigma));
    }

  std::vector<double> adj(n * n, 0.0);
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) cand.push_back(j);
    const auto closer = [&](std::size_t a, std::size_t b) {
      const double da = dist2[i * n + a], db = dist2[i * n + b];
      return da < db || (da == db && a < b);
    };
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(),
                      closer);
    for (std::size_t t = 0; t < keep; ++t) adj[i * n + cand[t]] = sim[i * n + cand[t]];
  }

  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = i == j ? 1.0 : std::max(adj[i * n + j], adj[j * n + i]);
  return DenseTensor({n, n}, std::move(out));
}

DenseTensor build_connectivity(const SubjectFeatures& s, const GraphConfig& cfg) {
  cfg.validate();
  return knn_gaussian_graph(roi_points(s, cfg.zscore), cfg.k, cfg.sigma);
}

DenseTensor build_connectivity_stack(const SubjectFeatures& s, const GraphConfig& cfg) {
  cfg.validate();
  std::vector<double> out(kRoiCount * kRoiCount * kModalityCount);
  for (std::size_t m = 0; m < kModalityCount; ++m) {
    auto col = s.modality_column(m);
    if (cfg.zscore) col = zscored(std::move(col));
    std::vector<std::vector<double>> points;
    points.reserve(kRoiCount);
    for (double v : col) points.push_back({v});
    const auto slice = knn_gaussian_graph(points, cfg.k, cfg.sigma);
    for (std::size_t ij = 0; ij < kRoiCount * kRoiCount; ++ij)
      out[ij * kModalityCount + m] = slice.values()[ij];
  }
  return DenseTensor({kRoiCount, kRoiCount, kModalityCount}, std::move(out));
}

std::string Representation::label() const {
  switch (kind) {
    case RepresentationKind::Concat:
      return "concat";
    case RepresentationKind::Connectivity:
      return "connectivity:" + std::to_string(graph.k);
    case RepresentationKind::Stack:
      return "stack:" + std::to_string(graph.k);
  }
  return {};
}

Representation Representation::parse(std::string_view text, double sigma) {
  Representation rep;
  rep.graph.sigma = sigma;
  const auto colon = text.find(':');
  const auto name = text.substr(0, colon);
  if (name == "concat" && colon == std::string_view::npos) {
    rep.kind = RepresentationKind::Concat;
    return rep;
  }
  if (name == "connectivity")
    rep.kind = RepresentationKind::Connectivity;
  else if (name == "stack")
    rep.kind = RepresentationKind::Stack;
  else
    throw InputError("unknown representation '" + std::string(text) +
                     "' (expected concat, connectivity[:k] or stack[:k])");
  if (colon != std::string_view::npos) {
    const auto digits = text.substr(colon + 1);
    std::size_t k = 0;
    const auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec != std::errc() || p != digits.data() + digits.size())
      throw InputError("bad neighbor count in representation '" + std::string(text) + "'");
    rep.graph.k = k;
  }
  rep.graph.validate();
  return rep;
}

DenseTensor build_representation(const SubjectFeatures& s, const Representation& rep) {
  switch (rep.kind) {
    case RepresentationKind::Concat:
      return build_concat(s);
    case RepresentationKind::Connectivity:
      return build_connectivity(s, rep.graph);
    case RepresentationKind::Stack:
      return build_connectivity_stack(s, rep.graph);
  }
  throw InputError("unknown representation kind");
}

}  // namespace mmt
