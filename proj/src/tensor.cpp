#include "mmtensor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "mmtensor/errors.hpp"

namespace mmt {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t j = 0; j < shape.size(); ++j) {
    if (j) out += "x";
    out += std::to_string(shape[j]);
  }
  return out + ")";
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw InputError("tensor order must be at least 1");
  for (auto extent : shape)
    if (extent == 0) throw InputError("tensor extents must be positive, got " + shape_to_string(shape));
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b)
    throw InputError(std::string(what) + ": shape mismatch " + shape_to_string(a) + " vs " +
                     shape_to_string(b));
}

// Contract the trailing mode of a (lead x extent) row-major block.
void contract_last(std::span<const double> in, std::size_t extent, std::span<const double> w,
                   std::vector<double>& out) {
  const std::size_t lead = in.size() / extent;
  out.assign(lead, 0.0);
  for (std::size_t a = 0; a < lead; ++a) {
    const double* row = in.data() + a * extent;
    double s = 0.0;
    for (std::size_t k = 0; k < extent; ++k) s += row[k] * w[k];
    out[a] = s;
  }
}

// Contract the leading mode of an (extent x trail) row-major block.
void contract_first(std::span<const double> in, std::size_t extent, std::span<const double> w,
                    std::vector<double>& out) {
  const std::size_t trail = in.size() / extent;
  out.assign(trail, 0.0);
  for (std::size_t k = 0; k < extent; ++k) {
    const double wk = w[k];
    if (wk == 0.0) continue;
    const double* row = in.data() + k * trail;
    for (std::size_t t = 0; t < trail; ++t) out[t] += wk * row[t];
  }
}

}  // namespace

DenseTensor::DenseTensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  check_shape(shape_);
  if (values_.size() != element_count(shape_))
    throw InputError("tensor of shape " + shape_to_string(shape_) + " needs " +
                     std::to_string(element_count(shape_)) + " values, got " +
                     std::to_string(values_.size()));
  for (double v : values_)
    if (!std::isfinite(v)) throw InputError("tensor values must be finite");
}

DenseTensor DenseTensor::zeros(Shape shape) {
  check_shape(shape);
  const auto n = element_count(shape);
  return DenseTensor(std::move(shape), std::vector<double>(n, 0.0));
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw InputError("index order does not match tensor order");
  std::size_t off = 0;
  for (std::size_t j = 0; j < shape_.size(); ++j) {
    if (index[j] >= shape_[j]) throw InputError("tensor index out of range");
    off = off * shape_[j] + index[j];
  }
  return off;
}

double DenseTensor::at(std::span<const std::size_t> index) const { return values_[offset(index)]; }

double DenseTensor::at(std::initializer_list<std::size_t> index) const {
  return at(std::span<const std::size_t>(index.begin(), index.size()));
}

UnitRankTensor::UnitRankTensor(std::vector<std::vector<double>> factors)
    : factors_(std::move(factors)) {
  if (factors_.empty()) throw InputError("unit-rank tensor needs at least one factor");
  for (const auto& f : factors_) {
    if (f.empty()) throw InputError("unit-rank factor must be non-empty");
    for (double v : f)
      if (!std::isfinite(v)) throw InputError("unit-rank factor entries must be finite");
  }
}

UnitRankTensor UnitRankTensor::zeros(const Shape& shape) {
  check_shape(shape);
  std::vector<std::vector<double>> factors;
  factors.reserve(shape.size());
  for (auto extent : shape) factors.emplace_back(extent, 0.0);
  return UnitRankTensor(std::move(factors));
}

Shape UnitRankTensor::shape() const {
  Shape s;
  s.reserve(factors_.size());
  for (const auto& f : factors_) s.push_back(f.size());
  return s;
}

bool UnitRankTensor::is_zero() const {
  return std::any_of(factors_.begin(), factors_.end(), [](const auto& f) {
    return std::all_of(f.begin(), f.end(), [](double v) { return v == 0.0; });
  });
}

DenseTensor materialize(const UnitRankTensor& w) {
  std::vector<double> out{1.0};
  for (const auto& f : w.factors()) {
    std::vector<double> next(out.size() * f.size());
    for (std::size_t a = 0; a < out.size(); ++a)
      for (std::size_t k = 0; k < f.size(); ++k) next[a * f.size() + k] = out[a] * f[k];
    out = std::move(next);
  }
  return DenseTensor(w.shape(), std::move(out));
}

std::vector<double> contract_except(std::span<const double> values, const Shape& shape,
                                    const std::vector<std::vector<double>>& factors,
                                    std::size_t mode) {
  const std::size_t order = shape.size();
  if (mode >= order) throw InputError("contraction mode out of range");
  if (factors.size() != order) throw InputError("contract_except: order mismatch");
  for (std::size_t j = 0; j < order; ++j)
    if (j != mode && factors[j].size() != shape[j])
      throw InputError("contract_except: factor length does not match mode " + std::to_string(j));

  std::vector<double> a, b;
  std::span<const double> cur = values;
  for (std::size_t m = order; m-- > mode + 1;) {
    contract_last(cur, shape[m], factors[m], a);
    std::swap(a, b);
    cur = b;
  }
  for (std::size_t m = 0; m < mode; ++m) {
    contract_first(cur, shape[m], factors[m], a);
    std::swap(a, b);
    cur = b;
  }
  return {cur.begin(), cur.end()};
}

std::vector<double> contract_except(const DenseTensor& x, const UnitRankTensor& w,
                                    std::size_t mode) {
  require_same_shape(x.shape(), w.shape(), "contract_except");
  return contract_except(x.values(), x.shape(), w.factors(), mode);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inner_product(const DenseTensor& x, const UnitRankTensor& w) {
  require_same_shape(x.shape(), w.shape(), "inner_product");
  const auto z = contract_except(x.values(), x.shape(), w.factors(), 0);
  return dot(w.factor(0), z);
}

double inner_product_dense(const DenseTensor& x, const DenseTensor& w) {
  require_same_shape(x.shape(), w.shape(), "inner_product_dense");
  return dot(x.values(), w.values());
}

double l1_norm(const UnitRankTensor& w) {
  double prod = 1.0;
  for (const auto& f : w.factors()) {
    double s = 0.0;
    for (double v : f) s += std::abs(v);
    prod *= s;
  }
  return prod;
}

double l1_norm(const DenseTensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += std::abs(v);
  return s;
}

DenseTensor add(const DenseTensor& a, const DenseTensor& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return DenseTensor(a.shape(), std::move(out));
}

}  // namespace mmt
