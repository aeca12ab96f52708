#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mmt {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense M-order tensor stored row-major (last index fastest).
///
/// Values are validated once at construction: order >= 1, every extent
/// >= 1, element count matches, all entries finite. After that the object
/// is read-only.
class DenseTensor {
 public:
  DenseTensor(Shape shape, std::vector<double> values);

  static DenseTensor zeros(Shape shape);

  const Shape& shape() const { return shape_; }
  std::size_t order() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  std::size_t extent(std::size_t mode) const { return shape_.at(mode); }
  std::span<const double> values() const { return values_; }

  /// Row-major offset of a multi-index.
  std::size_t offset(std::span<const std::size_t> index) const;
  double at(std::span<const std::size_t> index) const;
  double at(std::initializer_list<std::size_t> index) const;

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

/// One CP rank-1 term w(1) o w(2) o ... o w(M), kept in factored form.
class UnitRankTensor {
 public:
  explicit UnitRankTensor(std::vector<std::vector<double>> factors);

  static UnitRankTensor zeros(const Shape& shape);

  std::size_t order() const { return factors_.size(); }
  Shape shape() const;
  const std::vector<std::vector<double>>& factors() const { return factors_; }
  std::span<const double> factor(std::size_t mode) const { return factors_.at(mode); }

  /// True when some factor is identically zero, i.e. the tensor is zero.
  bool is_zero() const;

  friend bool operator==(const UnitRankTensor&, const UnitRankTensor&) = default;

 private:
  std::vector<std::vector<double>> factors_;
};

/// Outer product of the factors.
DenseTensor materialize(const UnitRankTensor& w);

/// <x, w> by successive mode contractions; w is never materialized.
double inner_product(const DenseTensor& x, const UnitRankTensor& w);

double inner_product_dense(const DenseTensor& x, const DenseTensor& w);

/// ||w||_1 = prod_j ||w(j)||_1.
double l1_norm(const UnitRankTensor& w);
double l1_norm(const DenseTensor& x);

/// z[i] = <x[..., i (mode), ...], outer product of all factors but `mode`>.
/// Satisfies dot(w(mode), z) == inner_product(x, w).
std::vector<double> contract_except(const DenseTensor& x, const UnitRankTensor& w,
                                    std::size_t mode);

/// Same contraction on a raw row-major buffer; used by the solver hot loop.
std::vector<double> contract_except(std::span<const double> values, const Shape& shape,
                                    const std::vector<std::vector<double>>& factors,
                                    std::size_t mode);

DenseTensor add(const DenseTensor& a, const DenseTensor& b);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace mmt
