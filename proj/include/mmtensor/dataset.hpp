#pragma once

#include <span>
#include <string>
#include <vector>

#include "mmtensor/tensor.hpp"

namespace mmt {

/// N subjects sharing one tensor shape, each with a scalar response.
struct Dataset {
  std::vector<std::string> ids;
  std::vector<DenseTensor> xs;
  std::vector<double> y;
  /// Which response this is (DSS, ADAS13, MMSE, synthetic, ...).
  std::string score_name;

  std::size_t size() const { return xs.size(); }
  bool empty() const { return xs.empty(); }
  const Shape& shape() const;

  /// Throws InputError unless ids/xs/y agree in length and every tensor
  /// has the same shape.
  void validate() const;

  Dataset subset(std::span<const std::size_t> indices) const;
};

}  // namespace mmt
