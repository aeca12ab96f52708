#include "mmtensor/dataset.hpp"

#include "mmtensor/errors.hpp"

namespace mmt {

const Shape& Dataset::shape() const {
  if (xs.empty()) throw InputError("dataset is empty");
  return xs.front().shape();
}

void Dataset::validate() const {
  if (xs.empty()) throw InputError("dataset is empty");
  if (y.size() != xs.size() || ids.size() != xs.size())
    throw InputError("dataset has " + std::to_string(xs.size()) + " tensors, " +
                     std::to_string(y.size()) + " responses and " + std::to_string(ids.size()) +
                     " ids");
  const auto& s = xs.front().shape();
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i].shape() != s)
      throw InputError("subject " + ids[i] + " has shape " + shape_to_string(xs[i].shape()) +
                       ", expected " + shape_to_string(s));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.score_name = score_name;
  out.ids.reserve(indices.size());
  out.xs.reserve(indices.size());
  out.y.reserve(indices.size());
  for (auto i : indices) {
    out.ids.push_back(ids.at(i));
    out.xs.push_back(xs.at(i));
    out.y.push_back(y.at(i));
  }
  return out;
}

}  // namespace mmt
