#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace mmt {

/// AAL-116 region labels in atlas order (index 0 is region 1).
/// Generated at build time from resources/aal116.txt.
std::span<const std::string_view> aal116_labels();

std::string_view aal_label(std::size_t roi);
std::optional<std::size_t> aal_index(std::string_view label);

}  // namespace mmt
