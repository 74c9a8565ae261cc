#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace k4i {

using Bytes = std::vector<std::uint8_t>;

/// Lowercase hex, no separators.
std::string to_hex(std::span<const std::uint8_t> bytes);

/// Accepts upper/lower case and ignores whitespace. Throws a validation Error on
/// odd digit counts or non-hex characters.
Bytes from_hex(std::string_view text);

}  // namespace k4i
