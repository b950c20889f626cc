#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace leap {

/// Uppercase hex, two digits per byte, no separators.
std::string to_hex(std::span<const std::uint8_t> bytes);

/// Accepts upper- or lowercase digits; throws leap::Error on odd length or bad digit.
std::vector<std::uint8_t> from_hex(std::string_view text);

}  // namespace leap
