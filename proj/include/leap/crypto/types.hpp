#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace leap::crypto {

using Block128 = std::array<std::uint8_t, 16>;
using Digest256 = std::array<std::uint8_t, 32>;

/// 128-bit symmetric key (long-term or session key).
struct SymmetricKey128 {
    std::array<std::uint8_t, 16> bytes{};

    /// Throws KeyLengthError unless `data` is exactly 16 bytes.
    static SymmetricKey128 from_span(std::span<const std::uint8_t> data);
    static SymmetricKey128 from_hex(std::string_view hex);
    std::string to_hex() const;

    bool operator==(const SymmetricKey128&) const = default;
};

/// Keyed-hash tag truncated to 32 bits.
struct Mac32 {
    std::uint32_t tag = 0;

    bool operator==(const Mac32&) const = default;
};

/// 256 RC4 output bytes k_0..k_255 for one protected message.
using KeyStream = std::array<std::uint8_t, 256>;

}  // namespace leap::crypto
