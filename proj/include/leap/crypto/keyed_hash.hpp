#pragma once

#include <cstdint>
#include <span>

#include "leap/crypto/types.hpp"

namespace leap::crypto {

/// HMAC over SHA-256.
Digest256 hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> data) noexcept;

/// HMAC-SHA-256 truncated to its first four bytes (big-endian).
Mac32 keyed_hash(std::span<const std::uint8_t> key, std::span<const std::uint8_t> data) noexcept;

/// Session-key derivation: first 16 bytes of SHA-256(lk_i || lk_j || seed).
/// Order-sensitive in its two long-term keys.
SymmetricKey128 kdf(const SymmetricKey128& lk_i, const SymmetricKey128& lk_j,
                    const Block128& seed) noexcept;

}  // namespace leap::crypto
