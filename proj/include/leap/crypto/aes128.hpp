#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "leap/crypto/types.hpp"

namespace leap::crypto {

/// AES with a 128-bit key, single-block (ECB) use only.
class Aes128 {
public:
    explicit Aes128(const SymmetricKey128& key);

    Block128 encrypt(const Block128& block) const noexcept;
    Block128 decrypt(const Block128& block) const noexcept;

private:
    std::array<std::uint8_t, 176> round_keys_{};
};

/// Throw leap::Error unless `block` is exactly 16 bytes.
Block128 block_encrypt(const SymmetricKey128& key, std::span<const std::uint8_t> block);
Block128 block_decrypt(const SymmetricKey128& key, std::span<const std::uint8_t> block);

}  // namespace leap::crypto
