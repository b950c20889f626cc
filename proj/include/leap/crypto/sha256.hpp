#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "leap/crypto/types.hpp"

namespace leap::crypto {

class Sha256 {
public:
    Sha256() noexcept { reset(); }

    void reset() noexcept;
    void update(std::span<const std::uint8_t> data) noexcept;
    Digest256 finish() noexcept;

private:
    void compress(const std::uint8_t* block) noexcept;

    std::array<std::uint32_t, 8> h_{};
    std::array<std::uint8_t, 64> buffer_{};
    std::size_t buffered_ = 0;
    std::uint64_t total_bytes_ = 0;
};

Digest256 sha256(std::span<const std::uint8_t> data) noexcept;

}  // namespace leap::crypto
