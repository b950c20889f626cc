#pragma once

#include <cstdint>

namespace leap::crypto {

/// Per-thread primitive invocation counts, used to assert the work a protocol
/// does per message.
struct OpCounters {
    std::uint64_t ksa = 0;
    std::uint64_t prga_bytes = 0;
    std::uint64_t block_encrypt = 0;
    std::uint64_t block_decrypt = 0;
    std::uint64_t hash_blocks = 0;
    std::uint64_t keyed_hash = 0;
};

OpCounters& op_counters() noexcept;
void reset_op_counters() noexcept;

}  // namespace leap::crypto
