#include "leap/crypto/op_counters.hpp"

namespace leap::crypto {

namespace {
thread_local OpCounters counters;
}

OpCounters& op_counters() noexcept { return counters; }

void reset_op_counters() noexcept { counters = OpCounters{}; }

}  // namespace leap::crypto
