#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "leap/can_frame.hpp"
#include "leap/channel.hpp"

namespace leap {

enum class Direction { tx, rx };

/// One line of a golden trace: `ctr,dir,ID#CM_hex,accept|reject`. Messages
/// spanning several frames list them space-separated; transmit lines end in `sent`.
struct TraceRecord {
    std::uint64_t ctr = 0;
    Direction dir = Direction::tx;
    std::vector<CanFrame> frames;
    std::optional<Verdict> outcome;

    bool operator==(const TraceRecord&) const = default;
};

struct Trace {
    std::string protocol = "LEAP";
    std::vector<TraceRecord> records;
};

std::string format_trace_line(const TraceRecord& record);
TraceRecord parse_trace_line(std::string_view line);

/// First line is `# protocol=<NAME>`.
void write_trace(std::ostream& out, const Trace& trace);
Trace read_trace(std::istream& in);

}  // namespace leap
