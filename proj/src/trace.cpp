#include "leap/trace.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include "leap/errors.hpp"

namespace leap {

std::string format_trace_line(const TraceRecord& record) {
    std::string out = std::to_string(record.ctr);
    out += record.dir == Direction::tx ? ",tx," : ",rx,";
    for (std::size_t i = 0; i < record.frames.size(); ++i) {
        if (i > 0) out += ' ';
        out += record.frames[i].to_text();
    }
    out += ',';
    if (!record.outcome) out += "sent";
    else out += *record.outcome == Verdict::accepted ? "accept" : "reject";
    return out;
}

TraceRecord parse_trace_line(std::string_view line) {
    const auto bad = [&](const char* why) { return Error("trace line '" + std::string(line) + "': " + why); };
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t comma; (comma = line.find(',', start)) != std::string_view::npos; start = comma + 1)
        fields.push_back(line.substr(start, comma - start));
    fields.push_back(line.substr(start));
    if (fields.size() != 4) throw bad("expected 4 fields");

    TraceRecord record;
    const auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), record.ctr);
    if (ec != std::errc{} || ptr != fields[0].data() + fields[0].size()) throw bad("bad counter");

    if (fields[1] == "tx") record.dir = Direction::tx;
    else if (fields[1] == "rx") record.dir = Direction::rx;
    else throw bad("direction must be tx or rx");

    std::string_view frames = fields[2];
    while (!frames.empty()) {
        const auto space = frames.find(' ');
        record.frames.push_back(CanFrame::parse(frames.substr(0, space)));
        frames = space == std::string_view::npos ? std::string_view{} : frames.substr(space + 1);
    }
    if (record.frames.empty()) throw bad("no frames");

    if (fields[3] == "accept") record.outcome = Verdict::accepted;
    else if (fields[3] == "reject") record.outcome = Verdict::rejected;
    else if (fields[3] != "sent") throw bad("outcome must be accept, reject or sent");
    return record;
}

void write_trace(std::ostream& out, const Trace& trace) {
    out << "# protocol=" << trace.protocol << '\n';
    for (const auto& r : trace.records) out << format_trace_line(r) << '\n';
}

Trace read_trace(std::istream& in) {
    Trace trace;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.starts_with("# protocol=")) {
            trace.protocol = line.substr(11);
            continue;
        }
        if (line.front() == '#') continue;
        trace.records.push_back(parse_trace_line(line));
    }
    return trace;
}

}  // namespace leap
