#include "leapctl/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "leap/analysis.hpp"
#include "leap/attacks.hpp"
#include "leap/errors.hpp"
#include "leap/key_mgmt.hpp"
#include "leap/rekey.hpp"
#include "leap/scenario.hpp"

namespace leapctl {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct Globals {
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::string config;
    std::string out;
    std::string format = "json";
};

/// Parameters bench/analyze/rekey-demo take from --config.
struct ToolConfig {
    leap::sim::BusConfig bus{};
    leap::KeyUpdateTiming timing{};
};

json read_config(const Globals& g) {
    if (g.config.empty()) return json::object();
    auto j = leap::load_json_file(g.config);
    if (!j.is_object()) throw leap::ConfigError(g.config, "expected a JSON object");
    return j;
}

ToolConfig tool_config(const Globals& g) {
    const auto j = read_config(g);
    ToolConfig c;
    for (const auto& [key, value] : j.items())
        if (key != "bus" && key != "key_update" && key != "description")
            throw leap::ConfigError(key, "unknown field (expected bus, key_update)");
    if (j.contains("bus")) c.bus = leap::parse_bus(j.at("bus"), "bus");
    if (j.contains("key_update")) {
        const auto& k = j.at("key_update");
        if (!k.is_object()) throw leap::ConfigError("key_update", "expected an object");
        for (const auto& [key, value] : k.items())
            if (key != "secure_processing_ms" && key != "general_processing_ms" && key != "frame_interval_ms")
                throw leap::ConfigError("key_update." + key, "unknown field");
        c.timing = leap::parse_key_update_timing(k, "key_update");
    }
    c.timing.bit_rate = c.bus.bit_rate;
    c.timing.frame_timing = c.bus.timing;
    return c;
}

json load_scenario(const std::string& path, const Globals& g) {
    auto j = leap::load_json_file(path);
    if (!g.config.empty()) j = leap::merge_config(std::move(j), read_config(g));
    if (g.seed_given) j["seed"] = g.seed;
    return j;
}

std::string fmt(double v, int precision = 6) {
    std::ostringstream s;
    s << std::setprecision(precision) << v;
    return s.str();
}

std::string fmt_ld(long double v) {
    std::ostringstream s;
    s << std::setprecision(4) << static_cast<double>(v);
    return s.str();
}

class Output {
public:
    Output(const Globals& g, std::ostream& fallback) {
        if (!g.out.empty()) {
            file_.open(g.out);
            if (!file_) throw leap::ConfigError("--out", "cannot write " + g.out);
        }
        stream_ = g.out.empty() ? &fallback : &file_;
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

std::vector<leap::CanId> parse_id_list(const std::string& text, const std::string& field) {
    std::vector<leap::CanId> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(item, &used, 16);
        } catch (const std::exception&) {
            used = 0;
        }
        if (item.empty() || used != item.size() || v > leap::CanId::kMax)
            throw leap::ConfigError(field, "bad identifier '" + item + "'");
        out.emplace_back(static_cast<std::uint16_t>(v));
    }
    if (out.empty()) throw leap::ConfigError(field, "empty list");
    return out;
}

int cmd_keygen(const Globals& g, const std::string& ecus_text, const std::string& pairs_text, std::ostream& out) {
    const auto ecus = parse_id_list(ecus_text, "--ecus");
    std::vector<leap::EcuPair> pairs;
    if (pairs_text.empty()) {
        for (std::size_t i = 0; i < ecus.size(); ++i)
            for (std::size_t j = i + 1; j < ecus.size(); ++j) pairs.push_back(leap::EcuPair::of(ecus[i], ecus[j]));
    } else {
        std::stringstream in(pairs_text);
        std::string item;
        while (std::getline(in, item, ',')) {
            const auto dash = item.find('-');
            if (dash == std::string::npos) throw leap::ConfigError("--pairs", "expected LOW-HIGH, got '" + item + "'");
            const auto a = parse_id_list(item.substr(0, dash), "--pairs");
            const auto b = parse_id_list(item.substr(dash + 1), "--pairs");
            if (a[0] == b[0]) throw leap::ConfigError("--pairs", "pair with itself: '" + item + "'");
            pairs.push_back(leap::EcuPair::of(a[0], b[0]));
        }
    }
    for (const auto id : ecus)
        if (id.value() < leap::kFirstDataId) throw leap::ConfigError("--ecus", "ids 000-00F are reserved");
    const auto store = leap::KeyStore::generate(ecus, pairs, g.seed);
    if (g.format == "csv") {
        out << "id,long_term_key\n";
        for (const auto& [id, key] : store.long_term_keys()) out << leap::format_id(id) << ',' << key.to_hex() << '\n';
    } else {
        leap::write_keystore(out, store);
    }
    return 0;
}

int cmd_simulate(const Globals& g, const std::string& path, std::ostream& out) {
    const auto scenario = leap::parse_sim_scenario(load_scenario(path, g));
    const auto result = leap::run_scenario(scenario);
    const auto metrics = leap::sim_metrics_json(scenario, result);
    if (g.format == "csv") {
        for (const auto& [key, value] : metrics.items())
            if (!value.is_object()) out << "# " << key << '=' << value.dump() << '\n';
        leap::sim::write_event_log(out, result.log);
    } else {
        ordered_json j;
        j["metrics"] = metrics;
        auto& updates = j["key_updates"];
        updates = ordered_json::array();
        for (const auto& u : result.updates) {
            updates.push_back({{"pair", leap::format_id(u.pair.low) + "-" + leap::format_id(u.pair.high)},
                               {"start_ms", leap::to_ms(u.start)},
                               {"end_ms", leap::to_ms(u.end)},
                               {"activated", u.outcome == leap::ResponseOutcome::activated},
                               {"attempts", u.attempts}});
        }
        auto& events = j["events"];
        events = ordered_json::array();
        for (const auto& r : result.log) events.push_back(leap::sim::format_log_record(r));
        out << j.dump(2) << '\n';
    }
    return 0;
}

int cmd_attack(const Globals& g, const std::string& path, std::ostream& out) {
    const auto scenario = leap::parse_attack_scenario(load_scenario(path, g));
    const auto report = leap::attack::run_attack(scenario);
    if (g.format == "csv") {
        out << leap::attack::csv_header() << '\n' << leap::attack::csv_row(report) << '\n';
    } else {
        out << leap::attack::report_json(report) << '\n';
    }
    return 0;
}

int cmd_bench(const Globals& g, std::uint64_t messages, std::ostream& out) {
    if (messages == 0) throw leap::ConfigError("--messages", "must be > 0");
    const auto r = leap::analysis::bench_protocols(messages, g.seed);
    if (g.format == "csv") {
        out << "protocol,overhead_bits,frames_per_message,ns_per_message_wallclock,working_set_bytes,state_bytes\n";
        for (const auto* p : {&r.leap, &r.ameap})
            out << p->protocol << ',' << p->overhead_bits << ',' << p->frames_per_message << ','
                << fmt(p->ns_per_message) << ',' << p->working_set_bytes << ',' << p->state_bytes << '\n';
    } else {
        ordered_json j;
        j["messages"] = r.messages;
        for (const auto* p : {&r.leap, &r.ameap}) {
            j[p->protocol] = {{"overhead_bits", p->overhead_bits},
                              {"frames_per_message", p->frames_per_message},
                              {"ns_per_message_wallclock", p->ns_per_message},
                              {"working_set_bytes", p->working_set_bytes},
                              {"state_bytes", p->state_bytes}};
        }
        j["ameap_over_leap_time_ratio"] = r.ratio;
        j["reference_ratio"] = leap::analysis::BenchReport::kReferenceRatio;
        out << j.dump(2) << '\n';
    }
    return 0;
}

int cmd_brute_force(const Globals& g, const std::vector<unsigned>& bits, const std::vector<std::string>& times,
                    bool measure, std::uint64_t trials, std::ostream& out) {
    struct Row {
        std::string label;
        double seconds;
    };
    std::vector<Row> rows;
    for (const auto& t : times) rows.push_back({t, leap::analysis::parse_duration_seconds(t)});
    std::optional<leap::analysis::KeySearchTiming> measured;
    if (measure) {
        if (trials == 0) throw leap::ConfigError("--trials", "must be > 0");
        measured = leap::analysis::measure_key_search_time(trials, g.seed);
        rows.push_back({"host_serial", measured->seconds_per_key_serial});
        rows.push_back({"host_parallel", measured->seconds_per_key_parallel});
    }
    if (g.format == "csv") {
        out << "key_bits,time_per_key,seconds_per_key,hours\n";
        for (const auto b : bits)
            for (const auto& r : rows)
                out << b << ',' << r.label << ',' << fmt(r.seconds) << ','
                    << fmt_ld(leap::analysis::brute_force_hours(b, r.seconds)) << '\n';
    } else {
        ordered_json j;
        auto& table = j["rows"];
        table = ordered_json::array();
        for (const auto b : bits)
            for (const auto& r : rows)
                table.push_back({{"key_bits", b},
                                 {"time_per_key", r.label},
                                 {"seconds_per_key", r.seconds},
                                 {"hours", static_cast<double>(leap::analysis::brute_force_hours(b, r.seconds))}});
        if (measured) {
            j["host"] = {{"trials", measured->trials},
                         {"threads", measured->threads},
                         {"seconds_per_key_serial_wallclock", measured->seconds_per_key_serial},
                         {"seconds_per_key_parallel_wallclock", measured->seconds_per_key_parallel}};
        }
        out << j.dump(2) << '\n';
    }
    return 0;
}

int cmd_eavesdrop(const Globals& g, double rate, double hours, std::ostream& out) {
    const auto r = leap::analysis::eavesdrop_feasibility(rate, hours);
    if (g.format == "csv") {
        out << "rate_hz,hours,messages,threshold,feasible,hours_to_threshold\n"
            << fmt(rate) << ',' << fmt(hours) << ',' << r.messages << ',' << r.threshold << ','
            << (r.feasible ? "true" : "false") << ',' << fmt(r.hours_to_threshold) << '\n';
    } else {
        ordered_json j = {{"rate_hz", rate},
                          {"hours", hours},
                          {"messages", r.messages},
                          {"threshold", r.threshold},
                          {"feasible", r.feasible},
                          {"hours_to_threshold", r.hours_to_threshold}};
        out << j.dump(2) << '\n';
    }
    return 0;
}

int cmd_flooding(const Globals& g, std::uint64_t samples, std::ostream& out) {
    if (samples == 0) throw leap::ConfigError("--samples", "must be > 0");
    const auto cfg = tool_config(g);
    const double leap_rate = leap::attack::measure_decrypt_throughput(leap::sim::Protocol::leap, samples, g.seed);
    const double ameap_rate = leap::attack::measure_decrypt_throughput(leap::sim::Protocol::ameap, samples, g.seed);
    const auto m = leap::analysis::flooding_margin(cfg.bus, leap_rate);
    if (g.format == "csv") {
        out << "injection_rate_hz,leap_decrypt_hz_wallclock,ameap_decrypt_hz_wallclock,margin,sustained\n"
            << fmt(m.injection_rate_hz) << ',' << fmt(leap_rate) << ',' << fmt(ameap_rate) << ',' << fmt(m.margin)
            << ',' << (m.sustained ? "true" : "false") << '\n';
    } else {
        ordered_json j = {{"bit_rate", cfg.bus.bit_rate},
                          {"frame_bits_dlc8", leap::frame_bits(8, cfg.bus.timing)},
                          {"injection_rate_hz", m.injection_rate_hz},
                          {"leap_decrypt_hz_wallclock", leap_rate},
                          {"ameap_decrypt_hz_wallclock", ameap_rate},
                          {"margin", m.margin},
                          {"sustained", m.sustained},
                          {"reference_decrypt_hz", leap::analysis::FloodingMargin::kReferenceDecryptRate},
                          {"reference_injection_hz", leap::analysis::FloodingMargin::kReferenceInjectionRate}};
        out << j.dump(2) << '\n';
    }
    return 0;
}

int cmd_rekey_demo(const Globals& g, std::ostream& out) {
    const auto cfg = tool_config(g);
    const auto r = leap::run_rekey_demo(cfg.timing, g.seed);
    const double closed = leap::update_cycle_time_closed_form_ms(cfg.timing);
    const bool ok = r.outcome == leap::ResponseOutcome::activated;
    if (g.format == "csv") {
        out << "# cycle_time_ms=" << fmt(r.cycle_time_ms, 9) << '\n'
            << "# closed_form_ms=" << fmt(closed, 9) << '\n'
            << "# activated=" << (ok ? "true" : "false") << '\n'
            << "# request_bits=" << r.request_payload_bits << " frames=" << r.frames_per_request << '\n';
        leap::sim::write_event_log(out, r.log);
    } else {
        ordered_json j;
        j["pair"] = leap::format_id(r.pair.low) + "-" + leap::format_id(r.pair.high);
        j["activated"] = ok;
        j["cycle_time_ms"] = r.cycle_time_ms;
        j["closed_form_ms"] = closed;
        j["request_payload_bits"] = r.request_payload_bits;
        j["frames_per_request"] = r.frames_per_request;
        j["epoch"] = r.epoch;
        j["endpoints_agree"] = r.endpoints_agree;
        j["round_trip_ok"] = r.round_trip_ok;
        auto& events = j["events"];
        events = ordered_json::array();
        for (const auto& rec : r.log) events.push_back(leap::sim::format_log_record(rec));
        out << j.dump(2) << '\n';
    }
    return ok ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"LEAP CAN security toolkit: key generation, bus simulation, attacks and analysis", "leapctl"};
    // Global options may follow the subcommand.
    app.fallthrough();
    app.require_subcommand(1);
    Globals g;
    auto* seed_opt = app.add_option("--seed", g.seed, "RNG seed; every output is a function of it")->capture_default_str();
    app.add_option("--config", g.config, "JSON configuration file");
    app.add_option("--out", g.out, "Write output to this file instead of stdout");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    std::string ecus = "010,020,030";
    std::string pairs;
    auto* keygen = app.add_subcommand("keygen", "Emit a key store with random long-term keys");
    keygen->add_option("--ecus", ecus, "Comma-separated hex ECU ids")->capture_default_str();
    keygen->add_option("--pairs", pairs, "Comma-separated LOW-HIGH pairs (default: every pair)");

    std::string scenario_path;
    auto* simulate = app.add_subcommand("simulate", "Run a bus scenario and emit its event log and metrics");
    simulate->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    auto* attack = app.add_subcommand("attack", "Run an attack scenario against a protected pair");
    attack->add_option("scenario", scenario_path, "Attack scenario JSON file")->required();

    std::uint64_t messages = 10'000;
    auto* bench = app.add_subcommand("bench", "Per-message LEAP vs AMEAP cost on this host");
    bench->add_option("--messages", messages, "Messages per protocol")->capture_default_str();

    auto* analyze = app.add_subcommand("analyze", "Closed-form security analyses");
    analyze->require_subcommand(1);
    std::vector<unsigned> bits = {40, 64, 128};
    std::vector<std::string> times = {"30us", "0.1us"};
    bool measure = false;
    std::uint64_t trials = 200'000;
    auto* brute = analyze->add_subcommand("brute-force", "Expected exhaustive key-search time");
    brute->add_option("--bits", bits, "Key sizes in bits")->delimiter(',')->capture_default_str();
    brute->add_option("--time", times, "Time per key, e.g. 30us, 0.1us")->delimiter(',')->capture_default_str();
    brute->add_flag("--measure", measure, "Add rows with this host's measured RC4 key-trial time");
    brute->add_option("--trials", trials, "Key trials to time with --measure")->capture_default_str();
    double rate = 200.0;
    double hours = 24.0;
    auto* eaves = analyze->add_subcommand("eavesdrop", "Ciphertexts observable vs the RC4 recovery threshold");
    eaves->add_option("--rate", rate, "Messages per second")->capture_default_str();
    eaves->add_option("--hours", hours, "Capture duration in hours")->capture_default_str();
    std::uint64_t samples = 50'000;
    auto* flood = analyze->add_subcommand("flooding", "Decrypt throughput vs maximum flood rate");
    flood->add_option("--samples", samples, "Frames to decrypt when timing")->capture_default_str();

    auto* rekey = app.add_subcommand("rekey-demo", "Trace one complete session-key update");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }
    g.seed_given = seed_opt->count() > 0;

    try {
        // Reject a bad --config up front even for commands that read nothing from it.
        if (!*simulate && !*attack) tool_config(g);
        Output sink(g, out);
        if (*keygen) return cmd_keygen(g, ecus, pairs, *sink);
        if (*simulate) return cmd_simulate(g, scenario_path, *sink);
        if (*attack) return cmd_attack(g, scenario_path, *sink);
        if (*bench) return cmd_bench(g, messages, *sink);
        if (*brute) return cmd_brute_force(g, bits, times, measure, trials, *sink);
        if (*eaves) return cmd_eavesdrop(g, rate, hours, *sink);
        if (*flood) return cmd_flooding(g, samples, *sink);
        if (*rekey) return cmd_rekey_demo(g, *sink);
    } catch (const leap::ConfigError& e) {
        const std::string what = e.what();
        const auto prefix = e.field() + ": ";
        err << "leapctl: configuration error in '" << e.field()
            << "': " << (what.starts_with(prefix) ? what.substr(prefix.size()) : what) << '\n';
        return 2;
    } catch (const leap::Error& e) {
        err << "leapctl: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace leapctl
