#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "leap/attacks.hpp"
#include "leap/bus_sim.hpp"
#include "leap/key_mgmt.hpp"
#include "leap/nodes.hpp"

namespace leap {

struct NodeSpec {
    CanId id;
    std::vector<CanId> peers;
    std::vector<sim::TrafficFlow> traffic;
};

enum class Bootstrap {
    /// Session keys derived from the seed and installed before t = 0.
    preinstalled,
    /// A Secure ECU at id 0x000 distributes keys on the bus first.
    protocol,
};

struct SimScenario {
    std::uint64_t seed = 1;
    SimTime duration{from_ms(1000)};
    sim::Protocol protocol = sim::Protocol::leap;
    sim::BusConfig bus{};
    ChannelConfig channel{};
    sim::DecryptPolicy policy = sim::DecryptPolicy::all_frames;
    Bootstrap bootstrap = Bootstrap::preinstalled;
    sim::SecureEcuNode::Config key_update{};
    std::vector<NodeSpec> nodes;
};

/// Parsers throw ConfigError whose field() is the dotted path of the bad entry
/// (e.g. "nodes[1].traffic[0].period_ms"). Unknown keys are rejected.
SimScenario parse_sim_scenario(const nlohmann::json& j);
attack::AttackScenario parse_attack_scenario(const nlohmann::json& j);
sim::BusConfig parse_bus(const nlohmann::json& j, const std::string& path);
ChannelConfig parse_channel(const nlohmann::json& j, const std::string& path);
KeyUpdateTiming parse_key_update_timing(const nlohmann::json& j, const std::string& path);

/// Reads a JSON document. Throws ConfigError("<file>", ...) on I/O or syntax errors.
nlohmann::json load_json_file(const std::string& path);
/// Top-level keys of `overlay` replace those of `base`; objects merge one level deep.
nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& overlay);

struct SimResult {
    sim::RunMetrics metrics;
    std::vector<sim::LogRecord> log;
    std::vector<sim::UpdateRecord> updates;
    /// Per node: accepted deliveries and KSA range.
    std::map<CanId, std::uint64_t> deliveries;
    std::uint64_t payload_mismatches = 0;
};

SimResult run_scenario(const SimScenario& s);
nlohmann::ordered_json sim_metrics_json(const SimScenario& s, const SimResult& r);

}  // namespace leap
