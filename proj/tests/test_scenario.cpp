#include <gtest/gtest.h>

#include <filesystem>
#include <functional>

#include "leap/errors.hpp"
#include "leap/scenario.hpp"

using namespace leap;
using nlohmann::json;

namespace {

std::string field_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<no error>";
}

json two_nodes() {
    return json::parse(R"({
        "duration_ms": 200,
        "nodes": [
            {"id": "010", "peers": ["020"], "traffic": [{"peer": "020", "period_ms": 10}]},
            {"id": "020", "peers": ["010"]}
        ]})");
}

std::string scenario(const char* name) { return std::string(LEAP_SCENARIO_DIR) + "/" + name; }

}  // namespace

TEST(Scenario, ParsesDefaults) {
    const auto s = parse_sim_scenario(two_nodes());
    EXPECT_EQ(s.nodes.size(), 2U);
    EXPECT_EQ(s.protocol, sim::Protocol::leap);
    EXPECT_EQ(s.bootstrap, Bootstrap::preinstalled);
    EXPECT_EQ(s.duration, from_ms(200));
    EXPECT_EQ(s.channel.payload_bits, 48U);
}

TEST(Scenario, ErrorsNameTheField) {
    auto j = two_nodes();
    j["nodes"][0]["traffic"][0]["period_ms"] = -1;
    EXPECT_EQ(field_of([&] { parse_sim_scenario(j); }), "nodes[0].traffic[0].period_ms");

    j = two_nodes();
    j["nodes"][1]["colour"] = "red";
    EXPECT_EQ(field_of([&] { parse_sim_scenario(j); }), "nodes[1].colour");

    j = two_nodes();
    j["nodes"][1]["id"] = "005";
    EXPECT_EQ(field_of([&] { parse_sim_scenario(j); }), "nodes[1].id");

    j = two_nodes();
    j["nodes"][1]["peers"] = json::array();
    EXPECT_EQ(field_of([&] { parse_sim_scenario(j); }), "nodes[0].peers[0]");

    j = two_nodes();
    j["bus"] = {{"stuff_factor", 0.5}};
    EXPECT_EQ(field_of([&] { parse_sim_scenario(j); }), "bus.stuff_factor");

    j = two_nodes();
    j["channel"] = {{"payload_bits", 60}};
    EXPECT_EQ(field_of([&] { parse_sim_scenario(j); }), "channel.payload_bits");

    j = two_nodes();
    j["protocol"] = "TLS";
    EXPECT_EQ(field_of([&] { parse_sim_scenario(j); }), "protocol");

    j = two_nodes();
    j["key_update"] = {{"frame_interval_ms", "fast"}};
    EXPECT_EQ(field_of([&] { parse_sim_scenario(j); }), "key_update.frame_interval_ms");

    j = two_nodes();
    j["nodes"][0]["traffic"][0]["payload"] = "FFFFFFFFFFFFFF";
    EXPECT_EQ(field_of([&] { parse_sim_scenario(j); }), "nodes[0].traffic[0].payload");
}

TEST(Scenario, AttackErrorsNameTheField) {
    const auto ok = json::parse(R"({"attack": {"kind": "replay"}})");
    EXPECT_NO_THROW(parse_attack_scenario(ok));
    auto j = ok;
    j["attack"]["intensity_hz"] = 9000;
    EXPECT_EQ(field_of([&] { parse_attack_scenario(j); }), "attack.intensity_hz");
    j = ok;
    j["attack"]["kind"] = "spoof";
    EXPECT_EQ(field_of([&] { parse_attack_scenario(j); }), "attack.kind");
    j = ok;
    j["attack"]["attacker_id"] = "800";
    EXPECT_EQ(field_of([&] { parse_attack_scenario(j); }), "attack.attacker_id");
    EXPECT_EQ(field_of([&] { parse_attack_scenario(json::object()); }), "attack");
}

TEST(Scenario, BundledScenariosParse) {
    for (const auto& entry : std::filesystem::directory_iterator(LEAP_SCENARIO_DIR)) {
        const auto name = entry.path().filename().string();
        const auto j = load_json_file(entry.path().string());
        if (name.starts_with("attack_"))
            EXPECT_NO_THROW(parse_attack_scenario(j)) << name;
        else
            EXPECT_NO_THROW(parse_sim_scenario(j)) << name;
    }
}

TEST(Scenario, BasicRunDeliversEverythingIntact) {
    const auto s = parse_sim_scenario(load_json_file(scenario("simulate_basic.json")));
    const auto r = run_scenario(s);
    EXPECT_EQ(r.payload_mismatches, 0U);
    for (const auto& [id, c] : r.metrics.nodes) EXPECT_EQ(c.rejected, 0U) << format_id(id);
    EXPECT_EQ(r.metrics.frames_enqueued, r.metrics.frames_transmitted + r.metrics.frames_pending_at_end);
}

TEST(Scenario, RekeyOnTheBusKeepsTrafficConsistent) {
    const auto s = parse_sim_scenario(load_json_file(scenario("simulate_rekey.json")));
    const auto r = run_scenario(s);
    ASSERT_GE(r.updates.size(), 2U);
    for (const auto& u : r.updates) EXPECT_EQ(u.outcome, ResponseOutcome::activated);
    EXPECT_EQ(r.payload_mismatches, 0U);
    EXPECT_GT(r.deliveries.at(CanId(0x020)), 0U);
}

TEST(Scenario, SameSeedSameOutcome) {
    const auto s = parse_sim_scenario(load_json_file(scenario("simulate_rekey.json")));
    const auto a = run_scenario(s);
    const auto b = run_scenario(s);
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(sim::format_log_record(a.log[i]), sim::format_log_record(b.log[i]));
}

TEST(Scenario, MergeConfigOverridesOneLevelDeep) {
    const auto base = json::parse(R"({"seed": 1, "bus": {"bit_rate": 500000, "stuff_factor": 1.1}})");
    const auto merged = merge_config(base, json::parse(R"({"bus": {"bit_rate": 250000}, "seed": 9})"));
    EXPECT_EQ(merged["seed"], 9);
    EXPECT_EQ(merged["bus"]["bit_rate"], 250000);
    EXPECT_EQ(merged["bus"]["stuff_factor"], 1.1);
}

TEST(Scenario, MissingFileIsAConfigError) {
    EXPECT_EQ(field_of([] { load_json_file("/nonexistent/x.json"); }), "/nonexistent/x.json");
}
