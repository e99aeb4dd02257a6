#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "mgsim/scenario.hpp"

using namespace mgsim;
using namespace mgsim::scenario;

namespace {

RunOptions oracle_options() {
    RunOptions o;
    o.write_outputs = false;
    o.estimator_factory = [](std::shared_ptr<const TruthLog> truth) {
        return std::make_unique<TruthOracleEstimator>(std::move(truth));
    };
    return o;
}

ScenarioConfig short_run(ScenarioConfig c) {
    c.duration_s = 5.0;
    c.attack.start_ms = 1000;
    c.attack.end_ms = 5000;
    return c;
}

}  // namespace

TEST_CASE("presets") {
    const auto a = preset_scenario_a();
    CHECK(a.initial.soc_pct == 35.74);
    CHECK(a.initial.insolation == 500.0);
    CHECK(a.attack.forced_value == BreakerStatus::Islanded);
    CHECK(a.frame_count() == 600);
    const auto b = preset_scenario_b();
    CHECK(b.initial.soc_pct == 38.81);
    CHECK(b.initial.breaker == BreakerStatus::Islanded);
    CHECK(b.attack.forced_value == BreakerStatus::GridConnected);
    CHECK_FALSE(preset("scenario_c").has_value());
}

TEST_CASE("scenario A without mitigation sheds once") {
    RunOptions o;
    o.write_outputs = false;
    const auto rep = run_scenario(short_run(preset_scenario_a()), o);
    CHECK(rep.frames == 50);
    CHECK(rep.count(dms::EventKind::Shed) == 1);
    CHECK(rep.final_load_w == doctest::Approx(600.0));
    CHECK(rep.falsified_frames == 40);
    CHECK(rep.max_power_balance_residual_w < 1e-9);
}

TEST_CASE("oracle mitigation keeps scenario A whole") {
    auto c = short_run(preset_scenario_a());
    c.mitigation_enabled = true;
    c.attack.end_ms = 4000;
    const auto rep = run_scenario(c, oracle_options());
    CHECK(rep.count(dms::EventKind::Shed) == 0);
    CHECK(rep.count(dms::EventKind::AttackDetected) == 1);
    CHECK(rep.count(dms::EventKind::AttackCleared) == 1);
    CHECK(rep.min_load_w == 1400.0);
    REQUIRE(rep.detection_latency_frames.has_value());
    CHECK(*rep.detection_latency_frames == 3);
}

TEST_CASE("missing model with mitigation on fails before running") {
    auto c = short_run(preset_scenario_a());
    c.mitigation_enabled = true;
    c.model_path = "/nonexistent/model.json";
    c.output_dir = std::filesystem::temp_directory_path() / "mgsim_missing_model";
    std::filesystem::remove_all(c.output_dir);
    CHECK_THROWS_AS(run_scenario(c), ConfigError);
    CHECK_FALSE(std::filesystem::exists(c.output_dir));
}

TEST_CASE("memory and tcp transports behave identically") {
    for (auto base : {preset_scenario_a(), preset_scenario_b()}) {
        auto c = short_run(base);
        c.mitigation_enabled = true;
        c.noise.sigma = {1.0, 1.0, 1.0, 1.0, 0.01};
        c.breaker_events = {{2500, flipped(c.initial.breaker)}};
        const auto mem = run_scenario(c, oracle_options());
        c.transport = TransportKind::Tcp;
        const auto tcp = run_scenario(c, oracle_options());
        CHECK(mem.commands == tcp.commands);
        REQUIRE(mem.dms_trace.size() == tcp.dms_trace.size());
        for (std::size_t i = 0; i < mem.dms_trace.size(); ++i) {
            CHECK(mem.dms_trace[i].meas == tcp.dms_trace[i].meas);
            CHECK(mem.dms_trace[i].effective == tcp.dms_trace[i].effective);
        }
        CHECK(mem.to_json() == tcp.to_json());
    }
}

TEST_CASE("breaker events change the true mode") {
    auto c = short_run(preset_scenario_a());
    c.attack = {};
    c.breaker_events = {{2000, BreakerStatus::Islanded}};
    RunOptions o;
    o.write_outputs = false;
    const auto rep = run_scenario(c, o);
    CHECK(rep.count(dms::EventKind::Shed) == 1);
    CHECK(rep.plant_trace.back().breaker == BreakerStatus::Islanded);
    CHECK(rep.plant_trace.back().flow.meas.p_grid_w == 0.0);
}

TEST_CASE("outputs are written") {
    auto c = short_run(preset_scenario_b());
    c.output_dir = std::filesystem::temp_directory_path() / "mgsim_outputs";
    std::filesystem::remove_all(c.output_dir);
    const auto rep = run_scenario(c);
    REQUIRE(rep.outputs.size() == 4);
    for (const auto& p : rep.outputs) CHECK(std::filesystem::exists(p));
    std::ifstream in(c.output_dir / "report.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j.at("final_load_w") == 1400.0);
    CHECK(j.at("event_counts").at("Reconnect") == 1);
}

TEST_CASE("scenario yaml") {
    const auto c = parse_scenario_yaml(
        "base: scenario_a\n"
        "duration_s: 12\n"
        "transport: tcp\n"
        "initial: {soc_pct: 40}\n"
        "attack: {mode: flip, start_ms: 100, end_ms: 900}\n"
        "dms: {debounce_frames: 5, soc_source: integrated}\n"
        "noise: {p_grid_w: 0.5}\n"
        "breaker_events:\n"
        "  - {t_ms: 300, status: islanded}\n");
    CHECK(c.name == "scenario_a");
    CHECK(c.initial.insolation == 500.0);
    CHECK(c.initial.soc_pct == 40.0);
    CHECK(c.duration_s == 12.0);
    CHECK(c.transport == TransportKind::Tcp);
    CHECK(c.attack.mode == attack::AttackMode::Flip);
    CHECK(c.debounce_frames == 5);
    CHECK(c.soc_source == dms::SocSource::Integrated);
    CHECK(c.noise.sigma[2] == 0.5);
    REQUIRE(c.breaker_events.size() == 1);
    CHECK(c.breaker_events[0].status == BreakerStatus::Islanded);

    CHECK(to_yaml(parse_scenario_yaml(to_yaml(c))) == to_yaml(c));

    CHECK_THROWS_AS(parse_scenario_yaml("base: scenario_z\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_yaml("durations: 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_yaml("attack: {mode: force_value, start_ms: 5, end_ms: 9}\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_yaml("initial: {soc_pct: 150}\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_yaml("transport: udp\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_yaml("[1, 2]\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_yaml("duration_s: abc\n"), ConfigError);
    CHECK_THROWS_AS(load_scenario_file("/nonexistent.yaml"), ConfigError);
}

TEST_CASE("shipped scenario files match the presets") {
    for (const char* name : {"scenario_a", "scenario_b"}) {
        const auto file = load_scenario_file(std::string(MGSIM_GOLDEN_DIR) + "/../../scenarios/" + name + ".yaml");
        CHECK(to_yaml(file) == to_yaml(*preset(name)));
    }
}
