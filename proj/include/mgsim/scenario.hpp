#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mgsim/attack.hpp"
#include "mgsim/dms.hpp"
#include "mgsim/plant.hpp"
#include "mgsim/train.hpp"

namespace mgsim::scenario {

enum class TransportKind { Memory, Tcp };

/// A true breaker change applied by the driver at t_ms.
struct BreakerEvent {
    std::uint64_t t_ms = 0;
    BreakerStatus status = BreakerStatus::GridConnected;
};

struct ScenarioConfig {
    std::string name = "custom";
    plant::PlantConfig plant;
    plant::PlantState initial;
    std::vector<BreakerEvent> breaker_events;
    attack::AttackSpec attack;
    bool mitigation_enabled = false;
    double duration_s = 60.0;
    std::uint64_t seed = 1;
    plant::NoiseSpec noise;  // telemetry noise; off by default
    std::size_t seq_len = 10;
    unsigned debounce_frames = 3;
    dms::SocSource soc_source = dms::SocSource::InBand;
    std::filesystem::path model_path;
    std::filesystem::path output_dir;
    TransportKind transport = TransportKind::Memory;

    void validate() const;
    std::size_t frame_count() const;
};

/// Grid-connected FDI: the report claims islanded, SoC 35.74 %, insolation 500.
ScenarioConfig preset_scenario_a();
/// Islanded FDI: the report claims grid-connected, SoC 38.81 %, insolation 500.
ScenarioConfig preset_scenario_b();
std::optional<ScenarioConfig> preset(std::string_view name);

/// True breaker status per telemetry seq, written by the plant before a frame
/// is sent and readable from the control-center thread.
class TruthLog {
public:
    void record(std::uint32_t seq, BreakerStatus status);
    std::optional<BreakerStatus> lookup(std::uint32_t seq) const;

private:
    mutable std::mutex mu_;
    std::map<std::uint32_t, BreakerStatus> truth_;
};

/// Perfect detector: answers with the plant's true breaker status.
class TruthOracleEstimator final : public dms::BreakerEstimator {
public:
    explicit TruthOracleEstimator(std::shared_ptr<const TruthLog> truth) : truth_(std::move(truth)) {}

    std::size_t required_window() const override { return 1; }
    BreakerStatus estimate(const std::vector<ChannelVector>& window, const TelemetryFrame& latest) override;

private:
    std::shared_ptr<const TruthLog> truth_;
};

using EstimatorFactory =
    std::function<std::unique_ptr<dms::BreakerEstimator>(std::shared_ptr<const TruthLog> truth)>;

struct RunOptions {
    // Overrides loading ScenarioConfig::model_path when mitigation is enabled.
    EstimatorFactory estimator_factory;
    // Skip writing CSV/JSON outputs.
    bool write_outputs = true;
};

struct PlantTraceRow {
    std::uint32_t seq = 0;
    std::uint64_t t_ms = 0;
    BreakerStatus breaker = BreakerStatus::GridConnected;
    bool ctrl_load_connected = true;
    bool blackout = false;
    double soc_pct = 0.0;
    plant::PowerFlow flow;
};

struct ScenarioReport {
    std::string name;
    bool mitigation_enabled = false;
    std::size_t frames = 0;
    std::size_t decode_errors = 0;
    std::size_t falsified_frames = 0;
    double final_load_w = 0.0;  // device power at the end of the run
    double final_injected_w = 0.0;
    double final_cable_loss_w = 0.0;
    double min_load_w = 0.0;
    double max_load_w = 0.0;
    std::vector<LoadCommand> commands;
    std::map<std::string, std::size_t> event_counts;
    std::vector<dms::DmsEvent> events;
    std::optional<std::uint32_t> attack_onset_seq;
    std::optional<std::size_t> detection_latency_frames;
    double soc_initial_pct = 0.0;
    double soc_final_pct = 0.0;
    double soc_drain_pct_per_min = 0.0;
    double max_power_balance_residual_w = 0.0;
    bool blackout = false;
    std::vector<PlantTraceRow> plant_trace;
    std::vector<dms::TraceRow> dms_trace;
    std::vector<std::filesystem::path> outputs;

    std::size_t count(dms::EventKind kind) const;
    std::string to_json() const;
};

/// Wires plant -> attack proxy -> control center (and commands back to the
/// plant) over the configured transport, runs duration_s of simulated time in
/// lockstep and collects the report. Setup failures throw before any output
/// is written.
ScenarioReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

void write_plant_trace_csv(const std::vector<PlantTraceRow>& trace, const std::filesystem::path& path);

// Scenario files (YAML). See docs/formats.md for the schema.
ScenarioConfig load_scenario_file(const std::filesystem::path& path);
ScenarioConfig parse_scenario_yaml(const std::string& text);
std::string to_yaml(const ScenarioConfig& cfg);

}  // namespace mgsim::scenario
