#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mgsim/train.hpp"
#include "mgsim/transport.hpp"
#include "mgsim/types.hpp"

namespace mgsim::dms {

enum class EventKind { Shed, Reconnect, AttackDetected, AttackCleared, MitigationApplied, Blackout };

std::string_view to_string(EventKind k) noexcept;

struct DmsEvent {
    std::uint64_t t_ms = 0;
    EventKind kind = EventKind::Shed;
    std::string detail;
};

/// Source of the breaker estimate that mitigation substitutes for the reported status.
class BreakerEstimator {
public:
    virtual ~BreakerEstimator() = default;

    /// Frames the estimator needs before it can answer.
    virtual std::size_t required_window() const = 0;
    /// `window` holds the most recent raw measurement vectors, oldest first.
    virtual BreakerStatus estimate(const std::vector<ChannelVector>& window, const TelemetryFrame& latest) = 0;
};

class GruEstimator final : public BreakerEstimator {
public:
    GruEstimator(train::GruModel model, std::size_t seq_len);

    std::size_t required_window() const override { return seq_len_; }
    BreakerStatus estimate(const std::vector<ChannelVector>& window, const TelemetryFrame& latest) override;

private:
    train::GruModel model_;
    std::size_t seq_len_;
};

enum class SocSource { InBand, Integrated };

struct DmsConfig {
    double soc_threshold_pct = 50.0;
    double ctrl_load_w = 800.0;
    unsigned debounce_frames = 3;
    bool detector_enabled = false;
    SocSource soc_source = SocSource::InBand;
    // Only used by SocSource::Integrated.
    double initial_soc_pct = 35.0;
    double bess_capacity_wh = 50'000.0;
    double scale_factor = 100.0;
};

struct DmsState {
    std::deque<ChannelVector> last_frames;
    BreakerStatus believed_breaker = BreakerStatus::GridConnected;
    bool ctrl_load_commanded = true;
    double soc_estimate_pct = 0.0;
    bool detector_enabled = false;
    unsigned mismatch_streak = 0;
    unsigned agreement_streak = 0;
    bool attack_active = false;
    bool blackout_logged = false;
    std::vector<DmsEvent> event_log;
};

/// Dead-reckons SoC from reported BESS power when it is not carried in-band.
class SocIntegrator {
public:
    SocIntegrator(double initial_soc_pct, double capacity_wh, double scale_factor)
        : soc_(initial_soc_pct), capacity_wh_(capacity_wh), scale_(scale_factor) {}

    double update(std::uint64_t t_ms, double p_bess_w);
    double soc() const noexcept { return soc_; }

private:
    double soc_;
    double capacity_wh_;
    double scale_;
    std::optional<std::uint64_t> last_t_ms_;
    double last_p_bess_w_ = 0.0;
};

/// In-band value of the newest frame when present, otherwise `integrator`.
double soc_from_telemetry(const std::vector<TelemetryFrame>& frames, SocIntegrator* integrator = nullptr);

/// Shed/reconnect rule. Returns the command implied by the effective breaker
/// status and SoC, or nothing when the commanded load state already matches.
/// The returned command has seq 0.
std::optional<LoadCommand> dms_decide(const DmsState& state, BreakerStatus breaker_effective, double soc_pct,
                                      const DmsConfig& cfg);

struct Detection {
    BreakerStatus effective = BreakerStatus::GridConnected;
    std::optional<BreakerStatus> estimate;
    bool attack_flag = false;
};

/// Pushes the frame into the window and reconciles estimate and report.
/// While the estimator disagrees with the report its estimate is used; the
/// attack is declared after `debounce_frames` consecutive disagreements and
/// cleared after as many consecutive agreements.
Detection detect_and_mitigate(DmsState& state, const TelemetryFrame& frame, BreakerEstimator* estimator,
                              const DmsConfig& cfg);

struct TraceRow {
    std::uint32_t seq = 0;
    std::uint64_t t_ms = 0;
    MeasurementVector meas;
    BreakerStatus reported = BreakerStatus::GridConnected;
    std::optional<BreakerStatus> estimate;
    BreakerStatus effective = BreakerStatus::GridConnected;
    bool attack_flag = false;
    double soc_pct = 0.0;
    std::optional<LoadCommand> command;
};

/// Control-center state machine for one plant connection.
class ControlCenter {
public:
    /// `estimator` may be null when the detector is disabled.
    ControlCenter(DmsConfig cfg, std::unique_ptr<BreakerEstimator> estimator, bool initial_ctrl_load_commanded);

    /// One telemetry frame through detection, SoC and the decision rule.
    TraceRow process(const TelemetryFrame& frame);
    void note_decode_error(std::string_view what);

    const DmsState& state() const noexcept { return state_; }
    const std::vector<TraceRow>& trace() const noexcept { return trace_; }
    std::vector<DmsEvent> events_snapshot() const;
    std::vector<LoadCommand> commands() const;
    std::size_t decode_errors() const noexcept { return decode_errors_; }
    /// Rejected frames by decode error name.
    std::map<std::string, std::size_t> decode_error_counts() const;

private:
    void log(std::uint64_t t_ms, EventKind kind, std::string detail);

    DmsConfig cfg_;
    std::unique_ptr<BreakerEstimator> estimator_;
    std::optional<SocIntegrator> integrator_;
    DmsState state_;
    std::vector<TraceRow> trace_;
    std::uint32_t next_command_seq_ = 1;
    std::size_t decode_errors_ = 0;
    std::map<std::string, std::size_t> decode_error_counts_;
    std::uint64_t last_t_ms_ = 0;
    mutable std::mutex events_mu_;
};

struct ServeOptions {
    // Reply to every telemetry frame (command or ack) so the plant can run in lockstep.
    bool ack_every_frame = true;
};

struct ServeSummary {
    std::size_t frames = 0;
    std::size_t decode_errors = 0;
    std::size_t commands = 0;
};

/// Control-center loop: decode, detect/mitigate, decide, reply. Returns at end of stream.
ServeSummary serve(transport::ByteStream& telemetry_in, transport::ByteStream& command_out, ControlCenter& dms,
                   const ServeOptions& opts = {});

void write_events_csv(const std::vector<DmsEvent>& events, const std::filesystem::path& path);
void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path);

}  // namespace mgsim::dms
