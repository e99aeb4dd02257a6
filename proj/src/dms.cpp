#include "mgsim/dms.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mgsim::dms {

std::string_view to_string(EventKind k) noexcept {
    switch (k) {
        case EventKind::Shed: return "Shed";
        case EventKind::Reconnect: return "Reconnect";
        case EventKind::AttackDetected: return "AttackDetected";
        case EventKind::AttackCleared: return "AttackCleared";
        case EventKind::MitigationApplied: return "MitigationApplied";
        case EventKind::Blackout: return "Blackout";
    }
    return "Unknown";
}

GruEstimator::GruEstimator(train::GruModel model, std::size_t seq_len) : model_(std::move(model)), seq_len_(seq_len) {
    try {
        model_.params.check_dims();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("detector model: ") + e.what());
    }
    if (model_.params.input_size != kChannelCount) throw ConfigError("detector model: expects 5 input channels");
    if (seq_len_ == 0) throw ConfigError("detector model: seq_len must be >= 1");
    for (double s : model_.norm.stddev) {
        if (!(s > 0.0)) throw ConfigError("detector model: invalid normalization statistics");
    }
}

BreakerStatus GruEstimator::estimate(const std::vector<ChannelVector>& window, const TelemetryFrame&) {
    return model_.classify(window);
}

double SocIntegrator::update(std::uint64_t t_ms, double p_bess_w) {
    if (last_t_ms_ && t_ms > *last_t_ms_) {
        const double dt_s = static_cast<double>(t_ms - *last_t_ms_) / 1000.0;
        const double energy_wh = last_p_bess_w_ * scale_ * dt_s / 3600.0;
        soc_ = std::clamp(soc_ - energy_wh / capacity_wh_ * 100.0, 0.0, 100.0);
    }
    last_t_ms_ = t_ms;
    last_p_bess_w_ = p_bess_w;
    return soc_;
}

double soc_from_telemetry(const std::vector<TelemetryFrame>& frames, SocIntegrator* integrator) {
    if (frames.empty()) throw std::invalid_argument("soc_from_telemetry: no frames");
    if (frames.back().soc_pct) return *frames.back().soc_pct;
    if (!integrator) throw std::invalid_argument("soc_from_telemetry: no in-band SoC and no integrator");
    double soc = integrator->soc();
    for (const auto& f : frames) soc = integrator->update(f.t_ms, f.meas.p_bess_w);
    return soc;
}

std::optional<LoadCommand> dms_decide(const DmsState& state, BreakerStatus breaker_effective, double soc_pct,
                                      const DmsConfig& cfg) {
    const bool islanded = breaker_effective == BreakerStatus::Islanded;
    if (islanded && soc_pct < cfg.soc_threshold_pct && state.ctrl_load_commanded) {
        return LoadCommand{0, false, 0.0};
    }
    if ((!islanded || soc_pct >= cfg.soc_threshold_pct) && !state.ctrl_load_commanded) {
        return LoadCommand{0, true, cfg.ctrl_load_w};
    }
    return std::nullopt;
}

Detection detect_and_mitigate(DmsState& state, const TelemetryFrame& frame, BreakerEstimator* estimator,
                              const DmsConfig& cfg) {
    const std::size_t capacity = estimator ? std::max<std::size_t>(estimator->required_window(), 1) : 1;
    state.last_frames.push_back(frame.meas.as_array());
    while (state.last_frames.size() > capacity) state.last_frames.pop_front();

    Detection d;
    const BreakerStatus reported = frame.breaker_reported;
    d.effective = reported;

    if (state.detector_enabled && estimator && state.last_frames.size() >= estimator->required_window()) {
        const std::vector<ChannelVector> window(state.last_frames.begin(), state.last_frames.end());
        const BreakerStatus est = estimator->estimate(window, frame);
        d.estimate = est;
        d.effective = est;
        if (est == reported) {
            state.mismatch_streak = 0;
            ++state.agreement_streak;
            if (state.attack_active && state.agreement_streak >= cfg.debounce_frames) {
                state.attack_active = false;
                state.event_log.push_back({frame.t_ms, EventKind::AttackCleared,
                                           "estimate and report agree for " +
                                               std::to_string(state.agreement_streak) + " frames"});
            }
        } else {
            state.agreement_streak = 0;
            ++state.mismatch_streak;
            if (!state.attack_active && state.mismatch_streak >= cfg.debounce_frames) {
                state.attack_active = true;
                state.event_log.push_back({frame.t_ms, EventKind::AttackDetected,
                                           "reported " + std::string(to_string(reported)) + ", estimated " +
                                               std::string(to_string(est))});
                state.event_log.push_back({frame.t_ms, EventKind::MitigationApplied,
                                           "using estimated status " + std::string(to_string(est))});
            }
        }
        d.attack_flag = state.attack_active;
    }
    state.believed_breaker = d.effective;
    return d;
}

ControlCenter::ControlCenter(DmsConfig cfg, std::unique_ptr<BreakerEstimator> estimator,
                             bool initial_ctrl_load_commanded)
    : cfg_(cfg), estimator_(std::move(estimator)) {
    if (cfg_.detector_enabled && !estimator_) throw ConfigError("detector enabled without an estimator");
    if (cfg_.debounce_frames == 0) throw ConfigError("debounce_frames must be >= 1");
    state_.detector_enabled = cfg_.detector_enabled;
    state_.ctrl_load_commanded = initial_ctrl_load_commanded;
    state_.soc_estimate_pct = cfg_.initial_soc_pct;
    integrator_.emplace(cfg_.initial_soc_pct, cfg_.bess_capacity_wh, cfg_.scale_factor);
}

void ControlCenter::log(std::uint64_t t_ms, EventKind kind, std::string detail) {
    state_.event_log.push_back({t_ms, kind, std::move(detail)});
}

TraceRow ControlCenter::process(const TelemetryFrame& frame) {
    std::lock_guard lock(events_mu_);
    // Keep the log monotone even if a sender's clock steps backwards.
    TelemetryFrame f = frame;
    f.t_ms = std::max(f.t_ms, last_t_ms_);
    last_t_ms_ = f.t_ms;

    const Detection d = detect_and_mitigate(state_, f, estimator_.get(), cfg_);

    const double integrated = integrator_->update(f.t_ms, f.meas.p_bess_w);
    const double soc = (cfg_.soc_source == SocSource::InBand && f.soc_pct) ? *f.soc_pct : integrated;
    state_.soc_estimate_pct = soc;

    if (soc <= 0.0 && d.effective == BreakerStatus::Islanded && !state_.blackout_logged) {
        state_.blackout_logged = true;
        log(f.t_ms, EventKind::Blackout, "battery exhausted while islanded");
    } else if (d.effective == BreakerStatus::GridConnected) {
        state_.blackout_logged = false;
    }

    TraceRow row;
    row.seq = f.seq;
    row.t_ms = f.t_ms;
    row.meas = f.meas;
    row.reported = f.breaker_reported;
    row.estimate = d.estimate;
    row.effective = d.effective;
    row.attack_flag = d.attack_flag;
    row.soc_pct = soc;

    if (auto cmd = dms_decide(state_, d.effective, soc, cfg_)) {
        cmd->seq = next_command_seq_++;
        state_.ctrl_load_commanded = cmd->ctrl_load_connect;
        char detail[96];
        std::snprintf(detail, sizeof detail, "breaker %s, soc %.2f%%", std::string(to_string(d.effective)).c_str(), soc);
        log(f.t_ms, cmd->ctrl_load_connect ? EventKind::Reconnect : EventKind::Shed, detail);
        row.command = cmd;
    }
    trace_.push_back(row);
    return row;
}

void ControlCenter::note_decode_error(std::string_view what) {
    std::lock_guard lock(events_mu_);
    ++decode_errors_;
    ++decode_error_counts_[std::string(what)];
}

std::map<std::string, std::size_t> ControlCenter::decode_error_counts() const {
    std::lock_guard lock(events_mu_);
    return decode_error_counts_;
}

std::vector<DmsEvent> ControlCenter::events_snapshot() const {
    std::lock_guard lock(events_mu_);
    return state_.event_log;
}

std::vector<LoadCommand> ControlCenter::commands() const {
    std::vector<LoadCommand> out;
    for (const auto& row : trace_) {
        if (row.command) out.push_back(*row.command);
    }
    return out;
}

ServeSummary serve(transport::ByteStream& telemetry_in, transport::ByteStream& command_out, ControlCenter& dms,
                   const ServeOptions& opts) {
    ServeSummary summary;
    transport::FrameReader reader(telemetry_in);
    while (auto raw = reader.next()) {
        const auto decoded = wire::decode_telemetry(*raw);
        if (const auto* err = std::get_if<wire::DecodeError>(&decoded)) {
            dms.note_decode_error(wire::to_string(*err));
            ++summary.decode_errors;
            if (opts.ack_every_frame) command_out.write_all(wire::encode_ack(wire::peek_seq(*raw).value_or(0)));
            continue;
        }
        const auto& frame = std::get<TelemetryFrame>(decoded);
        ++summary.frames;
        const TraceRow row = dms.process(frame);
        if (row.command) {
            command_out.write_all(wire::encode_command(*row.command));
            ++summary.commands;
        } else if (opts.ack_every_frame) {
            command_out.write_all(wire::encode_ack(frame.seq));
        }
    }
    command_out.close_write();
    return summary;
}

void write_events_csv(const std::vector<DmsEvent>& events, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw RuntimeFailure("cannot write " + path.string());
    out << "t_ms,kind,detail\n";
    for (const auto& e : events) out << e.t_ms << ',' << to_string(e.kind) << ",\"" << e.detail << "\"\n";
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw RuntimeFailure("cannot write " + path.string());
    out << "seq,t_ms,p_bess_w,p_pv_w,p_grid_w,p_load_w,v_load_v,reported,estimated,effective,attack_flag,soc_pct,"
           "command\n";
    char buf[256];
    for (const auto& r : trace) {
        std::snprintf(buf, sizeof buf, "%u,%llu,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%s,%d,%d,%.6f,", r.seq,
                      static_cast<unsigned long long>(r.t_ms), r.meas.p_bess_w, r.meas.p_pv_w, r.meas.p_grid_w,
                      r.meas.p_load_w, r.meas.v_load_v, to_label(r.reported),
                      r.estimate ? (to_label(*r.estimate) ? "1" : "0") : "", to_label(r.effective),
                      r.attack_flag ? 1 : 0, r.soc_pct);
        out << buf;
        if (r.command) out << (r.command->ctrl_load_connect ? "reconnect" : "shed");
        out << '\n';
    }
}

}  // namespace mgsim::dms
