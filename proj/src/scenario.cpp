#include "mgsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <random>
#include <thread>

#include <json.hpp>

#include "mgsim/model_io.hpp"

namespace mgsim::scenario {

void ScenarioConfig::validate() const {
    plant.validate();
    initial.validate();
    attack.validate();
    if (!(duration_s > 0.0)) throw ConfigError("duration_s must be positive");
    if (seq_len == 0) throw ConfigError("seq_len must be >= 1");
    if (debounce_frames == 0) throw ConfigError("debounce_frames must be >= 1");
    for (std::size_t i = 1; i < breaker_events.size(); ++i) {
        if (breaker_events[i].t_ms < breaker_events[i - 1].t_ms) throw ConfigError("breaker_events must be time-ordered");
    }
}

std::size_t ScenarioConfig::frame_count() const {
    return static_cast<std::size_t>(std::llround(duration_s / plant.telemetry_period_s));
}

ScenarioConfig preset_scenario_a() {
    ScenarioConfig c;
    c.name = "scenario_a";
    c.initial.soc_pct = 35.74;
    c.initial.insolation = 500.0;
    c.initial.breaker = BreakerStatus::GridConnected;
    c.initial.ctrl_load_connected = true;
    c.initial.bess_setpoint_w = 100.0;
    c.attack = {attack::AttackMode::ForceValue, BreakerStatus::Islanded, 10'000, 60'000};
    c.duration_s = 60.0;
    c.seed = 7;
    c.model_path = "models/gru_standard.json";
    c.output_dir = "out/scenario_a";
    return c;
}

ScenarioConfig preset_scenario_b() {
    ScenarioConfig c;
    c.name = "scenario_b";
    c.initial.soc_pct = 38.81;
    c.initial.insolation = 500.0;
    c.initial.breaker = BreakerStatus::Islanded;
    // Islanded below 50 % SoC: the control center has already shed the load.
    c.initial.ctrl_load_connected = false;
    c.initial.bess_setpoint_w = 100.0;
    c.attack = {attack::AttackMode::ForceValue, BreakerStatus::GridConnected, 10'000, 60'000};
    c.duration_s = 60.0;
    c.seed = 7;
    c.model_path = "models/gru_standard.json";
    c.output_dir = "out/scenario_b";
    return c;
}

std::optional<ScenarioConfig> preset(std::string_view name) {
    if (name == "scenario_a") return preset_scenario_a();
    if (name == "scenario_b") return preset_scenario_b();
    return std::nullopt;
}

void TruthLog::record(std::uint32_t seq, BreakerStatus status) {
    std::lock_guard lock(mu_);
    truth_[seq] = status;
}

std::optional<BreakerStatus> TruthLog::lookup(std::uint32_t seq) const {
    std::lock_guard lock(mu_);
    const auto it = truth_.find(seq);
    if (it == truth_.end()) return std::nullopt;
    return it->second;
}

BreakerStatus TruthOracleEstimator::estimate(const std::vector<ChannelVector>&, const TelemetryFrame& latest) {
    const auto truth = truth_->lookup(latest.seq);
    if (!truth) throw RuntimeFailure("oracle has no truth for seq " + std::to_string(latest.seq));
    return *truth;
}

std::size_t ScenarioReport::count(dms::EventKind kind) const {
    const auto it = event_counts.find(std::string(dms::to_string(kind)));
    return it == event_counts.end() ? 0 : it->second;
}

std::string ScenarioReport::to_json() const {
    using nlohmann::json;
    json cmds = json::array();
    for (const auto& c : commands) {
        cmds.push_back({{"seq", c.seq}, {"ctrl_load_connect", c.ctrl_load_connect}, {"setpoint_w", c.setpoint_w}});
    }
    json evs = json::array();
    for (const auto& e : events) evs.push_back({{"t_ms", e.t_ms}, {"kind", dms::to_string(e.kind)}, {"detail", e.detail}});
    json outs = json::array();
    for (const auto& p : outputs) outs.push_back(p.string());
    json j = {
        {"scenario", name},
        {"mitigation_enabled", mitigation_enabled},
        {"frames", frames},
        {"decode_errors", decode_errors},
        {"falsified_frames", falsified_frames},
        {"final_load_w", final_load_w},
        {"final_injected_w", final_injected_w},
        {"final_cable_loss_w", final_cable_loss_w},
        {"min_load_w", min_load_w},
        {"max_load_w", max_load_w},
        {"commands", cmds},
        {"event_counts", event_counts},
        {"events", evs},
        {"attack_onset_seq", attack_onset_seq ? json(*attack_onset_seq) : json(nullptr)},
        {"detection_latency_frames", detection_latency_frames ? json(*detection_latency_frames) : json(nullptr)},
        {"soc_initial_pct", soc_initial_pct},
        {"soc_final_pct", soc_final_pct},
        {"soc_drain_pct_per_min", soc_drain_pct_per_min},
        {"max_power_balance_residual_w", max_power_balance_residual_w},
        {"blackout", blackout},
        {"outputs", outs},
    };
    return j.dump(2);
}

namespace {

struct Links {
    std::unique_ptr<transport::ByteStream> plant_tel, proxy_up, proxy_down, dms_tel, dms_cmd, plant_cmd;
};

Links connect_memory() {
    Links l;
    std::tie(l.plant_tel, l.proxy_up) = transport::memory_pair();
    std::tie(l.proxy_down, l.dms_tel) = transport::memory_pair();
    std::tie(l.dms_cmd, l.plant_cmd) = transport::memory_pair();
    return l;
}

Links connect_tcp() {
    Links l;
    transport::TcpListener proxy_listener, dms_listener, plant_listener;
    l.plant_tel = transport::tcp_connect(proxy_listener.port());
    l.proxy_up = proxy_listener.accept();
    l.proxy_down = transport::tcp_connect(dms_listener.port());
    l.dms_tel = dms_listener.accept();
    l.dms_cmd = transport::tcp_connect(plant_listener.port());
    l.plant_cmd = plant_listener.accept();
    return l;
}

// Runs fn on a thread, capturing any exception; `on_error` unblocks peers.
class Worker {
public:
    template <class Fn, class OnError>
    Worker(Fn fn, OnError on_error)
        : thread_([this, fn = std::move(fn), on_error = std::move(on_error)]() mutable {
              try {
                  fn();
              } catch (...) {
                  error_ = std::current_exception();
                  on_error();
              }
          }) {}

    void join_and_rethrow() {
        if (thread_.joinable()) thread_.join();
        if (error_) std::rethrow_exception(error_);
    }
    ~Worker() {
        if (thread_.joinable()) thread_.join();
    }

private:
    std::exception_ptr error_;
    std::thread thread_;
};

struct PlantRun {
    std::vector<PlantTraceRow> trace;
    plant::PlantState final_state;
    bool blackout = false;
};

PlantRun drive_plant(const ScenarioConfig& cfg, transport::ByteStream& tel_out, transport::ByteStream& cmd_in,
                     TruthLog& truth) {
    PlantRun run;
    plant::PlantState state = cfg.initial;
    std::mt19937_64 rng(cfg.seed);
    transport::FrameReader replies(cmd_in);
    const int steps = cfg.plant.steps_per_frame();
    std::size_t next_event = 0;

    for (std::size_t i = 0; i < cfg.frame_count(); ++i) {
        const auto t_ms = static_cast<std::uint64_t>(std::llround(state.t_s * 1000.0));
        while (next_event < cfg.breaker_events.size() && cfg.breaker_events[next_event].t_ms <= t_ms) {
            state.breaker = cfg.breaker_events[next_event++].status;
        }

        TelemetryFrame frame = plant::sample_telemetry(state, cfg.plant, cfg.noise, rng);
        frame.seq = static_cast<std::uint32_t>(i + 1);
        truth.record(frame.seq, state.breaker);
        run.trace.push_back({frame.seq, frame.t_ms, state.breaker, state.ctrl_load_connected, state.blackout,
                             state.soc_pct, plant::power_flow(state, cfg.plant)});
        tel_out.write_all(wire::encode_telemetry(frame));

        const auto reply = replies.next();
        if (!reply) throw RuntimeFailure("control center closed the command link");
        if (wire::peek_type(*reply) == wire::MsgType::Command) {
            const auto decoded = wire::decode_command(*reply);
            if (const auto* cmd = std::get_if<LoadCommand>(&decoded)) state.ctrl_load_connected = cmd->ctrl_load_connect;
        }

        for (int s = 0; s < steps; ++s) {
            const plant::StepResult r = plant::step(state, cfg.plant);
            state = r.state;
            run.blackout = run.blackout || r.blackout_onset;
        }
    }
    tel_out.close_write();
    while (replies.next()) {
    }
    run.final_state = state;
    return run;
}

std::unique_ptr<dms::BreakerEstimator> make_estimator(const ScenarioConfig& cfg, const RunOptions& opts,
                                                      const std::shared_ptr<TruthLog>& truth) {
    if (!cfg.mitigation_enabled) return nullptr;
    if (opts.estimator_factory) return opts.estimator_factory(truth);
    if (cfg.model_path.empty() || !std::filesystem::exists(cfg.model_path)) {
        throw ConfigError("mitigation enabled but model file '" + cfg.model_path.string() + "' does not exist");
    }
    return std::make_unique<dms::GruEstimator>(model_io::load_params(cfg.model_path), cfg.seq_len);
}

}  // namespace

ScenarioReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    auto truth = std::make_shared<TruthLog>();
    auto estimator = make_estimator(cfg, opts, truth);

    dms::DmsConfig dcfg;
    dcfg.ctrl_load_w = cfg.plant.ctrl_load_w;
    dcfg.debounce_frames = cfg.debounce_frames;
    dcfg.detector_enabled = cfg.mitigation_enabled;
    dcfg.soc_source = cfg.soc_source;
    dcfg.initial_soc_pct = cfg.initial.soc_pct;
    dcfg.bess_capacity_wh = cfg.plant.bess_capacity_wh;
    dcfg.scale_factor = cfg.plant.scale_factor;
    dms::ControlCenter center(dcfg, std::move(estimator), cfg.initial.ctrl_load_connected);

    Links links;
    try {
        links = cfg.transport == TransportKind::Tcp ? connect_tcp() : connect_memory();
    } catch (const Error& e) {
        throw RuntimeFailure(std::string("transport setup failed: ") + e.what());
    }

    attack::ProxyStats proxy_stats;
    dms::ServeSummary serve_summary;
    PlantRun plant_run;
    {
        Worker proxy(
            [&] { proxy_stats = attack::run_proxy(*links.proxy_up, *links.proxy_down, cfg.attack); },
            [&] { links.proxy_down->close_write(); });
        Worker control(
            [&] { serve_summary = dms::serve(*links.dms_tel, *links.dms_cmd, center); },
            [&] { links.dms_cmd->close_write(); });
        std::exception_ptr plant_error;
        try {
            plant_run = drive_plant(cfg, *links.plant_tel, *links.plant_cmd, *truth);
        } catch (...) {
            plant_error = std::current_exception();
            links.plant_tel->close_write();
        }
        proxy.join_and_rethrow();
        control.join_and_rethrow();
        if (plant_error) std::rethrow_exception(plant_error);
    }

    ScenarioReport rep;
    rep.name = cfg.name;
    rep.mitigation_enabled = cfg.mitigation_enabled;
    rep.frames = serve_summary.frames;
    rep.decode_errors = serve_summary.decode_errors;
    rep.falsified_frames = proxy_stats.falsified;
    rep.commands = center.commands();
    rep.events = center.events_snapshot();
    for (const auto& e : rep.events) ++rep.event_counts[std::string(dms::to_string(e.kind))];
    rep.plant_trace = std::move(plant_run.trace);
    rep.dms_trace = center.trace();
    rep.blackout = plant_run.blackout;

    const plant::LoadPower final_load = plant::load_power(plant_run.final_state, cfg.plant);
    rep.final_load_w = final_load.p_device_w;
    rep.final_injected_w = final_load.p_injected_w;
    rep.final_cable_loss_w = final_load.loss_w;
    rep.min_load_w = final_load.p_device_w;
    rep.max_load_w = final_load.p_device_w;
    for (const auto& row : rep.plant_trace) {
        rep.min_load_w = std::min(rep.min_load_w, row.flow.load.p_device_w);
        rep.max_load_w = std::max(rep.max_load_w, row.flow.load.p_device_w);
        const auto& m = row.flow.meas;
        rep.max_power_balance_residual_w =
            std::max(rep.max_power_balance_residual_w, std::abs(m.p_grid_w + m.p_pv_w + m.p_bess_w - m.p_load_w));
    }
    rep.soc_initial_pct = cfg.initial.soc_pct;
    rep.soc_final_pct = plant_run.final_state.soc_pct;
    rep.soc_drain_pct_per_min = (rep.soc_initial_pct - rep.soc_final_pct) / cfg.duration_s * 60.0;

    if (cfg.attack.mode != attack::AttackMode::None) {
        for (const auto& row : rep.plant_trace) {
            if (cfg.attack.active_at(row.t_ms)) {
                rep.attack_onset_seq = row.seq;
                break;
            }
        }
    }
    if (rep.attack_onset_seq) {
        const auto onset_t = rep.plant_trace[*rep.attack_onset_seq - 1].t_ms;
        for (const auto& e : rep.events) {
            if (e.kind == dms::EventKind::AttackDetected && e.t_ms >= onset_t) {
                const auto period_ms = static_cast<std::uint64_t>(std::llround(cfg.plant.telemetry_period_s * 1000.0));
                rep.detection_latency_frames = static_cast<std::size_t>((e.t_ms - onset_t) / period_ms) + 1;
                break;
            }
        }
    }

    if (opts.write_outputs && !cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        const auto trace_path = cfg.output_dir / "trace.csv";
        const auto plant_path = cfg.output_dir / "plant_trace.csv";
        const auto events_path = cfg.output_dir / "events.csv";
        const auto report_path = cfg.output_dir / "report.json";
        dms::write_trace_csv(rep.dms_trace, trace_path);
        write_plant_trace_csv(rep.plant_trace, plant_path);
        dms::write_events_csv(rep.events, events_path);
        rep.outputs = {report_path, trace_path, plant_path, events_path};
        std::ofstream(report_path) << rep.to_json() << '\n';
    }
    return rep;
}

void write_plant_trace_csv(const std::vector<PlantTraceRow>& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw RuntimeFailure("cannot write " + path.string());
    out << "seq,t_ms,breaker,ctrl_load_connected,blackout,soc_pct,p_device_w,cable_loss_w,p_bess_w,p_pv_w,p_grid_w,"
           "p_load_w,v_load_v\n";
    char buf[320];
    for (const auto& r : trace) {
        const auto& m = r.flow.meas;
        std::snprintf(buf, sizeof buf, "%u,%llu,%d,%d,%d,%.9f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.seq,
                      static_cast<unsigned long long>(r.t_ms), to_label(r.breaker), r.ctrl_load_connected ? 1 : 0,
                      r.blackout ? 1 : 0, r.soc_pct, r.flow.load.p_device_w, r.flow.load.loss_w, m.p_bess_w, m.p_pv_w,
                      m.p_grid_w, m.p_load_w, m.v_load_v);
        out << buf;
    }
}

}  // namespace mgsim::scenario
