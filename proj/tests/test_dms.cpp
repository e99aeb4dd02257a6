#include <doctest.h>

#include <thread>

#include "mgsim/dms.hpp"
#include "mgsim/plant.hpp"
#include "mgsim/transport.hpp"
#include "mgsim/wire.hpp"

using namespace mgsim;
using namespace mgsim::dms;

namespace {

// Answers with whatever `answer` currently holds.
class ScriptedEstimator final : public BreakerEstimator {
public:
    ScriptedEstimator(std::size_t window, BreakerStatus* answer) : window_(window), answer_(answer) {}
    std::size_t required_window() const override { return window_; }
    BreakerStatus estimate(const std::vector<ChannelVector>& window, const TelemetryFrame&) override {
        REQUIRE(window.size() == window_);
        return *answer_;
    }

private:
    std::size_t window_;
    BreakerStatus* answer_;
};

TelemetryFrame frame(std::uint32_t seq, BreakerStatus reported, double soc = 35.74) {
    TelemetryFrame f;
    f.seq = seq;
    f.t_ms = 100ull * seq;
    f.meas = {100.0, 1250.0, 60.0, 1410.0, 118.8};
    f.breaker_reported = reported;
    f.soc_pct = soc;
    return f;
}

constexpr auto G = BreakerStatus::GridConnected;
constexpr auto I = BreakerStatus::Islanded;

}  // namespace

TEST_CASE("decision rule table") {
    const DmsConfig cfg;
    DmsState on;
    on.ctrl_load_commanded = true;
    DmsState off;
    off.ctrl_load_commanded = false;

    const auto shed = dms_decide(on, I, 35.74, cfg);
    REQUIRE(shed);
    CHECK_FALSE(shed->ctrl_load_connect);
    CHECK(shed->setpoint_w == 0.0);

    const auto reconnect = dms_decide(off, G, 35.74, cfg);
    REQUIRE(reconnect);
    CHECK(reconnect->ctrl_load_connect);
    CHECK(reconnect->setpoint_w == 800.0);

    CHECK(dms_decide(off, I, 50.0, cfg).has_value());
    CHECK_FALSE(dms_decide(on, I, 50.0, cfg).has_value());
    CHECK(dms_decide(on, I, 49.999, cfg).has_value());
    CHECK_FALSE(dms_decide(off, I, 49.999, cfg).has_value());
    CHECK_FALSE(dms_decide(on, G, 10.0, cfg).has_value());
}

TEST_CASE("detector disabled: reported status passes through") {
    DmsConfig cfg;
    DmsState st;
    BreakerStatus answer = G;
    ScriptedEstimator est(1, &answer);
    const auto d = detect_and_mitigate(st, frame(1, I), &est, cfg);
    CHECK(d.effective == I);
    CHECK_FALSE(d.estimate.has_value());
    CHECK_FALSE(d.attack_flag);
}

TEST_CASE("detector waits for a full window") {
    DmsConfig cfg;
    cfg.detector_enabled = true;
    DmsState st;
    st.detector_enabled = true;
    BreakerStatus answer = G;
    ScriptedEstimator est(10, &answer);
    for (std::uint32_t s = 1; s < 10; ++s) {
        const auto d = detect_and_mitigate(st, frame(s, I), &est, cfg);
        CHECK(d.effective == I);
        CHECK_FALSE(d.attack_flag);
    }
    CHECK(detect_and_mitigate(st, frame(10, I), &est, cfg).estimate == G);
    CHECK(st.last_frames.size() == 10);
}

TEST_CASE("debounced detection and clearing") {
    DmsConfig cfg;
    cfg.detector_enabled = true;
    DmsState st;
    st.detector_enabled = true;
    BreakerStatus answer = G;
    ScriptedEstimator est(1, &answer);

    CHECK_FALSE(detect_and_mitigate(st, frame(1, G), &est, cfg).attack_flag);
    for (std::uint32_t s = 2; s <= 3; ++s) {
        const auto d = detect_and_mitigate(st, frame(s, I), &est, cfg);
        CHECK(d.effective == G);
        CHECK_FALSE(d.attack_flag);
    }
    CHECK(st.event_log.empty());
    const auto d = detect_and_mitigate(st, frame(4, I), &est, cfg);
    CHECK(d.attack_flag);
    CHECK(d.effective == G);
    REQUIRE(st.event_log.size() == 2);
    CHECK(st.event_log[0].kind == EventKind::AttackDetected);
    CHECK(st.event_log[1].kind == EventKind::MitigationApplied);
    CHECK(st.event_log[0].t_ms == 400);

    for (std::uint32_t s = 5; s <= 20; ++s) detect_and_mitigate(st, frame(s, I), &est, cfg);
    CHECK(st.event_log.size() == 2);

    for (std::uint32_t s = 21; s <= 22; ++s) CHECK(detect_and_mitigate(st, frame(s, G), &est, cfg).attack_flag);
    CHECK_FALSE(detect_and_mitigate(st, frame(23, G), &est, cfg).attack_flag);
    REQUIRE(st.event_log.size() == 3);
    CHECK(st.event_log[2].kind == EventKind::AttackCleared);
}

TEST_CASE("SoC sources") {
    CHECK(soc_from_telemetry({frame(1, G, 35.74)}) == 35.74);

    SocIntegrator idle(40.0, 50'000.0, 100.0);
    std::vector<TelemetryFrame> frames;
    for (std::uint32_t s = 0; s < 50; ++s) {
        auto f = frame(s, G);
        f.soc_pct.reset();
        f.meas.p_bess_w = 0.0;
        frames.push_back(f);
    }
    CHECK(soc_from_telemetry(frames, &idle) == 40.0);
    CHECK_THROWS_AS(soc_from_telemetry(frames), std::invalid_argument);
}

TEST_CASE("integrator tracks the plant: 100 W for 36 s") {
    const plant::PlantConfig pcfg;
    plant::PlantState ps;
    ps.soc_pct = 35.0;
    ps.bess_setpoint_w = 100.0;
    SocIntegrator integ(35.0, pcfg.bess_capacity_wh, pcfg.scale_factor);
    std::mt19937_64 rng(1);
    for (int frame_no = 0; frame_no <= 360; ++frame_no) {
        const auto f = plant::sample_telemetry(ps, pcfg, {}, rng);
        integ.update(static_cast<std::uint64_t>(frame_no) * 100, f.meas.p_bess_w);
        if (frame_no < 360) {
            for (int k = 0; k < pcfg.steps_per_frame(); ++k) ps = plant::step(ps, pcfg).state;
        }
    }
    CHECK(std::abs(integ.soc() - ps.soc_pct) < 0.01);
    // 100 W x scale 100 for 0.01 h is 100 Wh of 50 kWh.
    CHECK(ps.soc_pct == doctest::Approx(34.8).epsilon(1e-9));
}

TEST_CASE("control center: no shed while grid-connected") {
    ControlCenter cc({}, nullptr, true);
    for (std::uint32_t s = 1; s <= 50; ++s) cc.process(frame(s, G, 20.0));
    CHECK(cc.commands().empty());
    CHECK(cc.events_snapshot().empty());
}

TEST_CASE("control center: falsified islanded status sheds once without the detector") {
    ControlCenter cc({}, nullptr, true);
    for (std::uint32_t s = 1; s <= 100; ++s) cc.process(frame(s, s > 10 ? I : G));
    const auto cmds = cc.commands();
    REQUIRE(cmds.size() == 1);
    CHECK_FALSE(cmds[0].ctrl_load_connect);
    CHECK(cmds[0].seq == 1);
    const auto ev = cc.events_snapshot();
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].kind == EventKind::Shed);
    CHECK(ev[0].t_ms == 1100);
}

TEST_CASE("control center: commands never repeat") {
    ControlCenter cc({}, nullptr, true);
    std::mt19937_64 rng(6);
    std::bernoulli_distribution coin(0.3);
    for (std::uint32_t s = 1; s <= 500; ++s) cc.process(frame(s, coin(rng) ? I : G, s % 7 == 0 ? 55.0 : 30.0));
    const auto cmds = cc.commands();
    CHECK(cmds.size() > 2);
    for (std::size_t i = 1; i < cmds.size(); ++i) CHECK(cmds[i].ctrl_load_connect != cmds[i - 1].ctrl_load_connect);
    const auto ev = cc.events_snapshot();
    for (std::size_t i = 1; i < ev.size(); ++i) CHECK(ev[i].t_ms >= ev[i - 1].t_ms);
}

TEST_CASE("control center: blackout is logged once") {
    ControlCenter cc({}, nullptr, false);
    cc.process(frame(1, I, 0.0));
    cc.process(frame(2, I, 0.0));
    const auto ev = cc.events_snapshot();
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].kind == EventKind::Blackout);
}

TEST_CASE("control center rejects a detector without a model") {
    DmsConfig cfg;
    cfg.detector_enabled = true;
    CHECK_THROWS_AS(ControlCenter(cfg, nullptr, true), ConfigError);
    cfg.debounce_frames = 0;
    BreakerStatus a = G;
    CHECK_THROWS_AS(ControlCenter(cfg, std::make_unique<ScriptedEstimator>(1, &a), true), ConfigError);
    CHECK_THROWS_AS(GruEstimator(train::GruModel{}, 10), ConfigError);
}

TEST_CASE("serve: empty stream") {
    auto [tel_plant, tel_dms] = transport::memory_pair();
    auto [cmd_dms, cmd_plant] = transport::memory_pair();
    ControlCenter cc({}, nullptr, true);
    tel_plant->close_write();
    const auto summary = serve(*tel_dms, *cmd_dms, cc);
    CHECK(summary.frames == 0);
    CHECK(cc.events_snapshot().empty());
    std::uint8_t buf[4];
    CHECK(cmd_plant->read_some(buf) == 0);
}

TEST_CASE("serve: replies to every frame and counts decode errors") {
    auto [tel_plant, tel_dms] = transport::memory_pair();
    auto [cmd_dms, cmd_plant] = transport::memory_pair();
    ControlCenter cc({}, nullptr, true);
    std::thread server([&, &in = *tel_dms, &out = *cmd_dms] { serve(in, out, cc); });

    transport::FrameReader replies(*cmd_plant);
    tel_plant->write_all(wire::encode_telemetry(frame(1, G)));
    auto r1 = replies.next();
    REQUIRE(r1);
    CHECK(std::get<std::uint32_t>(wire::decode_ack(*r1)) == 1u);

    auto corrupt = wire::encode_telemetry(frame(2, G));
    corrupt[20] ^= 0x10;
    tel_plant->write_all(corrupt);
    auto r2 = replies.next();
    REQUIRE(r2);
    CHECK(std::get<std::uint32_t>(wire::decode_ack(*r2)) == 2u);

    tel_plant->write_all(wire::encode_telemetry(frame(3, I)));
    auto r3 = replies.next();
    REQUIRE(r3);
    const auto cmd = std::get<LoadCommand>(wire::decode_command(*r3));
    CHECK_FALSE(cmd.ctrl_load_connect);

    tel_plant->close_write();
    server.join();
    CHECK_FALSE(replies.next().has_value());
    CHECK(cc.decode_errors() == 1);
    CHECK(cc.decode_error_counts().at("BadCrc") == 1);
    CHECK(cc.trace().size() == 2);
}
