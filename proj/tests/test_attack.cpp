#include <doctest.h>

#include <random>
#include <thread>

#include "mgsim/attack.hpp"
#include "mgsim/dms.hpp"

using namespace mgsim;
using namespace mgsim::attack;

namespace {

TelemetryFrame frame(std::uint32_t seq, BreakerStatus b, std::optional<double> soc = {}) {
    return {seq, 100ull * seq, {100.0, 1250.0, 60.0, 1410.0, 118.8}, b, soc};
}

const TelemetryFrame& decoded(const wire::Decoded<TelemetryFrame>& d) {
    REQUIRE(std::holds_alternative<TelemetryFrame>(d));
    return std::get<TelemetryFrame>(d);
}

}  // namespace

TEST_CASE("spec validation and window") {
    AttackSpec s{AttackMode::ForceValue, BreakerStatus::Islanded, 1000, 2000};
    CHECK_NOTHROW(s.validate());
    CHECK_FALSE(s.active_at(999));
    CHECK(s.active_at(1000));
    CHECK(s.active_at(1999));
    CHECK_FALSE(s.active_at(2000));

    AttackSpec bad = s;
    bad.end_ms = 1000;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = s;
    bad.forced_value.reset();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK(attack_mode_from_string("flip") == AttackMode::Flip);
    CHECK_THROWS_AS(attack_mode_from_string("dos"), ConfigError);
    CHECK(to_string(AttackMode::ForceValue) == "force_value");
}

TEST_CASE("mode none is the identity") {
    const AttackSpec none;
    std::mt19937_64 rng(1);
    for (std::uint32_t s = 0; s < 200; ++s) {
        const auto b = wire::encode_telemetry(frame(s, s % 2 ? BreakerStatus::Islanded : BreakerStatus::GridConnected));
        CHECK(falsify(b, none, 100ull * s) == b);
    }
}

TEST_CASE("flip rewrites the breaker byte under a fresh CRC") {
    const AttackSpec flip{AttackMode::Flip, {}, 0, 10'000};
    const auto in = wire::encode_telemetry(frame(5, BreakerStatus::GridConnected));
    const auto out = falsify(in, flip, 500);
    CHECK(out[wire::kBreakerOffset] == 0x01);
    const auto f = decoded(wire::decode_telemetry(out));
    CHECK(f.breaker_reported == BreakerStatus::Islanded);
    CHECK(f.meas == frame(5, BreakerStatus::GridConnected).meas);
    CHECK(f.seq == 5);
    for (std::size_t i = 0; i + 4 < out.size(); ++i) {
        if (i != wire::kBreakerOffset) CHECK(out[i] == in[i]);
    }
}

TEST_CASE("force value keeps the SoC extension") {
    const AttackSpec force{AttackMode::ForceValue, BreakerStatus::GridConnected, 0, 10'000};
    const auto in = wire::encode_telemetry(frame(7, BreakerStatus::Islanded, 38.81));
    const auto out = falsify(in, force, 700);
    REQUIRE(out.size() == wire::kTelemetryExtSize);
    CHECK(out[wire::kBreakerOffsetExt] == 0x00);
    const auto f = decoded(wire::decode_telemetry(out));
    CHECK(f.soc_pct == 38.81);
    CHECK(f.breaker_reported == BreakerStatus::GridConnected);
}

TEST_CASE("outside the window and undecodable input pass through") {
    const AttackSpec flip{AttackMode::Flip, {}, 1000, 2000};
    const auto in = wire::encode_telemetry(frame(3, BreakerStatus::GridConnected));
    CHECK(falsify(in, flip, 300) == in);
    CHECK(falsify(in, flip, 2000) == in);
    auto broken = in;
    broken[10] ^= 0xFF;
    CHECK(falsify(broken, flip, 1500) == broken);
    const wire::Bytes junk{1, 2, 3};
    CHECK(falsify(junk, flip, 1500) == junk);
}

TEST_CASE("proxy: pass-through fidelity and falsification counts") {
    for (auto mode : {AttackMode::None, AttackMode::Flip}) {
        auto [plant_end, proxy_up] = transport::memory_pair();
        auto [proxy_down, dms_end] = transport::memory_pair();
        const AttackSpec spec{mode, {}, 1000, 3000};

        wire::Bytes sent;
        for (std::uint32_t s = 0; s < 50; ++s) {
            const auto b = wire::encode_telemetry(frame(s, BreakerStatus::GridConnected, s % 3 ? std::optional(40.0) : std::nullopt));
            sent.insert(sent.end(), b.begin(), b.end());
        }
        ProxyStats stats;
        std::thread proxy([&, &up = *proxy_up, &down = *proxy_down] { stats = run_proxy(up, down, spec); });
        plant_end->write_all(sent);
        plant_end->close_write();

        wire::Bytes received;
        std::uint8_t buf[256];
        while (const auto n = dms_end->read_some(buf)) received.insert(received.end(), buf, buf + n);
        proxy.join();

        CHECK(stats.frames == 50);
        if (mode == AttackMode::None) {
            CHECK(received == sent);
            CHECK(stats.falsified == 0);
        } else {
            CHECK(received.size() == sent.size());
            CHECK(stats.falsified == 20);
            wire::FrameSplitter sp;
            sp.feed(received);
            std::size_t islanded = 0;
            while (auto f = sp.next()) {
                if (decoded(wire::decode_telemetry(*f)).breaker_reported == BreakerStatus::Islanded) ++islanded;
            }
            CHECK(islanded == 20);
        }
    }
}

TEST_CASE("falsified stream makes an unprotected control center shed") {
    const AttackSpec spec{AttackMode::ForceValue, BreakerStatus::Islanded, 1000, 60'000};
    dms::ControlCenter cc({}, nullptr, true);
    for (std::uint32_t s = 0; s < 100; ++s) {
        const auto raw = falsify(wire::encode_telemetry(frame(s, BreakerStatus::GridConnected, 35.74)), spec, 100ull * s);
        cc.process(decoded(wire::decode_telemetry(raw)));
    }
    REQUIRE(cc.commands().size() == 1);
    CHECK_FALSE(cc.commands()[0].ctrl_load_connect);
}
