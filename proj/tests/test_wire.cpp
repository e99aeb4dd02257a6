#include <doctest.h>

#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "mgsim/wire.hpp"

using namespace mgsim;
using namespace mgsim::wire;

namespace {

std::map<std::string, Bytes> load_golden() {
    std::ifstream in(std::string(MGSIM_GOLDEN_DIR) + "/wire_vectors.txt");
    REQUIRE(in.good());
    std::map<std::string, Bytes> out;
    std::string name, hex;
    while (in >> name >> hex) {
        Bytes b;
        for (std::size_t i = 0; i + 1 < hex.size(); i += 2) b.push_back(static_cast<std::uint8_t>(std::stoul(hex.substr(i, 2), nullptr, 16)));
        out[name] = b;
    }
    return out;
}

template <class T>
const T& ok(const Decoded<T>& d) {
    REQUIRE(std::holds_alternative<T>(d));
    return std::get<T>(d);
}

template <class T>
DecodeError err(const Decoded<T>& d) {
    REQUIRE(std::holds_alternative<DecodeError>(d));
    return std::get<DecodeError>(d);
}

TelemetryFrame random_frame(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::uint32_t> u32;
    std::uniform_int_distribution<std::uint64_t> u64;
    std::uniform_real_distribution<double> val(-1e6, 1e6);
    std::bernoulli_distribution coin(0.5);
    TelemetryFrame f;
    f.seq = u32(rng);
    f.t_ms = u64(rng);
    f.meas = {val(rng), val(rng), val(rng), val(rng), val(rng)};
    f.breaker_reported = coin(rng) ? BreakerStatus::Islanded : BreakerStatus::GridConnected;
    if (coin(rng)) f.soc_pct = std::uniform_real_distribution<double>(0.0, 100.0)(rng);
    return f;
}

}  // namespace

TEST_CASE("golden vectors are byte exact") {
    const auto g = load_golden();
    REQUIRE(g.size() == 7);

    CHECK(encode_telemetry(TelemetryFrame{}) == g.at("telemetry_zero"));
    CHECK(encode_telemetry({1, 100, {100.0, 1250.0, 60.5, 1410.5, 119.25}, BreakerStatus::GridConnected, {}}) ==
          g.at("telemetry_grid"));
    CHECK(encode_telemetry({0xDEADBEEF, 60000, {-648.14, 1250.0, 0.0, 601.86, 119.628}, BreakerStatus::Islanded, {}}) ==
          g.at("telemetry_islanded"));
    CHECK(encode_telemetry({101, 10000, {100.0, 1250.0, 60.126666666666665, 1410.1266666666666, 118.868},
                            BreakerStatus::Islanded, 35.74}) == g.at("telemetry_soc"));
    CHECK(encode_command({7, true, 800.0}) == g.at("command_connect"));
    CHECK(encode_command({8, false, 0.0}) == g.at("command_shed"));
    CHECK(encode_ack(42) == g.at("ack"));

    const auto& soc = ok(decode_telemetry(g.at("telemetry_soc")));
    CHECK(soc.soc_pct == 35.74);
    CHECK(soc.breaker_reported == BreakerStatus::Islanded);
    CHECK(ok(decode_ack(g.at("ack"))) == 42u);
}

TEST_CASE("telemetry layout") {
    TelemetryFrame f;
    const auto b = encode_telemetry(f);
    CHECK(b.size() == kTelemetrySize);
    CHECK(b[0] == 0x4D);
    CHECK(b[1] == 0x47);
    CHECK(ok(decode_telemetry(b)) == f);

    f.breaker_reported = BreakerStatus::Islanded;
    CHECK(encode_telemetry(f)[kBreakerOffset] == 0x01);
    f.soc_pct = 50.0;
    const auto ext = encode_telemetry(f);
    CHECK(ext.size() == kTelemetryExtSize);
    CHECK(ext[2] == (kVersion | kExtensionBit));
    CHECK(ext[kBreakerOffsetExt] == 0x01);
}

TEST_CASE("command layout") {
    const auto shed = encode_command({3, false, 0.0});
    CHECK(shed.size() == kCommandSize);
    CHECK(shed[8] == 0x00);
    CHECK(ok(decode_command(shed)).setpoint_w == 0.0);
    const auto on = encode_command({4, true, 800.0});
    CHECK(on[8] == 0x01);
    CHECK(ok(decode_command(on)).setpoint_w == 800.0);
}

TEST_CASE("structured decode errors") {
    const auto good = encode_telemetry({5, 500, {1, 2, 3, 4, 5}, BreakerStatus::GridConnected, {}});

    auto b = good;
    b.back() ^= 0x01;
    CHECK(err(decode_telemetry(b)) == DecodeError::BadCrc);

    b = good;
    b.pop_back();
    CHECK(err(decode_telemetry(b)) == DecodeError::BadLength);
    CHECK(err(decode_telemetry(Bytes{0x4D})) == DecodeError::BadLength);

    b = good;
    b[0] = 0x00;
    CHECK(err(decode_telemetry(b)) == DecodeError::BadMagic);

    b = good;
    b[2] = 0x02;
    CHECK(err(decode_telemetry(b)) == DecodeError::BadVersion);

    CHECK(err(decode_telemetry(encode_command({1, true, 800.0}))) == DecodeError::BadType);
    CHECK(err(decode_command(good)) == DecodeError::BadType);

    // A breaker byte outside {0,1} under a valid CRC.
    b = good;
    b[kBreakerOffset] = 0x02;
    const auto crc = crc32(std::span(b).first(b.size() - 4));
    for (int i = 0; i < 4; ++i) b[b.size() - 4 + i] = static_cast<std::uint8_t>(crc >> (24 - 8 * i));
    CHECK(err(decode_telemetry(b)) == DecodeError::BadEnum);

    auto c = encode_command({1, true, 800.0});
    c[8] = 0x07;
    const auto ccrc = crc32(std::span(c).first(c.size() - 4));
    for (int i = 0; i < 4; ++i) c[c.size() - 4 + i] = static_cast<std::uint8_t>(ccrc >> (24 - 8 * i));
    CHECK(err(decode_command(c)) == DecodeError::BadEnum);
}

TEST_CASE("round trip over 10000 random frames") {
    std::mt19937_64 rng(0x5eed);
    std::uniform_int_distribution<std::uint32_t> u32;
    std::uniform_real_distribution<double> sp(0.0, 5000.0);
    for (int i = 0; i < 10'000; ++i) {
        const auto f = random_frame(rng);
        const auto d = decode_telemetry(encode_telemetry(f));
        REQUIRE(std::holds_alternative<TelemetryFrame>(d));
        REQUIRE(std::get<TelemetryFrame>(d) == f);

        const LoadCommand c{u32(rng), (i & 1) != 0, sp(rng)};
        const auto dc = decode_command(encode_command(c));
        REQUIRE(std::holds_alternative<LoadCommand>(dc));
        REQUIRE(std::get<LoadCommand>(dc) == c);
    }
}

TEST_CASE("every single-bit corruption is rejected") {
    std::mt19937_64 rng(77);
    std::size_t flips = 0, rejected = 0;
    for (int i = 0; i < 200; ++i) {
        const auto f = random_frame(rng);
        const auto good = encode_telemetry(f);
        for (std::size_t bit = 0; bit < good.size() * 8; ++bit) {
            auto b = good;
            b[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
            ++flips;
            if (std::holds_alternative<DecodeError>(decode_telemetry(b))) ++rejected;
        }
    }
    const auto cmd = encode_command({9, true, 800.0});
    for (std::size_t bit = 0; bit < cmd.size() * 8; ++bit) {
        auto b = cmd;
        b[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        ++flips;
        if (std::holds_alternative<DecodeError>(decode_command(b))) ++rejected;
    }
    CHECK(flips > 100'000);
    CHECK(rejected == flips);
}

TEST_CASE("a stream of N frames splits into exactly N messages") {
    std::mt19937_64 rng(3);
    Bytes stream;
    std::vector<Bytes> frames;
    for (int i = 0; i < 300; ++i) {
        Bytes b;
        switch (i % 3) {
            case 0: b = encode_telemetry(random_frame(rng)); break;
            case 1: b = encode_command({static_cast<std::uint32_t>(i), true, 800.0}); break;
            default: b = encode_ack(static_cast<std::uint32_t>(i)); break;
        }
        stream.insert(stream.end(), b.begin(), b.end());
        frames.push_back(std::move(b));
    }

    FrameSplitter sp;
    std::vector<Bytes> got;
    std::uniform_int_distribution<std::size_t> chunk(1, 97);
    for (std::size_t pos = 0; pos < stream.size();) {
        const std::size_t n = std::min(chunk(rng), stream.size() - pos);
        sp.feed(std::span(stream).subspan(pos, n));
        pos += n;
        while (auto f = sp.next()) got.push_back(std::move(*f));
    }
    CHECK(got == frames);
    CHECK(sp.skipped_bytes() == 0);
    CHECK(sp.buffered() == 0);
}

TEST_CASE("splitter resynchronises after garbage") {
    FrameSplitter sp;
    const Bytes junk{0x00, 0x4D, 0x11, 0xFF, 0x4D};
    const auto a = encode_ack(1);
    sp.feed(junk);
    sp.feed(a);
    const auto f = sp.next();
    REQUIRE(f.has_value());
    CHECK(*f == a);
    CHECK(sp.skipped_bytes() == junk.size());
}

TEST_CASE("peek helpers") {
    const auto b = encode_telemetry({12, 3456, {}, BreakerStatus::GridConnected, 10.0});
    CHECK(peek_type(b) == MsgType::Telemetry);
    CHECK(peek_seq(b) == 12u);
    CHECK(peek_time_ms(b) == 3456u);
    CHECK(frame_length(b) == kTelemetryExtSize);
    CHECK(frame_length(encode_ack(0)) == kAckSize);
    CHECK_FALSE(frame_length(Bytes{0x4D, 0x47, 0x01, 0x09}).has_value());
    CHECK(to_string(DecodeError::BadCrc) == "BadCrc");
}
