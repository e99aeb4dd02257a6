#include "mgsim/wire.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include <zlib.h>

namespace mgsim::wire {

namespace {

class Writer {
public:
    explicit Writer(std::size_t size) { out_.reserve(size); }

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int s = 24; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
    }
    void u64(std::uint64_t v) {
        for (int s = 56; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void header(std::uint8_t version, MsgType type, std::uint32_t seq) {
        u8(kMagic0);
        u8(kMagic1);
        u8(version);
        u8(static_cast<std::uint8_t>(type));
        u32(seq);
    }
    Bytes finish() {
        u32(crc32(out_));
        return std::move(out_);
    }

private:
    Bytes out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() { return data_[pos_++]; }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

std::uint32_t read_u32_at(std::span<const std::uint8_t> b, std::size_t off) {
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
           std::uint32_t{b[off + 3]};
}

// Shared header/length/CRC validation; returns nullopt when the frame is sound.
std::optional<DecodeError> check_envelope(std::span<const std::uint8_t> bytes, MsgType expected) {
    if (bytes.size() < kHeaderSize) return DecodeError::BadLength;
    if (bytes[0] != kMagic0 || bytes[1] != kMagic1) return DecodeError::BadMagic;
    const std::uint8_t version = bytes[2];
    const bool extended = (version & kExtensionBit) != 0;
    if ((version & ~kExtensionBit) != kVersion) return DecodeError::BadVersion;
    if (extended && expected != MsgType::Telemetry) return DecodeError::BadVersion;
    if (bytes[3] != static_cast<std::uint8_t>(expected)) return DecodeError::BadType;
    const auto len = frame_length(bytes.first(kHeaderSize));
    if (!len || bytes.size() != *len) return DecodeError::BadLength;
    const std::size_t body = bytes.size() - 4;
    if (crc32(bytes.first(body)) != read_u32_at(bytes, body)) return DecodeError::BadCrc;
    return std::nullopt;
}

}  // namespace

std::string_view to_string(DecodeError e) noexcept {
    switch (e) {
        case DecodeError::BadMagic: return "BadMagic";
        case DecodeError::BadVersion: return "BadVersion";
        case DecodeError::BadType: return "BadType";
        case DecodeError::BadLength: return "BadLength";
        case DecodeError::BadCrc: return "BadCrc";
        case DecodeError::BadEnum: return "BadEnum";
    }
    return "Unknown";
}

std::uint32_t crc32(std::span<const std::uint8_t> data) noexcept {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    crc = ::crc32(crc, data.data(), static_cast<uInt>(data.size()));
    return static_cast<std::uint32_t>(crc);
}

Bytes encode_telemetry(const TelemetryFrame& frame) {
    const bool extended = frame.soc_pct.has_value();
    Writer w(extended ? kTelemetryExtSize : kTelemetrySize);
    w.header(extended ? (kVersion | kExtensionBit) : kVersion, MsgType::Telemetry, frame.seq);
    w.u64(frame.t_ms);
    for (double v : frame.meas.as_array()) w.f64(v);
    if (extended) w.f64(*frame.soc_pct);
    w.u8(static_cast<std::uint8_t>(frame.breaker_reported));
    return w.finish();
}

Decoded<TelemetryFrame> decode_telemetry(std::span<const std::uint8_t> bytes) {
    if (auto err = check_envelope(bytes, MsgType::Telemetry)) return *err;
    const bool extended = (bytes[2] & kExtensionBit) != 0;
    Reader r(bytes.subspan(4));
    TelemetryFrame f;
    f.seq = r.u32();
    f.t_ms = r.u64();
    ChannelVector values;
    for (double& v : values) v = r.f64();
    f.meas = MeasurementVector::from_array(values);
    if (extended) f.soc_pct = r.f64();
    const std::uint8_t breaker = r.u8();
    if (breaker > 1) return DecodeError::BadEnum;
    f.breaker_reported = static_cast<BreakerStatus>(breaker);
    return f;
}

Bytes encode_command(const LoadCommand& cmd) {
    Writer w(kCommandSize);
    w.header(kVersion, MsgType::Command, cmd.seq);
    w.u8(cmd.ctrl_load_connect ? 1 : 0);
    w.f64(cmd.setpoint_w);
    return w.finish();
}

Decoded<LoadCommand> decode_command(std::span<const std::uint8_t> bytes) {
    if (auto err = check_envelope(bytes, MsgType::Command)) return *err;
    Reader r(bytes.subspan(4));
    LoadCommand c;
    c.seq = r.u32();
    const std::uint8_t connect = r.u8();
    if (connect > 1) return DecodeError::BadEnum;
    c.ctrl_load_connect = connect == 1;
    c.setpoint_w = r.f64();
    return c;
}

Bytes encode_ack(std::uint32_t seq) {
    Writer w(kAckSize);
    w.header(kVersion, MsgType::Ack, seq);
    return w.finish();
}

Decoded<std::uint32_t> decode_ack(std::span<const std::uint8_t> bytes) {
    if (auto err = check_envelope(bytes, MsgType::Ack)) return *err;
    return read_u32_at(bytes, 4);
}

std::optional<std::size_t> frame_length(std::span<const std::uint8_t> header) noexcept {
    if (header.size() < kHeaderSize) return std::nullopt;
    if (header[0] != kMagic0 || header[1] != kMagic1) return std::nullopt;
    const std::uint8_t version = header[2];
    const bool extended = (version & kExtensionBit) != 0;
    if ((version & ~kExtensionBit) != kVersion) return std::nullopt;
    switch (static_cast<MsgType>(header[3])) {
        case MsgType::Telemetry: return extended ? kTelemetryExtSize : kTelemetrySize;
        case MsgType::Command: return extended ? std::nullopt : std::optional<std::size_t>(kCommandSize);
        case MsgType::Ack: return extended ? std::nullopt : std::optional<std::size_t>(kAckSize);
    }
    return std::nullopt;
}

std::optional<MsgType> peek_type(std::span<const std::uint8_t> bytes) noexcept {
    if (!frame_length(bytes.first(std::min(bytes.size(), kHeaderSize)))) return std::nullopt;
    return static_cast<MsgType>(bytes[3]);
}

std::optional<std::uint64_t> peek_time_ms(std::span<const std::uint8_t> bytes) noexcept {
    if (bytes.size() < kTimeOffset + 8 || peek_type(bytes) != MsgType::Telemetry) return std::nullopt;
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | bytes[kTimeOffset + i];
    return v;
}

std::optional<std::uint32_t> peek_seq(std::span<const std::uint8_t> bytes) noexcept {
    if (bytes.size() < 8) return std::nullopt;
    return read_u32_at(bytes, 4);
}

void FrameSplitter::feed(std::span<const std::uint8_t> data) {
    if (pos_ > 0 && pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
    }
    buf_.insert(buf_.end(), data.begin(), data.end());
}

std::optional<Bytes> FrameSplitter::next() {
    while (buffered() >= kHeaderSize) {
        const std::span<const std::uint8_t> rest(buf_.data() + pos_, buffered());
        const auto len = frame_length(rest.first(kHeaderSize));
        if (!len) {
            ++pos_;
            ++skipped_;
            continue;
        }
        if (rest.size() < *len) return std::nullopt;
        Bytes frame(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(*len));
        pos_ += *len;
        if (pos_ > 4096) {
            buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
            pos_ = 0;
        }
        return frame;
    }
    return std::nullopt;
}

}  // namespace mgsim::wire
