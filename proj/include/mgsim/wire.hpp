#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "mgsim/types.hpp"

// Fixed-length big-endian framing for the plant <-> control-center links.
//
//   offset  size  field
//   0       2     magic 0x4D 0x47
//   2       1     version (0x01; bit 7 set = SoC extension present)
//   3       1     msg type (0x01 telemetry, 0x02 load command, 0x03 ack)
//   4       4     seq
//   ...           type-specific payload
//   N-4     4     CRC-32 (IEEE) over bytes [0, N-4)
//
// Telemetry payload: t_ms u64, p_bess p_pv p_grid p_load v_load as f64,
// [soc_pct f64 when extended], breaker u8.  61 bytes, 69 extended.
// Command payload: connect u8, setpoint f64.  21 bytes.
// Ack payload: none.  12 bytes.
namespace mgsim::wire {

inline constexpr std::uint8_t kMagic0 = 0x4D;
inline constexpr std::uint8_t kMagic1 = 0x47;
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::uint8_t kExtensionBit = 0x80;

enum class MsgType : std::uint8_t { Telemetry = 0x01, Command = 0x02, Ack = 0x03 };

inline constexpr std::size_t kHeaderSize = 4;
inline constexpr std::size_t kTelemetrySize = 61;
inline constexpr std::size_t kTelemetryExtSize = 69;
inline constexpr std::size_t kCommandSize = 21;
inline constexpr std::size_t kAckSize = 12;

inline constexpr std::size_t kBreakerOffset = 56;
inline constexpr std::size_t kBreakerOffsetExt = 64;
inline constexpr std::size_t kTimeOffset = 8;

enum class DecodeError { BadMagic, BadVersion, BadType, BadLength, BadCrc, BadEnum };

std::string_view to_string(DecodeError e) noexcept;

template <class T>
using Decoded = std::variant<T, DecodeError>;

using Bytes = std::vector<std::uint8_t>;

std::uint32_t crc32(std::span<const std::uint8_t> data) noexcept;

/// Extended (69-byte) layout iff frame.soc_pct has a value.
Bytes encode_telemetry(const TelemetryFrame& frame);
Decoded<TelemetryFrame> decode_telemetry(std::span<const std::uint8_t> bytes);

Bytes encode_command(const LoadCommand& cmd);
Decoded<LoadCommand> decode_command(std::span<const std::uint8_t> bytes);

Bytes encode_ack(std::uint32_t seq);
Decoded<std::uint32_t> decode_ack(std::span<const std::uint8_t> bytes);

/// Total frame length implied by a 4-byte header, or nullopt when the
/// header is not a recognised magic/version/type combination.
std::optional<std::size_t> frame_length(std::span<const std::uint8_t> header) noexcept;

std::optional<MsgType> peek_type(std::span<const std::uint8_t> bytes) noexcept;

/// Reads the timestamp field of an encoded telemetry frame without validating it.
std::optional<std::uint64_t> peek_time_ms(std::span<const std::uint8_t> bytes) noexcept;
std::optional<std::uint32_t> peek_seq(std::span<const std::uint8_t> bytes) noexcept;

/// Splits a byte stream into self-delimited frames, resynchronising on the
/// magic after garbage. Bytes skipped while resynchronising are counted.
class FrameSplitter {
public:
    void feed(std::span<const std::uint8_t> data);
    std::optional<Bytes> next();
    std::size_t skipped_bytes() const noexcept { return skipped_; }
    std::size_t buffered() const noexcept { return buf_.size() - pos_; }

private:
    Bytes buf_;
    std::size_t pos_ = 0;
    std::size_t skipped_ = 0;
};

}  // namespace mgsim::wire
