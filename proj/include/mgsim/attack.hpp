#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "mgsim/transport.hpp"
#include "mgsim/types.hpp"
#include "mgsim/wire.hpp"

namespace mgsim::attack {

enum class AttackMode { None, ForceValue, Flip };

std::string_view to_string(AttackMode m) noexcept;
AttackMode attack_mode_from_string(std::string_view s);

/// Breaker-status falsification over the half-open window [start_ms, end_ms).
struct AttackSpec {
    AttackMode mode = AttackMode::None;
    std::optional<BreakerStatus> forced_value;
    std::uint64_t start_ms = 0;
    std::uint64_t end_ms = 0;

    void validate() const;
    bool active_at(std::uint64_t t_ms) const noexcept;
};

/// Rewrites the breaker byte of an encoded telemetry frame inside the attack
/// window and re-signs the CRC. Everything else, including the SoC extension,
/// is preserved. Frames outside the window and undecodable input pass through
/// unchanged.
wire::Bytes falsify(std::span<const std::uint8_t> frame, const AttackSpec& spec, std::uint64_t t_ms);

struct ProxyStats {
    std::size_t frames = 0;
    std::size_t falsified = 0;
    std::size_t undecodable = 0;
};

/// Sequential man-in-the-middle relay: read frame, transform, write. Closes
/// the downstream side when upstream ends.
ProxyStats run_proxy(transport::ByteStream& upstream, transport::ByteStream& downstream, const AttackSpec& spec);

}  // namespace mgsim::attack
