#include "mgsim/attack.hpp"

#include <string>
#include <variant>

namespace mgsim::attack {

std::string_view to_string(AttackMode m) noexcept {
    switch (m) {
        case AttackMode::None: return "none";
        case AttackMode::ForceValue: return "force_value";
        case AttackMode::Flip: return "flip";
    }
    return "unknown";
}

AttackMode attack_mode_from_string(std::string_view s) {
    if (s == "none") return AttackMode::None;
    if (s == "force_value" || s == "force") return AttackMode::ForceValue;
    if (s == "flip") return AttackMode::Flip;
    throw ConfigError("unknown attack mode '" + std::string(s) + "'");
}

void AttackSpec::validate() const {
    if (mode == AttackMode::None) return;
    if (start_ms >= end_ms) throw ConfigError("attack window needs start_ms < end_ms");
    if (mode == AttackMode::ForceValue && !forced_value) throw ConfigError("force_value attack needs forced_value");
}

bool AttackSpec::active_at(std::uint64_t t_ms) const noexcept {
    return mode != AttackMode::None && t_ms >= start_ms && t_ms < end_ms;
}

wire::Bytes falsify(std::span<const std::uint8_t> frame, const AttackSpec& spec, std::uint64_t t_ms) {
    wire::Bytes passthrough(frame.begin(), frame.end());
    if (!spec.active_at(t_ms)) return passthrough;

    auto decoded = wire::decode_telemetry(frame);
    auto* f = std::get_if<TelemetryFrame>(&decoded);
    if (!f) return passthrough;

    if (spec.mode == AttackMode::ForceValue) {
        f->breaker_reported = *spec.forced_value;
    } else {
        f->breaker_reported = flipped(f->breaker_reported);
    }
    return wire::encode_telemetry(*f);
}

ProxyStats run_proxy(transport::ByteStream& upstream, transport::ByteStream& downstream, const AttackSpec& spec) {
    ProxyStats stats;
    transport::FrameReader reader(upstream);
    while (auto raw = reader.next()) {
        ++stats.frames;
        const auto t_ms = wire::peek_time_ms(*raw);
        if (!t_ms || std::holds_alternative<wire::DecodeError>(wire::decode_telemetry(*raw))) {
            ++stats.undecodable;
            downstream.write_all(*raw);
            continue;
        }
        wire::Bytes out = falsify(*raw, spec, *t_ms);
        if (out != *raw) ++stats.falsified;
        downstream.write_all(out);
    }
    downstream.close_write();
    return stats;
}

}  // namespace mgsim::attack
