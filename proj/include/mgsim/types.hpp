#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mgsim {

// Exception classes map onto the CLI exit-code classes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class RuntimeFailure : public Error {
public:
    using Error::Error;
};

enum class BreakerStatus : std::uint8_t { GridConnected = 0, Islanded = 1 };

constexpr BreakerStatus flipped(BreakerStatus b) noexcept {
    return b == BreakerStatus::GridConnected ? BreakerStatus::Islanded : BreakerStatus::GridConnected;
}

constexpr int to_label(BreakerStatus b) noexcept { return static_cast<int>(b); }

std::string_view to_string(BreakerStatus b) noexcept;
BreakerStatus breaker_from_string(std::string_view s);

inline constexpr std::size_t kChannelCount = 5;
inline constexpr std::array<std::string_view, kChannelCount> kChannelNames{
    "p_bess_w", "p_pv_w", "p_grid_w", "p_load_w", "v_load_v"};

using ChannelVector = std::array<double, kChannelCount>;

/// The five control-side measurements the detector consumes, in wire order.
/// Powers are control-side watts (plant-side values divided by the scale factor).
struct MeasurementVector {
    double p_bess_w = 0.0;
    double p_pv_w = 0.0;
    double p_grid_w = 0.0;
    double p_load_w = 0.0;
    double v_load_v = 0.0;

    ChannelVector as_array() const noexcept { return {p_bess_w, p_pv_w, p_grid_w, p_load_w, v_load_v}; }
    static MeasurementVector from_array(const ChannelVector& a) noexcept { return {a[0], a[1], a[2], a[3], a[4]}; }

    friend bool operator==(const MeasurementVector&, const MeasurementVector&) = default;
};

struct TelemetryFrame {
    std::uint32_t seq = 0;
    std::uint64_t t_ms = 0;
    MeasurementVector meas;
    BreakerStatus breaker_reported = BreakerStatus::GridConnected;
    // In-band SoC extension; present iff the frame is encoded with the extension bit.
    std::optional<double> soc_pct;

    friend bool operator==(const TelemetryFrame&, const TelemetryFrame&) = default;
};

struct LoadCommand {
    std::uint32_t seq = 0;
    bool ctrl_load_connect = false;
    double setpoint_w = 0.0;

    friend bool operator==(const LoadCommand&, const LoadCommand&) = default;
};

}  // namespace mgsim
