#include "mgsim/plant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mgsim {

std::string_view to_string(BreakerStatus b) noexcept {
    return b == BreakerStatus::GridConnected ? "grid_connected" : "islanded";
}

BreakerStatus breaker_from_string(std::string_view s) {
    if (s == "grid_connected" || s == "grid" || s == "0") return BreakerStatus::GridConnected;
    if (s == "islanded" || s == "island" || s == "1") return BreakerStatus::Islanded;
    throw ConfigError("unknown breaker status '" + std::string(s) + "'");
}

}  // namespace mgsim

namespace mgsim::plant {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("plant config: ") + what);
}

}  // namespace

void PlantConfig::validate() const {
    require(pv_rated_w > 0 && bess_rated_w > 0, "ratings must be positive");
    require(scale_factor == 100.0, "scale_factor is fixed at 100");
    require(crit_load_w > 0 && ctrl_load_w > 0, "load ratings must be positive");
    require(v_nominal > 0, "v_nominal must be positive");
    require(r_cable > 0, "r_cable must be positive");
    require(bess_capacity_wh > 0, "bess_capacity_wh must be positive");
    require(dt_s > 0 && telemetry_period_s > 0, "time steps must be positive");
    require(dt_s <= telemetry_period_s, "dt_s must not exceed telemetry_period_s");
    const double ratio = telemetry_period_s / dt_s;
    require(std::abs(ratio - std::round(ratio)) < 1e-9, "telemetry_period_s must be an integer multiple of dt_s");
}

int PlantConfig::steps_per_frame() const {
    return static_cast<int>(std::lround(telemetry_period_s / dt_s));
}

void PlantState::validate() const {
    if (!(soc_pct >= 0.0 && soc_pct <= 100.0)) throw ConfigError("plant state: soc_pct outside [0,100]");
    if (!(insolation >= 0.0)) throw ConfigError("plant state: insolation must be >= 0");
}

double pv_power(double insolation, const PlantConfig& cfg) {
    if (!(insolation >= 0.0)) throw std::domain_error("pv_power: negative insolation");
    return cfg.pv_rated_w * std::min(insolation / 1000.0, 1.0) / cfg.scale_factor;
}

double insolation_for_pv(double pv_w, const PlantConfig& cfg) {
    if (!(pv_w >= 0.0)) throw std::domain_error("insolation_for_pv: negative power");
    return pv_w * cfg.scale_factor / cfg.pv_rated_w * 1000.0;
}

LoadPower load_power(const PlantState& state, const PlantConfig& cfg) {
    LoadPower lp;
    if (state.blackout) {
        lp.v_load_v = cfg.v_nominal;
        return lp;
    }
    lp.p_device_w = cfg.crit_load_w + (state.ctrl_load_connected ? cfg.ctrl_load_w : 0.0);
    const double current = lp.p_device_w / cfg.v_nominal;
    lp.loss_w = current * current * cfg.r_cable;
    lp.p_injected_w = lp.p_device_w + lp.loss_w;
    lp.v_load_v = cfg.v_nominal - current * cfg.r_cable;
    return lp;
}

PowerFlow power_flow(const PlantState& state, const PlantConfig& cfg) {
    PowerFlow pf;
    pf.load = load_power(state, cfg);
    auto& m = pf.meas;
    m.p_load_w = pf.load.p_injected_w;
    m.v_load_v = pf.load.v_load_v;
    m.p_pv_w = state.blackout ? 0.0 : pv_power(state.insolation, cfg);
    if (state.breaker == BreakerStatus::GridConnected) {
        m.p_bess_w = state.bess_setpoint_w;
        m.p_grid_w = m.p_load_w - m.p_pv_w - m.p_bess_w;
    } else {
        m.p_grid_w = 0.0;
        m.p_bess_w = m.p_load_w - m.p_pv_w;
    }
    return pf;
}

StepResult step(const PlantState& state, const PlantConfig& cfg) {
    StepResult out{state, false};
    PlantState& next = out.state;
    if (next.breaker == BreakerStatus::GridConnected) next.blackout = false;

    const PowerFlow pf = power_flow(next, cfg);
    const double energy_wh = pf.meas.p_bess_w * cfg.scale_factor * cfg.dt_s / 3600.0;
    next.soc_pct = std::clamp(next.soc_pct - energy_wh / cfg.bess_capacity_wh * 100.0, 0.0, 100.0);
    next.t_s = state.t_s + cfg.dt_s;

    if (next.breaker == BreakerStatus::Islanded && !next.blackout && next.soc_pct <= 0.0 &&
        pf.meas.p_bess_w > 0.0) {
        next.blackout = true;
        out.blackout_onset = true;
    }
    return out;
}

bool NoiseSpec::enabled() const noexcept {
    return std::any_of(sigma.begin(), sigma.end(), [](double s) { return s > 0.0; });
}

TelemetryFrame sample_telemetry(const PlantState& state, const PlantConfig& cfg, const NoiseSpec& noise,
                                std::mt19937_64& rng) {
    TelemetryFrame frame;
    frame.t_ms = static_cast<std::uint64_t>(std::llround(state.t_s * 1000.0));
    frame.breaker_reported = state.breaker;
    frame.soc_pct = state.soc_pct;

    ChannelVector values = power_flow(state, cfg).meas.as_array();
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        if (noise.sigma[c] > 0.0) {
            std::normal_distribution<double> dist(0.0, noise.sigma[c]);
            values[c] += dist(rng);
        }
    }
    frame.meas = MeasurementVector::from_array(values);
    return frame;
}

}  // namespace mgsim::plant
