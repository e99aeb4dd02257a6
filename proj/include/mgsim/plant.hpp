#pragma once

#include <random>

#include "mgsim/types.hpp"

namespace mgsim::plant {

/// Ratings and discretisation of the simulated microgrid.
///
/// Plant-side quantities (PV/BESS ratings, battery energy) are divided by
/// `scale_factor` before they reach the control side; load quantities are
/// already control-side.
struct PlantConfig {
    double pv_rated_w = 250'000.0;
    double bess_rated_w = 100'000.0;
    double scale_factor = 100.0;
    double crit_load_w = 600.0;
    double ctrl_load_w = 800.0;
    double v_nominal = 120.0;
    double r_cable = 0.0744;
    double bess_capacity_wh = 50'000.0;
    double dt_s = 0.01;
    double telemetry_period_s = 0.1;

    /// Throws ConfigError on any violated invariant.
    void validate() const;
    /// Plant steps per telemetry frame.
    int steps_per_frame() const;
};

struct PlantState {
    double soc_pct = 35.0;
    BreakerStatus breaker = BreakerStatus::GridConnected;
    bool ctrl_load_connected = true;
    double insolation = 1000.0;
    // Grid-connected dispatch only; ignored while islanded.
    double bess_setpoint_w = 100.0;
    double t_s = 0.0;
    // Latched when the battery empties while islanded; cleared by grid reconnection.
    bool blackout = false;

    void validate() const;
};

struct LoadPower {
    double p_device_w = 0.0;
    double loss_w = 0.0;
    double p_injected_w = 0.0;
    double v_load_v = 0.0;
};

/// Quasi-static operating point of the plant for one state.
struct PowerFlow {
    MeasurementVector meas;  // p_load_w is the injected power (device + cable loss)
    LoadPower load;
};

/// Control-side PV output, linear in insolation and clipped at rating.
double pv_power(double insolation, const PlantConfig& cfg);

/// Insolation that makes pv_power return `pv_w`.
double insolation_for_pv(double pv_w, const PlantConfig& cfg);

LoadPower load_power(const PlantState& state, const PlantConfig& cfg);

PowerFlow power_flow(const PlantState& state, const PlantConfig& cfg);

struct StepResult {
    PlantState state;
    bool blackout_onset = false;
};

/// Advances the plant by one dt_s: solves the power balance, integrates SoC.
StepResult step(const PlantState& state, const PlantConfig& cfg);

/// Per-channel zero-mean Gaussian noise, standard deviations in channel units.
struct NoiseSpec {
    ChannelVector sigma{};

    bool enabled() const noexcept;
};

/// Builds the frame for the current state. seq is left at zero for the caller
/// to assign. Channels with zero sigma never draw from `rng`.
TelemetryFrame sample_telemetry(const PlantState& state, const PlantConfig& cfg, const NoiseSpec& noise,
                                std::mt19937_64& rng);

}  // namespace mgsim::plant
