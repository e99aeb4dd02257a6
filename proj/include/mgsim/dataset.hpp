#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mgsim/gru.hpp"
#include "mgsim/plant.hpp"
#include "mgsim/types.hpp"

namespace mgsim::data {

/// One labelled window of consecutive telemetry frames from a single case.
struct Window {
    std::uint32_t case_id = 0;
    BreakerStatus mode = BreakerStatus::GridConnected;
    std::vector<ChannelVector> frames;

    int label() const noexcept { return to_label(mode); }
    friend bool operator==(const Window&, const Window&) = default;
};

struct Dataset {
    std::vector<Window> windows;

    bool empty() const noexcept { return windows.empty(); }
    std::size_t seq_len() const noexcept { return windows.empty() ? 0 : windows.front().frames.size(); }
    std::vector<std::uint32_t> case_ids() const;
    std::size_t case_count() const { return case_ids().size(); }
    std::size_t case_count(BreakerStatus mode) const;
};

/// How the controllable load is set for each operating point.
///   DmsRule: what the control center would command (shed while islanded below 50% SoC).
///   Mixed:   alternates connected/shed from case to case in both modes.
enum class LoadProfile { DmsRule, Mixed };

std::string_view to_string(LoadProfile p) noexcept;
LoadProfile load_profile_from_string(std::string_view s);

struct Range {
    double min = 0.0;
    double max = 0.0;
    double step = 1.0;

    /// min, min + step, ... up to and including max (within rounding).
    std::vector<double> values() const;
};

struct SweepSpec {
    bool include_grid = true;
    bool include_islanded = true;
    Range grid_pv_w{0.0, 2400.0, 200.0};
    Range grid_bess_w{100.0, 700.0, 100.0};
    Range islanded_pv_w{0.0, 2500.0, 30.0};
    double soc_pct = 35.0;
    LoadProfile load_profile = LoadProfile::DmsRule;
    std::size_t seq_len = 10;
    std::size_t settle_frames = 2;
    std::size_t windows_per_case = 8;
    plant::NoiseSpec noise{{1.0, 1.0, 1.0, 1.0, 0.01}};
};

/// Runs the plant at every operating point of the sweeps and slices the
/// telemetry into non-overlapping windows labelled with the true breaker status.
/// Grid-connected cases come first, numbered from 0.
Dataset generate_dataset(const plant::PlantConfig& cfg, const SweepSpec& sweep, std::uint64_t seed);

/// Case-level stratified split. The training case count is round-half-up of
/// train_fraction times the total, shared between labels by largest remainder.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

/// Per-channel z-score statistics.
struct Normalizer {
    ChannelVector mean{};
    ChannelVector stddev{1.0, 1.0, 1.0, 1.0, 1.0};

    /// Population statistics over every frame; constant channels keep unit scale.
    static Normalizer fit(const Dataset& train);
    ChannelVector apply(const ChannelVector& raw) const noexcept;
    gru::Sequence to_sequence(const std::vector<ChannelVector>& frames) const;

    friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

/// CSV with header case_id,mode,label,window,step,<five channels>; one row per frame.
void write_csv(const Dataset& dataset, std::ostream& out);
void save_csv(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_csv(std::istream& in);
Dataset load_csv(const std::filesystem::path& path);

}  // namespace mgsim::data

namespace mgsim::data {

// Sweep files (YAML). Keys mirror SweepSpec; ranges are {min, max, step}.
SweepSpec parse_sweep_yaml(const std::string& text);
SweepSpec load_sweep_file(const std::filesystem::path& path);
std::string to_yaml(const SweepSpec& sweep);

}  // namespace mgsim::data
