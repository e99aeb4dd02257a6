#include "mgsim/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

namespace mgsim::data {

std::vector<std::uint32_t> Dataset::case_ids() const {
    std::set<std::uint32_t> ids;
    for (const auto& w : windows) ids.insert(w.case_id);
    return {ids.begin(), ids.end()};
}

std::size_t Dataset::case_count(BreakerStatus mode) const {
    std::set<std::uint32_t> ids;
    for (const auto& w : windows) {
        if (w.mode == mode) ids.insert(w.case_id);
    }
    return ids.size();
}

std::string_view to_string(LoadProfile p) noexcept { return p == LoadProfile::DmsRule ? "dms-rule" : "mixed"; }

LoadProfile load_profile_from_string(std::string_view s) {
    if (s == "dms-rule" || s == "dms_rule") return LoadProfile::DmsRule;
    if (s == "mixed") return LoadProfile::Mixed;
    throw ConfigError("unknown load profile '" + std::string(s) + "'");
}

std::vector<double> Range::values() const {
    if (!(step > 0.0) || !(max >= min)) throw ConfigError("sweep range must have step > 0 and max >= min");
    const auto n = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = min + static_cast<double>(i) * step;
    return out;
}

namespace {

struct OperatingPoint {
    BreakerStatus mode;
    double pv_w;
    double bess_setpoint_w;
};

void run_case(const plant::PlantConfig& cfg, const SweepSpec& sweep, const OperatingPoint& op, std::uint32_t case_id,
              std::size_t index_in_sweep, std::mt19937_64& rng, Dataset& out) {
    plant::PlantState state;
    state.soc_pct = sweep.soc_pct;
    state.breaker = op.mode;
    state.insolation = plant::insolation_for_pv(op.pv_w, cfg);
    state.bess_setpoint_w = op.bess_setpoint_w;
    if (sweep.load_profile == LoadProfile::DmsRule) {
        state.ctrl_load_connected = !(op.mode == BreakerStatus::Islanded && sweep.soc_pct < 50.0);
    } else {
        state.ctrl_load_connected = index_in_sweep % 2 == 0;
    }

    const int steps = cfg.steps_per_frame();
    const auto advance = [&] {
        for (int i = 0; i < steps; ++i) state = plant::step(state, cfg).state;
    };
    for (std::size_t f = 0; f < sweep.settle_frames; ++f) advance();

    for (std::size_t w = 0; w < sweep.windows_per_case; ++w) {
        Window window{case_id, op.mode, {}};
        window.frames.reserve(sweep.seq_len);
        for (std::size_t f = 0; f < sweep.seq_len; ++f) {
            window.frames.push_back(plant::sample_telemetry(state, cfg, sweep.noise, rng).meas.as_array());
            advance();
        }
        out.windows.push_back(std::move(window));
    }
}

}  // namespace

Dataset generate_dataset(const plant::PlantConfig& cfg, const SweepSpec& sweep, std::uint64_t seed) {
    cfg.validate();
    if (sweep.seq_len == 0 || sweep.windows_per_case == 0) throw ConfigError("sweep: seq_len and windows_per_case must be >= 1");

    std::vector<OperatingPoint> grid_points;
    std::vector<OperatingPoint> islanded_points;
    if (sweep.include_grid) {
        for (double pv : sweep.grid_pv_w.values()) {
            for (double bess : sweep.grid_bess_w.values()) grid_points.push_back({BreakerStatus::GridConnected, pv, bess});
        }
    }
    if (sweep.include_islanded) {
        for (double pv : sweep.islanded_pv_w.values()) islanded_points.push_back({BreakerStatus::Islanded, pv, 0.0});
    }
    if (grid_points.empty() && islanded_points.empty()) throw ConfigError("sweep: no operating points");

    std::mt19937_64 rng(seed);
    Dataset out;
    std::uint32_t case_id = 0;
    for (std::size_t i = 0; i < grid_points.size(); ++i) run_case(cfg, sweep, grid_points[i], case_id++, i, rng, out);
    for (std::size_t i = 0; i < islanded_points.size(); ++i) {
        run_case(cfg, sweep, islanded_points[i], case_id++, i, rng, out);
    }
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0,1)");

    // Case ids per label, in first-seen order.
    std::map<int, std::vector<std::uint32_t>> by_label;
    std::set<std::uint32_t> seen;
    for (const auto& w : dataset.windows) {
        if (seen.insert(w.case_id).second) by_label[w.label()].push_back(w.case_id);
    }
    const std::size_t total = seen.size();
    if (total < 2) throw DataError("split needs at least two cases");

    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(total) + 0.5 + 1e-9));

    struct Quota {
        int label;
        std::size_t take;
        double remainder;
    };
    std::vector<Quota> quotas;
    std::size_t assigned = 0;
    for (const auto& [label, ids] : by_label) {
        const double exact = train_fraction * static_cast<double>(ids.size());
        const auto base = static_cast<std::size_t>(std::floor(exact));
        quotas.push_back({label, base, exact - static_cast<double>(base)});
        assigned += base;
    }
    std::vector<std::size_t> order(quotas.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return quotas[a].remainder > quotas[b].remainder; });
    for (std::size_t k = 0; assigned < n_train && k < order.size(); ++k, ++assigned) ++quotas[order[k]].take;

    std::mt19937_64 rng(seed);
    std::set<std::uint32_t> train_ids;
    for (const auto& q : quotas) {
        std::vector<std::uint32_t> ids = by_label[q.label];
        std::shuffle(ids.begin(), ids.end(), rng);
        std::size_t take = q.take;
        // Keep every label on both sides when it has at least two cases.
        if (ids.size() >= 2) take = std::clamp<std::size_t>(take, 1, ids.size() - 1);
        train_ids.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(std::min(take, ids.size())));
    }

    std::pair<Dataset, Dataset> out;
    for (const auto& w : dataset.windows) {
        (train_ids.contains(w.case_id) ? out.first : out.second).windows.push_back(w);
    }
    return out;
}

Normalizer Normalizer::fit(const Dataset& train) {
    Normalizer n;
    std::size_t count = 0;
    ChannelVector sum{};
    for (const auto& w : train.windows) {
        for (const auto& f : w.frames) {
            for (std::size_t c = 0; c < kChannelCount; ++c) sum[c] += f[c];
            ++count;
        }
    }
    if (count == 0) throw DataError("cannot fit normalization on an empty dataset");
    for (std::size_t c = 0; c < kChannelCount; ++c) n.mean[c] = sum[c] / static_cast<double>(count);

    ChannelVector sq{};
    for (const auto& w : train.windows) {
        for (const auto& f : w.frames) {
            for (std::size_t c = 0; c < kChannelCount; ++c) {
                const double d = f[c] - n.mean[c];
                sq[c] += d * d;
            }
        }
    }
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        const double sd = std::sqrt(sq[c] / static_cast<double>(count));
        n.stddev[c] = sd > 1e-12 ? sd : 1.0;
    }
    return n;
}

ChannelVector Normalizer::apply(const ChannelVector& raw) const noexcept {
    ChannelVector out;
    for (std::size_t c = 0; c < kChannelCount; ++c) out[c] = (raw[c] - mean[c]) / stddev[c];
    return out;
}

gru::Sequence Normalizer::to_sequence(const std::vector<ChannelVector>& frames) const {
    gru::Sequence seq{frames.size(), kChannelCount, {}};
    seq.values.reserve(frames.size() * kChannelCount);
    for (const auto& f : frames) {
        const ChannelVector n = apply(f);
        seq.values.insert(seq.values.end(), n.begin(), n.end());
    }
    return seq;
}

namespace {

constexpr std::string_view kHeader = "case_id,mode,label,window,step,p_bess_w,p_pv_w,p_grid_w,p_load_w,v_load_v";

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("dataset line " + std::to_string(line) + ": bad number '" + s + "'");
    }
}

}  // namespace

void write_csv(const Dataset& dataset, std::ostream& out) {
    out << kHeader << '\n';
    std::map<std::uint32_t, std::size_t> window_index;
    for (const auto& w : dataset.windows) {
        const std::size_t wi = window_index[w.case_id]++;
        for (std::size_t t = 0; t < w.frames.size(); ++t) {
            out << w.case_id << ',' << to_string(w.mode) << ',' << w.label() << ',' << wi << ',' << t;
            for (double v : w.frames[t]) out << ',' << format_double(v);
            out << '\n';
        }
    }
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write " + path.string());
    write_csv(dataset, out);
}

Dataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kHeader) throw DataError("dataset: missing or unexpected header row");

    Dataset ds;
    std::size_t line_no = 1;
    std::uint32_t cur_case = 0;
    std::size_t cur_window = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 10) throw DataError("dataset line " + std::to_string(line_no) + ": expected 10 columns");

        const auto case_id = static_cast<std::uint32_t>(parse_double(cells[0], line_no));
        const BreakerStatus mode = breaker_from_string(cells[1]);
        const int label = static_cast<int>(parse_double(cells[2], line_no));
        if (label != to_label(mode)) throw DataError("dataset line " + std::to_string(line_no) + ": label/mode mismatch");
        const auto window = static_cast<std::size_t>(parse_double(cells[3], line_no));
        const auto step = static_cast<std::size_t>(parse_double(cells[4], line_no));

        ChannelVector v;
        for (std::size_t c = 0; c < kChannelCount; ++c) v[c] = parse_double(cells[5 + c], line_no);

        if (step == 0) {
            ds.windows.push_back(Window{case_id, mode, {}});
            cur_case = case_id;
            cur_window = window;
        } else if (ds.windows.empty() || case_id != cur_case || window != cur_window ||
                   step != ds.windows.back().frames.size()) {
            throw DataError("dataset line " + std::to_string(line_no) + ": frame out of sequence");
        }
        ds.windows.back().frames.push_back(v);
    }
    const std::size_t len = ds.seq_len();
    for (const auto& w : ds.windows) {
        if (w.frames.size() != len) throw DataError("dataset: windows have differing lengths");
    }
    return ds;
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset " + path.string());
    return read_csv(in);
}

}  // namespace mgsim::data
