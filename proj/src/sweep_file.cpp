#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "mgsim/dataset.hpp"

namespace mgsim::data {

namespace {

void reject_unknown_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
    if (!node.IsMap()) throw ConfigError(where + " must be a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
void read(const YAML::Node& node, const char* key, T& out) {
    if (const auto v = node[key]) out = v.as<T>();
}

void read_range(const YAML::Node& node, const char* key, Range& r) {
    const auto v = node[key];
    if (!v) return;
    reject_unknown_keys(v, {"min", "max", "step"}, key);
    read(v, "min", r.min);
    read(v, "max", r.max);
    read(v, "step", r.step);
}

void emit_range(YAML::Emitter& out, const char* key, const Range& r) {
    out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "min" << YAML::Value << r.min;
    out << YAML::Key << "max" << YAML::Value << r.max;
    out << YAML::Key << "step" << YAML::Value << r.step;
    out << YAML::EndMap;
}

}  // namespace

SweepSpec parse_sweep_yaml(const std::string& text) {
    SweepSpec s;
    try {
        const YAML::Node root = YAML::Load(text);
        if (!root || root.IsNull()) return s;
        reject_unknown_keys(root,
                            {"include_grid", "include_islanded", "grid_pv_w", "grid_bess_w", "islanded_pv_w", "soc_pct",
                             "load_profile", "seq_len", "settle_frames", "windows_per_case", "noise"},
                            "sweep");
        read(root, "include_grid", s.include_grid);
        read(root, "include_islanded", s.include_islanded);
        read_range(root, "grid_pv_w", s.grid_pv_w);
        read_range(root, "grid_bess_w", s.grid_bess_w);
        read_range(root, "islanded_pv_w", s.islanded_pv_w);
        read(root, "soc_pct", s.soc_pct);
        if (const auto v = root["load_profile"]) s.load_profile = load_profile_from_string(v.as<std::string>());
        read(root, "seq_len", s.seq_len);
        read(root, "settle_frames", s.settle_frames);
        read(root, "windows_per_case", s.windows_per_case);
        if (const auto n = root["noise"]) {
            reject_unknown_keys(n, {kChannelNames.begin(), kChannelNames.end()}, "noise");
            for (std::size_t ch = 0; ch < kChannelCount; ++ch) read(n, std::string(kChannelNames[ch]).c_str(), s.noise.sigma[ch]);
        }
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("sweep file: ") + e.what());
    }
    for (double sigma : s.noise.sigma) {
        if (!(sigma >= 0.0)) throw ConfigError("sweep: noise sigma must be >= 0");
    }
    return s;
}

SweepSpec load_sweep_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open sweep file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_sweep_yaml(ss.str());
}

std::string to_yaml(const SweepSpec& s) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "include_grid" << YAML::Value << s.include_grid;
    out << YAML::Key << "include_islanded" << YAML::Value << s.include_islanded;
    emit_range(out, "grid_pv_w", s.grid_pv_w);
    emit_range(out, "grid_bess_w", s.grid_bess_w);
    emit_range(out, "islanded_pv_w", s.islanded_pv_w);
    out << YAML::Key << "soc_pct" << YAML::Value << s.soc_pct;
    out << YAML::Key << "load_profile" << YAML::Value << std::string(to_string(s.load_profile));
    out << YAML::Key << "seq_len" << YAML::Value << s.seq_len;
    out << YAML::Key << "settle_frames" << YAML::Value << s.settle_frames;
    out << YAML::Key << "windows_per_case" << YAML::Value << s.windows_per_case;
    out << YAML::Key << "noise" << YAML::Value << YAML::BeginMap;
    for (std::size_t ch = 0; ch < kChannelCount; ++ch) {
        out << YAML::Key << std::string(kChannelNames[ch]) << YAML::Value << s.noise.sigma[ch];
    }
    out << YAML::EndMap << YAML::EndMap;
    return out.c_str();
}

}  // namespace mgsim::data
