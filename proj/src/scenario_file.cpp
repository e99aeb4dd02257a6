#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "mgsim/scenario.hpp"

namespace mgsim::scenario {

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

void read_breaker(const YAML::Node& node, const char* key, BreakerStatus& out) {
    if (const auto v = node[key]) out = breaker_from_string(v.as<std::string>());
}

std::string breaker_key(BreakerStatus b) { return std::string(to_string(b)); }

}  // namespace

ScenarioConfig parse_scenario_yaml(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("scenario file: ") + e.what());
    }
    if (!root || !root.IsMap()) throw ConfigError("scenario file must be a mapping");

    ScenarioConfig c;
    try {
        // A scenario may start from a built-in preset and override fields.
        if (const auto base = root["base"]) {
            auto p = preset(base.as<std::string>());
            if (!p) throw ConfigError("unknown base preset '" + base.as<std::string>() + "'");
            c = *p;
        }
        reject_unknown_keys(root,
                            {"base", "name", "duration_s", "seed", "mitigation", "model", "output_dir", "transport",
                             "plant", "initial", "attack", "dms", "noise", "breaker_events"},
                            "scenario");
        read(root, "name", c.name);
        read(root, "duration_s", c.duration_s);
        read(root, "seed", c.seed);
        read(root, "mitigation", c.mitigation_enabled);
        if (const auto v = root["model"]) c.model_path = v.as<std::string>();
        if (const auto v = root["output_dir"]) c.output_dir = v.as<std::string>();
        if (const auto v = root["transport"]) {
            const auto t = v.as<std::string>();
            if (t == "memory") c.transport = TransportKind::Memory;
            else if (t == "tcp") c.transport = TransportKind::Tcp;
            else throw ConfigError("transport must be 'memory' or 'tcp'");
        }

        if (const auto p = root["plant"]) {
            reject_unknown_keys(p,
                                {"pv_rated_w", "bess_rated_w", "scale_factor", "crit_load_w", "ctrl_load_w",
                                 "v_nominal", "r_cable", "bess_capacity_wh", "dt_s", "telemetry_period_s"},
                                "plant");
            read(p, "pv_rated_w", c.plant.pv_rated_w);
            read(p, "bess_rated_w", c.plant.bess_rated_w);
            read(p, "scale_factor", c.plant.scale_factor);
            read(p, "crit_load_w", c.plant.crit_load_w);
            read(p, "ctrl_load_w", c.plant.ctrl_load_w);
            read(p, "v_nominal", c.plant.v_nominal);
            read(p, "r_cable", c.plant.r_cable);
            read(p, "bess_capacity_wh", c.plant.bess_capacity_wh);
            read(p, "dt_s", c.plant.dt_s);
            read(p, "telemetry_period_s", c.plant.telemetry_period_s);
        }
        if (const auto s = root["initial"]) {
            reject_unknown_keys(s, {"soc_pct", "insolation", "breaker", "ctrl_load_connected", "bess_setpoint_w"},
                                "initial");
            read(s, "soc_pct", c.initial.soc_pct);
            read(s, "insolation", c.initial.insolation);
            read_breaker(s, "breaker", c.initial.breaker);
            read(s, "ctrl_load_connected", c.initial.ctrl_load_connected);
            read(s, "bess_setpoint_w", c.initial.bess_setpoint_w);
        }
        if (const auto a = root["attack"]) {
            reject_unknown_keys(a, {"mode", "forced_value", "start_ms", "end_ms"}, "attack");
            if (const auto v = a["mode"]) c.attack.mode = attack::attack_mode_from_string(v.as<std::string>());
            if (const auto v = a["forced_value"]) c.attack.forced_value = breaker_from_string(v.as<std::string>());
            read(a, "start_ms", c.attack.start_ms);
            read(a, "end_ms", c.attack.end_ms);
        }
        if (const auto d = root["dms"]) {
            reject_unknown_keys(d, {"seq_len", "debounce_frames", "soc_source"}, "dms");
            read(d, "seq_len", c.seq_len);
            read(d, "debounce_frames", c.debounce_frames);
            if (const auto v = d["soc_source"]) {
                const auto s = v.as<std::string>();
                if (s == "in_band") c.soc_source = dms::SocSource::InBand;
                else if (s == "integrated") c.soc_source = dms::SocSource::Integrated;
                else throw ConfigError("soc_source must be 'in_band' or 'integrated'");
            }
        }
        if (const auto n = root["noise"]) {
            reject_unknown_keys(n, {kChannelNames.begin(), kChannelNames.end()}, "noise");
            for (std::size_t ch = 0; ch < kChannelCount; ++ch) {
                read(n, std::string(kChannelNames[ch]).c_str(), c.noise.sigma[ch]);
            }
        }
        if (const auto ev = root["breaker_events"]) {
            if (!ev.IsSequence()) throw ConfigError("breaker_events must be a list");
            c.breaker_events.clear();
            for (const auto& e : ev) {
                reject_unknown_keys(e, {"t_ms", "status"}, "breaker_events entry");
                BreakerEvent be;
                read(e, "t_ms", be.t_ms);
                read_breaker(e, "status", be.status);
                c.breaker_events.push_back(be);
            }
        }
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("scenario file: ") + e.what());
    }
    c.validate();
    return c;
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_yaml(ss.str());
}

std::string to_yaml(const ScenarioConfig& c) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << c.name;
    out << YAML::Key << "duration_s" << YAML::Value << c.duration_s;
    out << YAML::Key << "seed" << YAML::Value << c.seed;
    out << YAML::Key << "mitigation" << YAML::Value << c.mitigation_enabled;
    out << YAML::Key << "model" << YAML::Value << c.model_path.string();
    out << YAML::Key << "output_dir" << YAML::Value << c.output_dir.string();
    out << YAML::Key << "transport" << YAML::Value << (c.transport == TransportKind::Tcp ? "tcp" : "memory");

    out << YAML::Key << "plant" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "pv_rated_w" << YAML::Value << c.plant.pv_rated_w;
    out << YAML::Key << "bess_rated_w" << YAML::Value << c.plant.bess_rated_w;
    out << YAML::Key << "scale_factor" << YAML::Value << c.plant.scale_factor;
    out << YAML::Key << "crit_load_w" << YAML::Value << c.plant.crit_load_w;
    out << YAML::Key << "ctrl_load_w" << YAML::Value << c.plant.ctrl_load_w;
    out << YAML::Key << "v_nominal" << YAML::Value << c.plant.v_nominal;
    out << YAML::Key << "r_cable" << YAML::Value << c.plant.r_cable;
    out << YAML::Key << "bess_capacity_wh" << YAML::Value << c.plant.bess_capacity_wh;
    out << YAML::Key << "dt_s" << YAML::Value << c.plant.dt_s;
    out << YAML::Key << "telemetry_period_s" << YAML::Value << c.plant.telemetry_period_s;
    out << YAML::EndMap;

    out << YAML::Key << "initial" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "soc_pct" << YAML::Value << c.initial.soc_pct;
    out << YAML::Key << "insolation" << YAML::Value << c.initial.insolation;
    out << YAML::Key << "breaker" << YAML::Value << breaker_key(c.initial.breaker);
    out << YAML::Key << "ctrl_load_connected" << YAML::Value << c.initial.ctrl_load_connected;
    out << YAML::Key << "bess_setpoint_w" << YAML::Value << c.initial.bess_setpoint_w;
    out << YAML::EndMap;

    out << YAML::Key << "attack" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "mode" << YAML::Value << std::string(attack::to_string(c.attack.mode));
    if (c.attack.forced_value) out << YAML::Key << "forced_value" << YAML::Value << breaker_key(*c.attack.forced_value);
    out << YAML::Key << "start_ms" << YAML::Value << c.attack.start_ms;
    out << YAML::Key << "end_ms" << YAML::Value << c.attack.end_ms;
    out << YAML::EndMap;

    out << YAML::Key << "dms" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "seq_len" << YAML::Value << c.seq_len;
    out << YAML::Key << "debounce_frames" << YAML::Value << c.debounce_frames;
    out << YAML::Key << "soc_source" << YAML::Value
        << (c.soc_source == dms::SocSource::InBand ? "in_band" : "integrated");
    out << YAML::EndMap;

    out << YAML::Key << "noise" << YAML::Value << YAML::BeginMap;
    for (std::size_t ch = 0; ch < kChannelCount; ++ch) {
        out << YAML::Key << std::string(kChannelNames[ch]) << YAML::Value << c.noise.sigma[ch];
    }
    out << YAML::EndMap;

    out << YAML::Key << "breaker_events" << YAML::Value << YAML::BeginSeq;
    for (const auto& e : c.breaker_events) {
        out << YAML::BeginMap << YAML::Key << "t_ms" << YAML::Value << e.t_ms << YAML::Key << "status" << YAML::Value
            << breaker_key(e.status) << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::EndMap;
    return out.c_str();
}

}  // namespace mgsim::scenario
