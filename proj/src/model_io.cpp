#include "mgsim/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mgsim/wire.hpp"

namespace mgsim::model_io {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "mgsim-gru";
constexpr int kFormatVersion = 1;

std::string crc_hex(const std::string& s) {
    const auto crc = wire::crc32({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", crc);
    return buf;
}

json body_of(const train::GruModel& m) {
    const auto& p = m.params;
    json params = {
        {"w_r", p.w_r.data}, {"w_h", p.w_h.data}, {"w_z", p.w_z.data}, {"b_r", p.b_r},
        {"b_h", p.b_h},      {"b_z", p.b_z},      {"w_out", p.w_out},  {"b_out", p.b_out},
    };
    return {
        {"version", kFormatVersion},
        {"variant", std::string(gru::to_string(m.variant))},
        {"input_size", p.input_size},
        {"hidden_size", p.hidden_size},
        {"channels", std::vector<std::string>(kChannelNames.begin(), kChannelNames.end())},
        {"norm", {{"mean", m.norm.mean}, {"std", m.norm.stddev}}},
        {"params", params},
    };
}

}  // namespace

std::string to_json(const train::GruModel& model) {
    model.params.check_dims();
    const json body = body_of(model);
    const json doc = {{"format", kFormat}, {"body", body}, {"crc32", crc_hex(body.dump())}};
    return doc.dump(1);
}

train::GruModel from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format") != kFormat) throw DataError("model file: unknown format tag");
        const json& body = doc.at("body");
        if (crc_hex(body.dump()) != doc.at("crc32").get<std::string>()) throw DataError("model file: checksum mismatch");
        if (body.at("version") != kFormatVersion) throw DataError("model file: unsupported version");

        train::GruModel m;
        m.variant = gru::variant_from_string(body.at("variant").get<std::string>());
        const auto in = body.at("input_size").get<std::size_t>();
        const auto hid = body.at("hidden_size").get<std::size_t>();
        if (in != kChannelCount) throw DataError("model file: input_size must be 5");
        m.params = gru::GruParams::zeros(in, hid);
        const json& p = body.at("params");
        m.params.w_r.data = p.at("w_r").get<std::vector<double>>();
        m.params.w_h.data = p.at("w_h").get<std::vector<double>>();
        m.params.w_z.data = p.at("w_z").get<std::vector<double>>();
        m.params.b_r = p.at("b_r").get<std::vector<double>>();
        m.params.b_h = p.at("b_h").get<std::vector<double>>();
        m.params.b_z = p.at("b_z").get<std::vector<double>>();
        m.params.w_out = p.at("w_out").get<std::vector<double>>();
        m.params.b_out = p.at("b_out").get<double>();
        m.norm.mean = body.at("norm").at("mean").get<ChannelVector>();
        m.norm.stddev = body.at("norm").at("std").get<ChannelVector>();
        try {
            m.params.check_dims();
        } catch (const std::invalid_argument& e) {
            throw DataError(std::string("model file: ") + e.what());
        }
        for (double s : m.norm.stddev) {
            if (!(s > 0.0)) throw DataError("model file: normalization std must be positive");
        }
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("model file: ") + e.what());
    } catch (const ConfigError& e) {
        throw DataError(std::string("model file: ") + e.what());
    }
}

void save_params(const train::GruModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write " + path.string());
    out << to_json(model) << '\n';
}

train::GruModel load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

}  // namespace mgsim::model_io
