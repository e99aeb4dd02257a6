#include "mgsim/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "mgsim/types.hpp"

namespace mgsim::manifest {

std::string fnv1a64_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeFailure("cannot read " + path.string());
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a64_hex(data);
}

void RunManifest::add_output(const std::filesystem::path& path) { outputs.push_back({path, file_hash(path)}); }

std::string RunManifest::to_json() const {
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& o : outputs) outs.push_back({{"path", o.path.string()}, {"fnv1a64", o.hash}});
    const nlohmann::json j = {
        {"command", command},
        {"config_hash", config_hash},
        {"seed", seed},
        {"versions", {{"mgsim", kToolVersion}, {"wire", 1}, {"model_format", 1}}},
        {"outputs", outs},
        {"wall_clock_s", wall_clock_s},
    };
    return j.dump(2);
}

void RunManifest::write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw RuntimeFailure("cannot write " + path.string());
    out << to_json() << '\n';
}

}  // namespace mgsim::manifest
