#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mgsim::manifest {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a64_hex(std::string_view bytes);
std::string file_hash(const std::filesystem::path& path);

struct OutputFile {
    std::filesystem::path path;
    std::string hash;
};

/// Reproducibility record written next to every command's outputs.
struct RunManifest {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<OutputFile> outputs;
    double wall_clock_s = 0.0;

    void add_output(const std::filesystem::path& path);
    std::string to_json() const;
    void write(const std::filesystem::path& path) const;
};

}  // namespace mgsim::manifest
