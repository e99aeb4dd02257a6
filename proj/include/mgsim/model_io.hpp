#pragma once

#include <filesystem>
#include <string>

#include "mgsim/train.hpp"

// Weight files are JSON documents:
//   { "format": "mgsim-gru", "body": {...}, "crc32": "xxxxxxxx" }
// where the checksum covers the compact serialisation of "body". Doubles are
// written in shortest round-trip form, so save/load is exact.
namespace mgsim::model_io {

std::string to_json(const train::GruModel& model);
train::GruModel from_json(const std::string& text);

void save_params(const train::GruModel& model, const std::filesystem::path& path);
/// Throws DataError on a malformed file, checksum mismatch or inconsistent dimensions.
train::GruModel load_params(const std::filesystem::path& path);

}  // namespace mgsim::model_io
