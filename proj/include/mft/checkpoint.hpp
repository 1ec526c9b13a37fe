#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mft/trainer.hpp"

namespace mft::checkpoint {

// Layout (all integers little-endian):
//   magic "MFTHEAD\0" | u32 version | u64 metadata length | metadata JSON
//   | u32 array count | per array: u32 name length, name, u64 rows, u64 cols,
//     rows*cols f32 values | 32-byte SHA-256 of everything before it.
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::string_view kExtension = ".mfthead";

std::vector<std::uint8_t> serialize(const train::TrainedHead& head);
train::TrainedHead deserialize(const std::vector<std::uint8_t>& bytes);

void save(const train::TrainedHead& head, const std::filesystem::path& path);
train::TrainedHead load(const std::filesystem::path& path);

/// "<dir>/<foundation>.mfthead"
std::filesystem::path head_path(const std::filesystem::path& dir, Foundation f);

}  // namespace mft::checkpoint
