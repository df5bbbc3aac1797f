#pragma once

#include <filesystem>

#include "pjem/model.hpp"

namespace pjem {

// Binary checkpoint layout (all integers little-endian):
//   magic "PJEM" | u32 version | u32 K | u32 M |
//   u32 input_dim | u32 width_count | u32 widths... |
//   u32 proj_hidden | u32 proj_depth |
//   u32 config_len | config bytes (resolved run config as JSON text) |
//   u32 param_count | per parameter:
//     u32 name_len | name bytes | u32 rank | u32 extents... | f64 values row-major |
//   u64 FNV-1a checksum over all preceding bytes.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path);

// Bit-exact restore. Throws std::runtime_error naming the cause on a bad
// magic, version mismatch, truncation, or checksum failure.
ParameterStore load_checkpoint(const std::filesystem::path& path);

}  // namespace pjem
