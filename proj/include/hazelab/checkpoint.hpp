#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "hazelab/network.hpp"

// Binary generator checkpoint, little-endian:
//
//   "HZCK"            4-byte magic
//   u32 version       currently 1
//   u32 x 8           GeneratorConfig: base_channels, scales, blocks_per_scale,
//                     bottleneck_blocks, image_channels, enable_dwt_bottleneck,
//                     haar_mode, zero_init_final
//   u64 count         number of named arrays
//   count x {u32 name_len, name bytes, u64 n, c, h, w, f64 values[n*c*h*w]}
namespace hazelab::net {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Writes to a temporary file and renames it over `path`, so an interrupted
// write never replaces the previous checkpoint.
void save_checkpoint(const std::filesystem::path& path, const GeneratorParams& gen);

// Throws std::runtime_error on I/O or format errors. When `expected` is given,
// a stored config that differs from it is an error.
GeneratorParams load_checkpoint(const std::filesystem::path& path,
                                const std::optional<GeneratorConfig>& expected = std::nullopt);

}  // namespace hazelab::net
