#pragma once

#include <cstdint>
#include <filesystem>

#include "gman/nn.hpp"

namespace gman::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Network checkpoint, bit-exact: magic "GMAN", u32 version, config block
// (base_channels, down_channels, residual block count then per-block conv
// counts, all u32 LE), u32 total scalar count, then per parameter in layer
// order: u16 name length, name bytes, rank byte (4), four u32 dims, raw
// float32 LE data.
void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

// Same layout for frozen feature extractors with magic "GMFX"; the config
// block is tap_channels then convs_per_stage (each a u32 count + values).
void save_extractor(const FeatureExtractor& fx, const std::filesystem::path& path);
FeatureExtractor load_extractor(const std::filesystem::path& path);

}  // namespace gman::nn
