#pragma once

#include <filesystem>

#include "gman/tensor.hpp"

namespace gman::io {

// Binary PPM (P6, maxval 255) -> (1,3,h,w) tensor with values k/255 in [0,1].
// Header comments (#...) are honored. Bad magic, maxval != 255 or a short
// pixel payload throw FormatError carrying the byte offset.
Tensor read_ppm(const std::filesystem::path& path);

// Clamps to [0,1], quantizes round(v*255), writes P6. The 8-bit round trip
// write -> read is exact.
void write_ppm(const Tensor& image, const std::filesystem::path& path);

}  // namespace gman::io
