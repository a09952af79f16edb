#pragma once

#include <filesystem>

#include "gcnet/tensor.hpp"

namespace gcnet {

// "GCMK", u32 rank, u32 dims..., then keep bits row-major, packed LSB-first
// (bit k of the stream is byte k/8, bit k%8). All integers little-endian.
void write_mask(const Mask& mask, const std::filesystem::path& path);
Mask read_mask(const std::filesystem::path& path);

}  // namespace gcnet
