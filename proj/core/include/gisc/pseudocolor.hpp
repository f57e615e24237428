#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "gisc/hsi.hpp"

namespace gisc::pseudocolor {

inline constexpr const char* kTableVersion = "pseudocolor-v1";

// Per-band (r, g, b) weights. Band wavelengths in [560, 700] nm are mapped
// linearly onto [400, 700] nm, where the CIE 1931 2-degree colour matching
// functions are sampled and converted to linear sRGB. Negative lobes are
// clipped and each channel is scaled to sum to 1 over the bands; a channel
// with no response stays zero.
std::vector<std::array<double, 3>> band_weights(const std::vector<double>& wavelengths_nm);

struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  // interleaved RGB, row-major
};

// Linear weighting, gamma 1.0, values clamped to [0, 1] then rounded to 8 bits.
RgbImage render(const hsi::HsiCube& cube);

void write_png(const RgbImage& image, const std::filesystem::path& path);

}  // namespace gisc::pseudocolor
