#include "gisc/pseudocolor.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "gisc/error.hpp"
#include "gisc/io_util.hpp"

namespace gisc::pseudocolor {
namespace {

// CIE 1931 2-degree observer, 400..700 nm in 10 nm steps: x, y, z.
constexpr double kCmf[31][3] = {
    {0.01431, 0.000396, 0.06785}, {0.04351, 0.00121, 0.2074},   {0.13438, 0.004, 0.6456},
    {0.2839, 0.0116, 1.3856},     {0.34828, 0.023, 1.74706},    {0.3362, 0.038, 1.77211},
    {0.2908, 0.06, 1.6692},       {0.19536, 0.09098, 1.28764},  {0.09564, 0.13902, 0.81295},
    {0.03201, 0.20802, 0.46518},  {0.0049, 0.323, 0.272},       {0.0093, 0.503, 0.1582},
    {0.06327, 0.71, 0.07825},     {0.1655, 0.862, 0.04216},     {0.2904, 0.954, 0.0203},
    {0.43345, 0.99495, 0.00875},  {0.5945, 0.995, 0.0039},      {0.7621, 0.952, 0.0021},
    {0.9163, 0.87, 0.00165},      {1.0263, 0.757, 0.0011},      {1.0622, 0.631, 0.0008},
    {1.0026, 0.503, 0.00034},     {0.85445, 0.381, 0.00019},    {0.6424, 0.265, 0.00005},
    {0.4479, 0.175, 0.00002},     {0.2835, 0.107, 0.0},         {0.1649, 0.061, 0.0},
    {0.0874, 0.032, 0.0},         {0.04677, 0.017, 0.0},        {0.0227, 0.00821, 0.0},
    {0.011359, 0.004102, 0.0},
};

// XYZ to linear sRGB (D65).
constexpr double kXyzToRgb[3][3] = {
    {3.2406, -1.5372, -0.4986},
    {-0.9689, 1.8758, 0.0415},
    {0.0557, -0.2040, 1.0570},
};

std::array<double, 3> cmf_at(double nm) {
  const double pos = std::clamp((nm - 400.0) / 10.0, 0.0, 30.0);
  const auto i = std::min(static_cast<int>(pos), 29);
  const double t = pos - i;
  std::array<double, 3> out{};
  for (int k = 0; k < 3; ++k) out[k] = (1.0 - t) * kCmf[i][k] + t * kCmf[i + 1][k];
  return out;
}

}  // namespace

std::vector<std::array<double, 3>> band_weights(const std::vector<double>& wavelengths_nm) {
  std::vector<std::array<double, 3>> w;
  w.reserve(wavelengths_nm.size());
  std::array<double, 3> sums{};
  for (double nm : wavelengths_nm) {
    const double mapped = 400.0 + (nm - 560.0) * (300.0 / 140.0);
    const auto xyz = cmf_at(mapped);
    std::array<double, 3> rgb{};
    for (int c = 0; c < 3; ++c) {
      double v = 0.0;
      for (int k = 0; k < 3; ++k) v += kXyzToRgb[c][k] * xyz[k];
      rgb[c] = std::max(v, 0.0);
      sums[c] += rgb[c];
    }
    w.push_back(rgb);
  }
  for (auto& row : w) {
    for (int c = 0; c < 3; ++c) row[c] = sums[c] > 0.0 ? row[c] / sums[c] : 0.0;
  }
  return w;
}

RgbImage render(const hsi::HsiCube& cube) {
  const auto w = band_weights(cube.wavelengths_nm());
  RgbImage img;
  img.height = cube.height();
  img.width = cube.width();
  img.pixels.assign(img.height * img.width * 3, 0);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      std::array<double, 3> acc{};
      for (std::size_t b = 0; b < cube.bands(); ++b) {
        const double v = cube.at(b, r, c);
        for (int k = 0; k < 3; ++k) acc[k] += w[b][k] * v;
      }
      for (int k = 0; k < 3; ++k) {
        const double v = std::clamp(acc[k], 0.0, 1.0);
        img.pixels[(r * img.width + c) * 3 + k] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return img;
}

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  if (image.height == 0 || image.width == 0) throw InvalidParameter("cannot write an empty image");
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  const auto stride = static_cast<png_int_32>(image.width * 3);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), stride, nullptr)) {
    throw IoError(std::string("png encoding failed: ") + png.message);
  }
  std::string bytes(size, '\0');
  if (!png_image_write_to_memory(&png, bytes.data(), &size, 0, image.pixels.data(), stride, nullptr)) {
    throw IoError(std::string("png encoding failed: ") + png.message);
  }
  bytes.resize(size);
  atomic_write(path, bytes);
}

}  // namespace gisc::pseudocolor
