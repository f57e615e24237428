#include <gtest/gtest.h>

#include <png.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "gisc/error.hpp"
#include "gisc/io_util.hpp"
#include "gisc/pseudocolor.hpp"

namespace gisc::pseudocolor {
namespace {

std::vector<double> wl15() { return synthetic::wavelength_grid(560.0, 700.0, 10.0); }

TEST(BandWeights, ChannelsSumToOne) {
  for (const auto& wl : {wl15(), synthetic::wavelength_grid(560.0, 700.0, 20.0)}) {
    const auto w = band_weights(wl);
    ASSERT_EQ(w.size(), wl.size());
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (const auto& row : w) {
        EXPECT_GE(row[c], 0.0);
        s += row[c];
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(BandWeights, ShortBandsLookBlueLongBandsLookRed) {
  const auto w = band_weights(wl15());
  EXPECT_GT(w.front()[2], w.front()[0]);
  EXPECT_GT(w.back()[0], w.back()[2]);
}

TEST(Render, ZeroCubeIsBlack) {
  const hsi::HsiCube cube(4, 5, wl15());
  const auto img = render(cube);
  EXPECT_EQ(img.height, 4u);
  EXPECT_EQ(img.width, 5u);
  for (auto v : img.pixels) EXPECT_EQ(v, 0);
}

TEST(Render, SingleBandCubeHasConstantHue) {
  hsi::HsiCube cube(3, 3, wl15());
  for (std::size_t i = 0; i < 9; ++i) cube.band(7)[i] = 0.1f * static_cast<float>(i + 1);
  const auto img = render(cube);
  const auto w = band_weights(wl15())[7];
  for (std::size_t p = 0; p < 9; ++p) {
    const double v = 0.1 * static_cast<double>(p + 1);
    for (int c = 0; c < 3; ++c) {
      EXPECT_EQ(img.pixels[p * 3 + c], static_cast<std::uint8_t>(std::lround(std::min(w[c] * v, 1.0) * 255.0)));
    }
  }
}

TEST(Png, WritesDecodableImage) {
  RgbImage img;
  img.height = 2;
  img.width = 3;
  img.pixels = {255, 0, 0, 0, 255, 0, 0, 0, 255, 10, 20, 30, 40, 50, 60, 70, 80, 90};
  const auto dir = testing::scratch_dir("png");
  write_png(img, dir / "x.png");
  const auto bytes = read_file(dir / "x.png");

  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  ASSERT_TRUE(png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()));
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> back(PNG_IMAGE_SIZE(png));
  ASSERT_TRUE(png_image_finish_read(&png, nullptr, back.data(), 0, nullptr));
  EXPECT_EQ(png.width, 3u);
  EXPECT_EQ(png.height, 2u);
  EXPECT_EQ(back, img.pixels);
  EXPECT_THROW(write_png(RgbImage{}, dir / "empty.png"), Error);
}

}  // namespace
}  // namespace gisc::pseudocolor
