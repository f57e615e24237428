#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <set>

#include "fixtures.hpp"
#include "gisc/error.hpp"
#include "gisc/hsi.hpp"

namespace gisc::hsi {
namespace {

HsiCube random_cube(std::size_t h, std::size_t w, std::vector<double> wl, std::uint64_t seed,
                    double hi = 1.0) {
  const auto v = testing::random_vector(h * w * wl.size(), seed, 0.0, hi);
  return HsiCube::from_vector(h, w, std::move(wl), v, "cube");
}

std::vector<double> wl31() { return synthetic::wavelength_grid(400.0, 700.0, 10.0); }

std::uint32_t read_le32(const std::string& s, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[at + i]);
  return v;
}

TEST(Hsib, ByteLayout) {
  HsiCube cube(1, 2, {500.0, 600.0}, std::vector<float>{0.25f, 0.5f, 0.75f, 1.0f}, "t");
  const auto bytes = encode_hsib(cube);
  ASSERT_EQ(bytes.substr(0, 5), std::string("HSIB\x01", 5));
  const std::uint32_t header_len = read_le32(bytes, 5);
  const std::string header = bytes.substr(9, header_len);
  EXPECT_NE(header.find("\"layout\":\"band-major\""), std::string::npos);
  EXPECT_NE(header.find("\"dtype\":\"f32le\""), std::string::npos);
  const std::size_t payload = 9 + header_len;
  ASSERT_EQ(bytes.size(), payload + 16);
  const float want[] = {0.25f, 0.5f, 0.75f, 1.0f};
  for (int i = 0; i < 4; ++i) EXPECT_EQ(std::bit_cast<float>(read_le32(bytes, payload + 4 * i)), want[i]);
}

TEST(Hsib, RoundTripIsBitExact) {
  const auto cube = random_cube(8, 8, {500.0, 550.0, 600.0}, 1);
  const auto dir = testing::scratch_dir("hsib");
  store_hsib(cube, dir / "c.hsib");
  const auto back = load_hsib(dir / "c.hsib");
  EXPECT_EQ(back, cube);
  EXPECT_EQ(encode_hsib(back), encode_hsib(cube));
}

TEST(Hsib, TruncatedPayloadNamesByteCounts) {
  auto bytes = encode_hsib(random_cube(4, 4, {600.0}, 2));
  bytes.resize(bytes.size() - 3);
  try {
    decode_hsib(bytes);
    FAIL() << "expected a format error";
  } catch (const FormatError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("expected 64 bytes"), std::string::npos) << what;
    EXPECT_NE(what.find("got 61"), std::string::npos) << what;
  }
}

TEST(Hsib, BadMagicAndHeaders) {
  auto bytes = encode_hsib(random_cube(2, 2, {600.0}, 3));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_hsib(bad), FormatError);
  EXPECT_THROW(decode_hsib(bytes.substr(0, 6)), FormatError);
  const std::string header =
      R"({"height":1,"width":1,"bands":2,"wavelengths_nm":[700.0,600.0],"scale":1.0,)"
      R"("layout":"band-major","dtype":"f32le","name":"x"})";
  std::string handmade("HSIB\x01", 5);
  for (int i = 0; i < 4; ++i) handmade.push_back(static_cast<char>((header.size() >> (8 * i)) & 0xff));
  handmade += header;
  handmade.append(8, '\0');
  try {
    decode_hsib(handmade);
    FAIL() << "expected a format error";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.byte_offset(), 9u);
  }
}

TEST(Hsib, LargeValuesAreNormalizedIntoScale) {
  HsiCube cube(1, 2, {600.0}, std::vector<float>{1.0f, 2.0f}, "big");
  const auto back = decode_hsib(encode_hsib(cube));
  EXPECT_DOUBLE_EQ(back.scale(), 2.0);
  EXPECT_EQ(back.at(0, 0, 0), 0.5f);
  EXPECT_EQ(back.at(0, 0, 1), 1.0f);
}

TEST(SelectBands, InclusiveBounds) {
  const auto cube = random_cube(2, 2, wl31(), 4);
  const auto sel = select_bands(cube, 560.0, 700.0);
  ASSERT_EQ(sel.bands(), 15u);
  for (std::size_t b = 0; b < 15; ++b) {
    EXPECT_EQ(sel.wavelengths_nm()[b], 560.0 + 10.0 * b);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(sel.band(b)[i], cube.band(16 + b)[i]);
  }
  EXPECT_EQ(select_bands(cube, 400.0, 700.0), cube);
  const auto inner = select_bands(cube, 561.0, 699.0);
  ASSERT_EQ(inner.bands(), 13u);
  EXPECT_EQ(inner.wavelengths_nm().front(), 570.0);
  EXPECT_EQ(inner.wavelengths_nm().back(), 690.0);
  EXPECT_THROW(select_bands(cube, 800.0, 900.0), InvalidParameter);
}

TEST(Slice, CountsFollowFloorRule) {
  const SliceSpec spec{144, 144};
  EXPECT_EQ(slice_grid(512, 512, spec), (std::pair<std::size_t, std::size_t>{3, 3}));
  EXPECT_EQ(slice_grid(144, 144, spec), (std::pair<std::size_t, std::size_t>{1, 1}));
  EXPECT_EQ(slice_grid(300, 300, spec), (std::pair<std::size_t, std::size_t>{2, 2}));
  EXPECT_EQ(slice_grid(100, 300, spec), (std::pair<std::size_t, std::size_t>{0, 0}));
  EXPECT_EQ(slice(random_cube(100, 100, {600.0}, 5), spec).size(), 0u);
}

TEST(Slice, SlicesAreExactCrops) {
  const auto cube = random_cube(40, 50, {500.0, 600.0}, 6);
  const SliceSpec spec{16, 12};
  const auto slices = slice(cube, spec);
  const auto [gr, gc] = slice_grid(40, 50, spec);
  ASSERT_EQ(slices.size(), gr * gc);
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const std::size_t r0 = (i / gc) * spec.stride, c0 = (i % gc) * spec.stride;
    for (std::size_t b = 0; b < 2; ++b) {
      for (std::size_t r = 0; r < 16; ++r) {
        for (std::size_t c = 0; c < 16; ++c) EXPECT_EQ(slices[i].at(b, r, c), cube.at(b, r0 + r, c0 + c));
      }
    }
  }
}

DatasetManifest ten_slices() {
  DatasetManifest m;
  m.entries.push_back({"a.hsib", Role::train, {0, 1, 2, 3, 4, 5}});
  m.entries.push_back({"b.hsib", Role::train, {0, 1, 2, 3}});
  m.entries.push_back({"t.hsib", Role::test, {0, 1}});
  return m;
}

std::size_t count_role(const DatasetManifest& m, Role role) {
  std::size_t n = 0;
  for (const auto& e : m.entries) {
    if (e.role == role) n += e.slice_indices.size();
  }
  return n;
}

TEST(Split, NinetyTenPartition) {
  const auto s = split(ten_slices(), 0.9, 42);
  EXPECT_EQ(count_role(s, Role::train), 9u);
  EXPECT_EQ(count_role(s, Role::val), 1u);
  EXPECT_EQ(count_role(s, Role::test), 2u);
  EXPECT_EQ(split(ten_slices(), 0.9, 42), s);

  std::multiset<std::pair<std::string, std::size_t>> non_test;
  for (const auto& e : s.entries) {
    if (e.role == Role::test) continue;
    for (auto i : e.slice_indices) non_test.insert({e.cube_path, i});
  }
  EXPECT_EQ(non_test.size(), 10u);
  const std::set<std::pair<std::string, std::size_t>> unique(non_test.begin(), non_test.end());
  EXPECT_EQ(unique.size(), 10u);
  EXPECT_THROW(split(ten_slices(), 1.0, 1), InvalidParameter);
}

TEST(Manifest, JsonRoundTrip) {
  const auto s = split(ten_slices(), 0.9, 7);
  EXPECT_EQ(manifest_from_json(manifest_to_json(s)), s);
  const auto dir = testing::scratch_dir("manifest");
  store_manifest(s, dir / "m.json");
  EXPECT_EQ(load_manifest(dir / "m.json"), s);
  EXPECT_THROW(manifest_from_json("{not json"), FormatError);
}

TEST(Cube, RejectsBadWavelengths) {
  EXPECT_THROW(HsiCube(2, 2, {600.0, 500.0}), InvalidParameter);
  EXPECT_THROW(HsiCube(2, 2, std::vector<double>{}), InvalidParameter);
}

}  // namespace
}  // namespace gisc::hsi
