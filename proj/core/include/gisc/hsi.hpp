#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gisc::hsi {

// Hyperspectral cube, band-major and row-major within each band. Values are
// stored as 32-bit floats, matching the on-disk payload. scale() is the
// factor that maps stored values back to the original units.
class HsiCube {
 public:
  HsiCube() = default;
  HsiCube(std::size_t height, std::size_t width, std::vector<double> wavelengths_nm,
          std::string name = {});
  HsiCube(std::size_t height, std::size_t width, std::vector<double> wavelengths_nm,
          std::vector<float> data, std::string name = {}, double scale = 1.0);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t bands() const noexcept { return wavelengths_.size(); }
  std::size_t voxel_count() const noexcept { return data_.size(); }
  const std::vector<double>& wavelengths_nm() const noexcept { return wavelengths_; }
  const std::string& name() const noexcept { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }
  double scale() const noexcept { return scale_; }

  float& at(std::size_t band, std::size_t row, std::size_t col) {
    return data_[(band * height_ + row) * width_ + col];
  }
  float at(std::size_t band, std::size_t row, std::size_t col) const {
    return data_[(band * height_ + row) * width_ + col];
  }
  std::span<float> band(std::size_t b) { return {data_.data() + b * height_ * width_, height_ * width_}; }
  std::span<const float> band(std::size_t b) const {
    return {data_.data() + b * height_ * width_, height_ * width_};
  }
  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  // Stored values widened to double, band-major (the x vector of y = Phi x).
  std::vector<double> to_vector() const;
  static HsiCube from_vector(std::size_t height, std::size_t width,
                             std::vector<double> wavelengths_nm, std::span<const double> values,
                             std::string name = {});

  bool same_shape(const HsiCube& other) const {
    return height_ == other.height_ && width_ == other.width_ && bands() == other.bands();
  }

  friend bool operator==(const HsiCube&, const HsiCube&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> wavelengths_;
  std::vector<float> data_;
  std::string name_;
  double scale_ = 1.0;
};

// HSIB container: "HSIB" 0x01, u32 little-endian header length, UTF-8 JSON
// header, then height*width*bands little-endian f32 values, band-major.
std::string encode_hsib(const HsiCube& cube);
// Throws FormatError with the offending byte offset. Cubes whose largest
// magnitude exceeds 1 are divided by it and the factor is folded into scale.
HsiCube decode_hsib(std::string_view bytes);

void store_hsib(const HsiCube& cube, const std::filesystem::path& path);
HsiCube load_hsib(const std::filesystem::path& path);

// Keeps bands with lo <= wavelength <= hi, in order.
HsiCube select_bands(const HsiCube& cube, double lo_nm, double hi_nm);

struct SliceSpec {
  std::size_t size = 144;
  std::size_t stride = 144;
};

// Number of (rows, cols) anchors of a top-left anchored, floor-based grid.
std::pair<std::size_t, std::size_t> slice_grid(std::size_t height, std::size_t width,
                                               const SliceSpec& spec);

// Row-major list of size x size spatial crops; remainders are dropped. A cube
// smaller than the slice size yields an empty list and a logged warning.
std::vector<HsiCube> slice(const HsiCube& cube, const SliceSpec& spec);

enum class Role { train, val, test };
const char* to_string(Role role);
Role role_from_string(std::string_view name);

struct ManifestEntry {
  std::string cube_path;
  Role role = Role::train;
  std::vector<std::size_t> slice_indices;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::uint64_t seed = 0;
  double split_fraction = 0.9;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

// Shuffles every non-test slice with `seed` and assigns ceil(fraction * N) of
// them to train and the rest to val. Test entries are kept as they are.
DatasetManifest split(const DatasetManifest& manifest, double fraction, std::uint64_t seed);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(std::string_view text);
void store_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

}  // namespace gisc::hsi
