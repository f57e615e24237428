#include "gisc/hsi.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include "json.hpp"
#include <random>

#include "gisc/error.hpp"
#include "gisc/io_util.hpp"
#include "gisc/log.hpp"

namespace gisc::hsi {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr char kMagic[5] = {'H', 'S', 'I', 'B', 0x01};
constexpr std::size_t kPreamble = 9;  // magic + u32 header length

void check_wavelengths(const std::vector<double>& wl) {
  if (wl.empty()) throw InvalidParameter("a cube needs at least one band");
  for (std::size_t i = 1; i < wl.size(); ++i) {
    if (!(wl[i] > wl[i - 1])) throw InvalidParameter("wavelengths must be strictly ascending");
  }
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::string_view in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

HsiCube::HsiCube(std::size_t height, std::size_t width, std::vector<double> wavelengths_nm,
                 std::string name)
    : height_(height), width_(width), wavelengths_(std::move(wavelengths_nm)), name_(std::move(name)) {
  check_wavelengths(wavelengths_);
  data_.assign(height_ * width_ * wavelengths_.size(), 0.0f);
}

HsiCube::HsiCube(std::size_t height, std::size_t width, std::vector<double> wavelengths_nm,
                 std::vector<float> data, std::string name, double scale)
    : height_(height),
      width_(width),
      wavelengths_(std::move(wavelengths_nm)),
      data_(std::move(data)),
      name_(std::move(name)),
      scale_(scale) {
  check_wavelengths(wavelengths_);
  if (data_.size() != height_ * width_ * wavelengths_.size()) {
    throw ShapeError("cube payload has " + std::to_string(data_.size()) + " values, expected " +
                     std::to_string(height_ * width_ * wavelengths_.size()));
  }
}

std::vector<double> HsiCube::to_vector() const { return {data_.begin(), data_.end()}; }

HsiCube HsiCube::from_vector(std::size_t height, std::size_t width,
                             std::vector<double> wavelengths_nm, std::span<const double> values,
                             std::string name) {
  std::vector<float> data(values.size());
  std::transform(values.begin(), values.end(), data.begin(),
                 [](double v) { return static_cast<float>(v); });
  return HsiCube(height, width, std::move(wavelengths_nm), std::move(data), std::move(name));
}

std::string encode_hsib(const HsiCube& cube) {
  ordered_json header;
  header["height"] = cube.height();
  header["width"] = cube.width();
  header["bands"] = cube.bands();
  header["wavelengths_nm"] = cube.wavelengths_nm();
  header["scale"] = cube.scale();
  header["layout"] = "band-major";
  header["dtype"] = "f32le";
  header["name"] = cube.name();
  const std::string text = header.dump();

  std::string out;
  out.reserve(kPreamble + text.size() + 4 * cube.voxel_count());
  out.append(kMagic, sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (float v : cube.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

HsiCube decode_hsib(std::string_view bytes) {
  if (bytes.size() < kPreamble) {
    throw FormatError("file of " + std::to_string(bytes.size()) + " bytes is shorter than the preamble",
                      bytes.size());
  }
  if (bytes.substr(0, sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) {
    throw FormatError("bad magic, expected \"HSIB\\x01\"", 0);
  }
  const std::size_t header_len = get_u32(bytes, 5);
  if (kPreamble + header_len > bytes.size()) {
    throw FormatError("header length " + std::to_string(header_len) + " runs past end of file", 5);
  }

  ordered_json header;
  try {
    header = ordered_json::parse(bytes.substr(kPreamble, header_len));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("header is not valid JSON: ") + e.what(), kPreamble + e.byte);
  }

  std::size_t height = 0, width = 0, bands = 0;
  std::vector<double> wavelengths;
  double scale = 1.0;
  std::string name;
  try {
    height = header.at("height").get<std::size_t>();
    width = header.at("width").get<std::size_t>();
    bands = header.at("bands").get<std::size_t>();
    wavelengths = header.at("wavelengths_nm").get<std::vector<double>>();
    scale = header.at("scale").get<double>();
    name = header.value("name", std::string{});
    if (header.at("layout").get<std::string>() != "band-major") {
      throw FormatError("unsupported layout", kPreamble);
    }
    if (header.at("dtype").get<std::string>() != "f32le") {
      throw FormatError("unsupported dtype", kPreamble);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what(), kPreamble);
  }
  if (wavelengths.size() != bands) {
    throw FormatError("header lists " + std::to_string(wavelengths.size()) + " wavelengths for " +
                          std::to_string(bands) + " bands",
                      kPreamble);
  }
  for (std::size_t i = 1; i < wavelengths.size(); ++i) {
    if (!(wavelengths[i] > wavelengths[i - 1])) {
      throw FormatError("wavelengths are not strictly ascending", kPreamble);
    }
  }
  if (bands == 0 || height == 0 || width == 0) throw FormatError("empty cube dimensions", kPreamble);
  if (!(scale > 0.0) || !std::isfinite(scale)) throw FormatError("scale must be positive", kPreamble);

  const std::size_t payload_offset = kPreamble + header_len;
  const std::size_t count = height * width * bands;
  const std::size_t expected = 4 * count;
  const std::size_t actual = bytes.size() - payload_offset;
  if (actual != expected) {
    throw FormatError("payload length mismatch: expected " + std::to_string(expected) +
                          " bytes, got " + std::to_string(actual),
                      payload_offset);
  }

  std::vector<float> data(count);
  float max_abs = 0.0f;
  for (std::size_t i = 0; i < count; ++i) {
    const float v = std::bit_cast<float>(get_u32(bytes, payload_offset + 4 * i));
    if (!std::isfinite(v)) throw FormatError("non-finite payload value", payload_offset + 4 * i);
    data[i] = v;
    max_abs = std::max(max_abs, std::abs(v));
  }
  if (max_abs > 1.0f) {
    const double m = max_abs;
    for (auto& v : data) v = static_cast<float>(static_cast<double>(v) / m);
    scale *= m;
  }
  return HsiCube(height, width, std::move(wavelengths), std::move(data), std::move(name), scale);
}

void store_hsib(const HsiCube& cube, const std::filesystem::path& path) {
  atomic_write(path, encode_hsib(cube));
}

HsiCube load_hsib(const std::filesystem::path& path) { return decode_hsib(read_file(path)); }

HsiCube select_bands(const HsiCube& cube, double lo_nm, double hi_nm) {
  if (lo_nm > hi_nm) throw InvalidParameter("band selection lower bound exceeds upper bound");
  constexpr double eps = 1e-9;
  std::vector<std::size_t> keep;
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    const double w = cube.wavelengths_nm()[b];
    if (w >= lo_nm - eps && w <= hi_nm + eps) keep.push_back(b);
  }
  if (keep.empty()) {
    throw InvalidParameter("no band of '" + cube.name() + "' lies in [" + std::to_string(lo_nm) +
                           ", " + std::to_string(hi_nm) + "] nm");
  }
  std::vector<double> wl;
  std::vector<float> data;
  data.reserve(keep.size() * cube.height() * cube.width());
  for (std::size_t b : keep) {
    wl.push_back(cube.wavelengths_nm()[b]);
    auto src = cube.band(b);
    data.insert(data.end(), src.begin(), src.end());
  }
  return HsiCube(cube.height(), cube.width(), std::move(wl), std::move(data), cube.name(),
                 cube.scale());
}

std::pair<std::size_t, std::size_t> slice_grid(std::size_t height, std::size_t width,
                                               const SliceSpec& spec) {
  if (spec.size < 1 || spec.stride < 1) throw InvalidParameter("slice size and stride must be >= 1");
  if (height < spec.size || width < spec.size) return {0, 0};
  return {(height - spec.size) / spec.stride + 1, (width - spec.size) / spec.stride + 1};
}

std::vector<HsiCube> slice(const HsiCube& cube, const SliceSpec& spec) {
  const auto [nr, nc] = slice_grid(cube.height(), cube.width(), spec);
  std::vector<HsiCube> out;
  if (nr == 0 || nc == 0) {
    log::warn("cube '" + cube.name() + "' (" + std::to_string(cube.height()) + "x" +
              std::to_string(cube.width()) + ") is smaller than slice size " +
              std::to_string(spec.size) + "; no slices produced");
    return out;
  }
  out.reserve(nr * nc);
  const std::size_t s = spec.size;
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nc; ++j) {
      std::vector<float> data(s * s * cube.bands());
      for (std::size_t b = 0; b < cube.bands(); ++b) {
        for (std::size_t r = 0; r < s; ++r) {
          for (std::size_t c = 0; c < s; ++c) {
            data[(b * s + r) * s + c] = cube.at(b, i * spec.stride + r, j * spec.stride + c);
          }
        }
      }
      out.emplace_back(s, s, cube.wavelengths_nm(), std::move(data),
                       cube.name() + "_s" + std::to_string(i * nc + j), cube.scale());
    }
  }
  return out;
}

const char* to_string(Role role) {
  switch (role) {
    case Role::train: return "train";
    case Role::val: return "val";
    case Role::test: return "test";
  }
  return "?";
}

Role role_from_string(std::string_view name) {
  if (name == "train") return Role::train;
  if (name == "val") return Role::val;
  if (name == "test") return Role::test;
  throw InvalidParameter("unknown dataset role '" + std::string(name) + "'");
}

DatasetManifest split(const DatasetManifest& manifest, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidParameter("split fraction must be in (0, 1)");

  struct Unit {
    std::size_t path_index;
    std::size_t slice;
  };
  std::vector<std::string> paths;
  std::map<std::string, std::size_t> path_index;
  std::vector<Unit> units;
  std::vector<ManifestEntry> tests;
  for (const auto& e : manifest.entries) {
    if (e.role == Role::test) {
      tests.push_back(e);
      continue;
    }
    auto [it, inserted] = path_index.try_emplace(e.cube_path, paths.size());
    if (inserted) paths.push_back(e.cube_path);
    for (std::size_t s : e.slice_indices) units.push_back({it->second, s});
  }
  // Canonical order so the result depends only on the set of slices.
  std::sort(units.begin(), units.end(), [](const Unit& a, const Unit& b) {
    return a.path_index != b.path_index ? a.path_index < b.path_index : a.slice < b.slice;
  });
  units.erase(std::unique(units.begin(), units.end(),
                          [](const Unit& a, const Unit& b) {
                            return a.path_index == b.path_index && a.slice == b.slice;
                          }),
              units.end());

  std::mt19937_64 rng(seed);
  std::shuffle(units.begin(), units.end(), rng);
  const double raw = fraction * static_cast<double>(units.size());
  const auto n_train = std::min(units.size(), static_cast<std::size_t>(std::ceil(raw - 1e-9)));

  std::vector<ManifestEntry> train(paths.size()), val(paths.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    auto& bucket = i < n_train ? train : val;
    bucket[units[i].path_index].slice_indices.push_back(units[i].slice);
  }

  DatasetManifest out;
  out.seed = seed;
  out.split_fraction = fraction;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    for (auto [entries, role] : {std::pair{&train, Role::train}, std::pair{&val, Role::val}}) {
      auto& e = (*entries)[p];
      if (e.slice_indices.empty()) continue;
      std::sort(e.slice_indices.begin(), e.slice_indices.end());
      e.cube_path = paths[p];
      e.role = role;
      out.entries.push_back(std::move(e));
    }
  }
  for (auto& t : tests) out.entries.push_back(std::move(t));
  return out;
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  ordered_json j;
  j["seed"] = manifest.seed;
  j["split_fraction"] = manifest.split_fraction;
  j["entries"] = ordered_json::array();
  for (const auto& e : manifest.entries) {
    ordered_json je;
    je["cube_path"] = e.cube_path;
    je["role"] = to_string(e.role);
    je["slice_indices"] = e.slice_indices;
    j["entries"].push_back(std::move(je));
  }
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(std::string_view text) {
  try {
    const auto j = ordered_json::parse(text);
    DatasetManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.split_fraction = j.at("split_fraction").get<double>();
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.cube_path = je.at("cube_path").get<std::string>();
      e.role = role_from_string(je.at("role").get<std::string>());
      e.slice_indices = je.at("slice_indices").get<std::vector<std::size_t>>();
      m.entries.push_back(std::move(e));
    }
    return m;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what(), e.byte);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what(), 0);
  }
}

void store_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  atomic_write(path, manifest_to_json(manifest));
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  return manifest_from_json(read_file(path));
}

}  // namespace gisc::hsi
