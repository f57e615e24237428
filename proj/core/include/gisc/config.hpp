#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gisc/hsi.hpp"
#include "gisc/optics.hpp"
#include "gisc/recon.hpp"
#include "gisc/sensing.hpp"

namespace gisc::config {

// A value of the TOML subset: booleans, integers, floats, basic strings and
// flat arrays of those.
struct Value {
  enum class Kind { boolean, integer, real, string, array };
  Kind kind = Kind::string;
  bool b = false;
  std::int64_t i = 0;
  double d = 0.0;
  std::string s;
  std::vector<Value> items;

  double as_real(const std::string& key) const;
  std::int64_t as_int(const std::string& key) const;
  bool as_bool(const std::string& key) const;
  const std::string& as_string(const std::string& key) const;
  std::vector<std::string> as_strings(const std::string& key) const;
};

// Keys are "section.key", or "key" before the first section header.
using Table = std::map<std::string, Value>;

// Parses `key = value` lines, `[section]` headers and `#` comments. Throws
// ConfigError naming the line on malformed input or duplicate keys.
Table parse_toml(std::string_view text);

// Parses a single right-hand side, e.g. from `--set key=value`. Bare words
// that are not numbers or booleans are taken as strings.
Value parse_value(std::string_view text);

struct SensingBlock {
  std::size_t n = 16;
  std::size_t m = 32;
  double band_lo_nm = 560.0;
  double band_hi_nm = 700.0;
  double band_step_nm = 10.0;
  sensing::Mode mode = sensing::Mode::dense;
  bool automatic_mode = true;
  sensing::ColumnNorm normalization = sensing::ColumnNorm::none;
  sensing::NoiseSpec noise{sensing::NoiseKind::additive_gaussian, 30.0};

  std::vector<double> wavelengths_nm() const;
};

struct OpticsBlock {
  optics::ScreenParams screen;
  optics::Geometry geometry;
  std::optional<double> gamma = 2.0;  // nullopt: no super-Rayleigh variant
};

struct DatasetBlock {
  std::vector<std::filesystem::path> inputs;       // train/val cubes
  std::vector<std::filesystem::path> test_inputs;  // held out as test
  // Scenes generated in memory when inputs is empty.
  std::size_t synthetic_count = 0;
  std::size_t synthetic_size = 64;
  hsi::SliceSpec slice{144, 144};
  double split_fraction = 0.9;
};

struct ExperimentConfig {
  std::uint64_t seed = 42;
  std::size_t workers = 1;
  std::filesystem::path out_dir = "gisc_out";
  OpticsBlock optics;
  SensingBlock sensing;
  recon::ReconConfig recon;
  std::vector<recon::Algorithm> algorithms{recon::Algorithm::gi, recon::Algorithm::dgi,
                                           recon::Algorithm::cs_fista};
  DatasetBlock dataset;

  // Checks ranges and that every dataset path exists. Throws ConfigError.
  void validate() const;
};

// Builds a config from a table; relative paths are resolved against base_dir.
// Unknown keys are rejected.
ExperimentConfig from_table(const Table& table, const std::filesystem::path& base_dir = {});
ExperimentConfig load(const std::filesystem::path& path);

// Applies one "section.key=value" override on top of a parsed config.
void apply_override(Table& table, std::string_view assignment);

// Canonical text of every setting that affects results (not workers or the
// output directory), and its FNV-1a hash.
std::string canonical_text(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace gisc::config
