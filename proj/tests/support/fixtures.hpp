#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gisc/optics.hpp"
#include "gisc/sensing.hpp"
#include "gisc/synthetic.hpp"

namespace gisc::testing {

// Calibration for an n x n object with `bands` wavelengths spread over
// 560..700 nm and an m x m detector, on the default screen.
inline sensing::CalibrationSet make_calibration(std::size_t n, std::size_t bands, std::size_t m,
                                                std::uint64_t seed = 11,
                                                std::optional<double> gamma = std::nullopt) {
  const auto screen = optics::make_phase_screen(seed, optics::ScreenParams{});
  optics::Geometry geometry;
  geometry.detector_size = m;
  const double step = bands > 1 ? 140.0 / static_cast<double>(bands - 1) : 10.0;
  const auto wl = bands > 1 ? synthetic::wavelength_grid(560.0, 700.0, step) : std::vector<double>{600.0};
  return sensing::calibrate(screen, geometry, wl, n, gamma);
}

inline std::vector<double> random_vector(std::size_t size, std::uint64_t seed, double lo = -1.0,
                                         double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(size);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(e) / norm(b);
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gisc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace gisc::testing
