#include "gisc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gisc/error.hpp"

namespace gisc::synthetic {

std::vector<double> wavelength_grid(double lo_nm, double hi_nm, double step_nm) {
  if (!(step_nm > 0.0) || hi_nm < lo_nm) throw InvalidParameter("bad wavelength grid");
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::floor((hi_nm - lo_nm) / step_nm + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) out.push_back(lo_nm + step_nm * static_cast<double>(i));
  return out;
}

hsi::HsiCube make_scene(std::uint64_t seed, std::size_t height, std::size_t width,
                        const std::vector<double>& wavelengths_nm) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double lo = wavelengths_nm.front();
  const double hi = wavelengths_nm.back();
  const double span = std::max(hi - lo, 1.0);

  auto random_spectrum = [&](double amplitude) {
    const int lobes = 1 + static_cast<int>(u(rng) * 2.0);
    std::vector<double> s(wavelengths_nm.size(), 0.0);
    for (int k = 0; k < lobes; ++k) {
      const double centre = lo - 0.2 * span + 1.4 * span * u(rng);
      const double width_nm = 0.25 * span + 0.5 * span * u(rng);
      const double a = 0.4 + 0.6 * u(rng);
      for (std::size_t b = 0; b < s.size(); ++b) {
        const double d = (wavelengths_nm[b] - centre) / width_nm;
        s[b] += a * std::exp(-0.5 * d * d);
      }
    }
    const double peak = *std::max_element(s.begin(), s.end());
    for (auto& v : s) v *= amplitude / std::max(peak, 1e-12);
    return s;
  };

  hsi::HsiCube cube(height, width, wavelengths_nm, "synthetic");
  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);

  // Background: linear shading times a smooth spectrum.
  const auto bg = random_spectrum(0.15 + 0.1 * u(rng));
  const double gx = u(rng) - 0.5;
  const double gy = u(rng) - 0.5;
  std::vector<double> acc(cube.voxel_count(), 0.0);
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    for (std::size_t r = 0; r < height; ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        const double shade = 1.0 + gx * (static_cast<double>(c) / w - 0.5) +
                             gy * (static_cast<double>(r) / h - 0.5);
        acc[(b * height + r) * width + c] = bg[b] * shade;
      }
    }
  }

  const int objects = 3 + static_cast<int>(u(rng) * 4.0);
  for (int k = 0; k < objects; ++k) {
    const auto spectrum = random_spectrum(0.4 + 0.6 * u(rng));
    const bool disc = u(rng) < 0.5;
    const double cr = h * u(rng);
    const double cc = w * u(rng);
    const double ar = h * (0.1 + 0.25 * u(rng));
    const double ac = w * (0.1 + 0.25 * u(rng));
    for (std::size_t r = 0; r < height; ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        const double dr = (static_cast<double>(r) - cr) / ar;
        const double dc = (static_cast<double>(c) - cc) / ac;
        const bool inside = disc ? dr * dr + dc * dc <= 1.0 : std::abs(dr) <= 1.0 && std::abs(dc) <= 1.0;
        if (!inside) continue;
        for (std::size_t b = 0; b < cube.bands(); ++b) {
          auto& v = acc[(b * height + r) * width + c];
          v = 0.3 * v + spectrum[b];  // occluding object
        }
      }
    }
  }

  const double peak = *std::max_element(acc.begin(), acc.end());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    cube.data()[i] = static_cast<float>(std::clamp(acc[i] / peak, 0.0, 1.0));
  }
  return cube;
}

hsi::HsiCube make_sparse(std::uint64_t seed, std::size_t height, std::size_t width,
                         const std::vector<double>& wavelengths_nm, double density) {
  if (!(density >= 0.0 && density <= 1.0)) throw InvalidParameter("density must be in [0, 1]");
  hsi::HsiCube cube(height, width, wavelengths_nm, "sparse");
  std::vector<std::size_t> idx(cube.voxel_count());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto k = static_cast<std::size_t>(std::llround(density * static_cast<double>(idx.size())));
  std::uniform_real_distribution<double> u(0.2, 1.0);
  for (std::size_t i = 0; i < k; ++i) cube.data()[idx[i]] = static_cast<float>(u(rng));
  return cube;
}

}  // namespace gisc::synthetic
