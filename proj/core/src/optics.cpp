#include "gisc/optics.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "gisc/error.hpp"
#include "gisc/fft.hpp"

namespace gisc::optics {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double frequency(std::size_t k, std::size_t n, double pitch) {
  // FFT bin k -> cycles per unit length, negative frequencies in the upper half
  const long kk = k <= n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
  return static_cast<double>(kk) / (static_cast<double>(n) * pitch);
}

// Multiplies a spectrum by the angular-spectrum transfer function evaluated
// at (fx + tilt_x, fy + tilt_y).
void apply_transfer(ComplexGrid& spectrum, double pitch_um, double wavelength_um,
                    double distance_um, double tilt_fx, double tilt_fy) {
  const std::size_t rows = spectrum.rows();
  const std::size_t cols = spectrum.cols();
  const double inv_lambda_sq = 1.0 / (wavelength_um * wavelength_um);
  for (std::size_t r = 0; r < rows; ++r) {
    const double fy = frequency(r, rows, pitch_um) + tilt_fy;
    for (std::size_t c = 0; c < cols; ++c) {
      const double fx = frequency(c, cols, pitch_um) + tilt_fx;
      const double arg = inv_lambda_sq - fx * fx - fy * fy;
      if (arg <= 0.0) {
        spectrum(r, c) = 0.0;
      } else {
        const double phase = kTwoPi * distance_um * std::sqrt(arg);
        spectrum(r, c) *= std::complex<double>(std::cos(phase), std::sin(phase));
      }
    }
  }
}

void check_wavelength(double wavelength_nm) {
  if (!(wavelength_nm > 0.0) || !std::isfinite(wavelength_nm)) {
    throw InvalidParameter("wavelength must be positive, got " + std::to_string(wavelength_nm));
  }
}

}  // namespace

PhaseScreen::PhaseScreen(RealGrid heights, double pitch_um, double correlation_length_um,
                         double refractive_delta, double rms_height_um, std::uint64_t seed)
    : heights_(std::move(heights)),
      pitch_um_(pitch_um),
      correlation_length_um_(correlation_length_um),
      refractive_delta_(refractive_delta),
      rms_height_um_(rms_height_um),
      seed_(seed) {
  if (heights_.rows() != heights_.cols()) throw ShapeError("phase screen must be square");
}

double PhaseScreen::phase(std::size_t r, std::size_t c, double wavelength_nm) const {
  return kTwoPi * refractive_delta_ * rms_height_um_ * heights_(r, c) / (wavelength_nm * 1e-3);
}

PhaseScreen make_phase_screen(std::uint64_t seed, const ScreenParams& p) {
  if (p.size < 16) throw InvalidParameter("screen size must be at least 16, got " + std::to_string(p.size));
  if (!(p.pitch_um > 0.0)) throw InvalidParameter("pitch must be positive");
  if (p.correlation_length_um < p.pitch_um) {
    throw InvalidParameter("correlation length must be at least one pitch");
  }
  if (!(p.rms_height_um > 0.0) || !(p.refractive_delta > 0.0)) {
    throw InvalidParameter("rms height and refractive delta must be positive");
  }

  const std::size_t n = p.size;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RealGrid noise(n, n);
  for (auto& v : noise.values()) v = normal(rng);

  // Kernel exp(-2 r^2 / l^2) has transfer function exp(-pi^2 l^2 f^2 / 2), so
  // the filtered field has autocorrelation exp(-r^2 / l^2).
  ComplexGrid spectrum = fft::forward_real(noise);
  const double l = p.correlation_length_um;
  const double k = std::numbers::pi * std::numbers::pi * l * l / 2.0;
  for (std::size_t r = 0; r < spectrum.rows(); ++r) {
    const double fy = frequency(r, n, p.pitch_um);
    for (std::size_t c = 0; c < spectrum.cols(); ++c) {
      const double fx = static_cast<double>(c) / (static_cast<double>(n) * p.pitch_um);
      spectrum(r, c) *= std::exp(-k * (fx * fx + fy * fy));
    }
  }
  RealGrid h = fft::inverse_real(spectrum, n);

  double mean = 0.0;
  for (double v : h.values()) mean += v;
  mean /= static_cast<double>(h.size());
  double var = 0.0;
  for (auto& v : h.values()) {
    v -= mean;
    var += v * v;
  }
  var /= static_cast<double>(h.size());
  const double inv_sd = 1.0 / std::sqrt(var);
  for (auto& v : h.values()) v *= inv_sd;

  return PhaseScreen(std::move(h), p.pitch_um, p.correlation_length_um, p.refractive_delta,
                     p.rms_height_um, seed);
}

PhaseScreen make_phase_screen(std::uint64_t seed, std::size_t size, double pitch_um,
                              double correlation_length_um) {
  ScreenParams p;
  p.size = size;
  p.pitch_um = pitch_um;
  p.correlation_length_um = correlation_length_um;
  return make_phase_screen(seed, p);
}

RealGrid ComplexField::re() const {
  RealGrid out(values.rows(), values.cols());
  for (std::size_t i = 0; i < values.size(); ++i) out.values()[i] = values.values()[i].real();
  return out;
}

RealGrid ComplexField::im() const {
  RealGrid out(values.rows(), values.cols());
  for (std::size_t i = 0; i < values.size(); ++i) out.values()[i] = values.values()[i].imag();
  return out;
}

double ComplexField::energy() const {
  double e = 0.0;
  for (const auto& v : values.values()) e += std::norm(v);
  return e;
}

ComplexField propagate(const ComplexField& field, double distance_um) {
  check_wavelength(field.wavelength_nm);
  if (!(field.pitch_um > 0.0)) throw InvalidParameter("pitch must be positive");
  if (field.values.empty()) throw ShapeError("cannot propagate an empty field");
  if (distance_um == 0.0) return field;

  const std::size_t rows = field.values.rows();
  const std::size_t cols = field.values.cols();
  const bool padded = !is_power_of_two(rows) || !is_power_of_two(cols);
  ComplexGrid work = padded ? ComplexGrid(next_power_of_two(rows), next_power_of_two(cols))
                            : field.values;
  if (padded) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) work(r, c) = field.values(r, c);
    }
  }

  fft::forward(work);
  apply_transfer(work, field.pitch_um, field.wavelength_nm * 1e-3, distance_um, 0.0, 0.0);
  fft::inverse(work);

  ComplexField out{padded ? work.crop(0, 0, rows, cols) : std::move(work), field.pitch_um,
                   field.wavelength_nm};
  return out;
}

const char* to_string(SpeckleKind kind) {
  return kind == SpeckleKind::rayleigh ? "rayleigh" : "super_rayleigh";
}

SpeckleKind speckle_kind_from_string(std::string_view name) {
  if (name == "rayleigh") return SpeckleKind::rayleigh;
  if (name == "super_rayleigh") return SpeckleKind::super_rayleigh;
  throw InvalidParameter("unknown speckle kind '" + std::string(name) + "'");
}

SpecklePattern speckle_from_point_source(const PhaseScreen& screen, SourceOffset offset,
                                         double wavelength_nm, const Geometry& geometry) {
  check_wavelength(wavelength_nm);
  if (wavelength_nm < geometry.band_lo_nm || wavelength_nm > geometry.band_hi_nm) {
    throw InvalidParameter("wavelength " + std::to_string(wavelength_nm) +
                           " nm outside the configured band");
  }
  const std::size_t n = screen.size();
  if (geometry.detector_size == 0 || geometry.detector_size > n) {
    throw InvalidParameter("detector size must be in [1, screen size]");
  }
  if (geometry.magnification < 1) throw InvalidParameter("magnification must be >= 1");
  if (!(geometry.distance_um > 0.0)) throw InvalidParameter("distance must be positive");
  const double limit = 0.1 * static_cast<double>(n);
  if (std::abs(offset.dx) > limit || std::abs(offset.dy) > limit) {
    throw OutOfMemoryEffect("source offset (" + std::to_string(offset.dx) + ", " +
                            std::to_string(offset.dy) + ") exceeds 10% of the screen size");
  }

  ComplexGrid field(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double phi = screen.phase(r, c, wavelength_nm);
      field(r, c) = {std::cos(phi), std::sin(phi)};
    }
  }

  // A point source displaced by d object pixels illuminates the screen with a
  // plane wave whose direction moves the pattern by magnification * d on the
  // detector.
  const double lambda_um = wavelength_nm * 1e-3;
  const double z = geometry.distance_um;
  const double sx = geometry.magnification * offset.dx * screen.pitch_um();
  const double sy = geometry.magnification * offset.dy * screen.pitch_um();
  const double norm = std::sqrt(sx * sx + sy * sy + z * z);
  const double tilt_fx = sx / (norm * lambda_um);
  const double tilt_fy = sy / (norm * lambda_um);

  fft::forward(field);
  apply_transfer(field, screen.pitch_um(), lambda_um, z, tilt_fx, tilt_fy);
  fft::inverse(field);

  const std::size_t d = geometry.detector_size;
  const std::size_t origin = (n - d) / 2;
  SpecklePattern out;
  out.intensity = RealGrid(d, d);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) out.intensity(r, c) = std::norm(field(origin + r, origin + c));
  }
  out.wavelength_nm = wavelength_nm;
  out.tag = StatisticsTag::rayleigh();
  return out;
}

SpecklePattern to_super_rayleigh(const SpecklePattern& pattern, double gamma) {
  if (!(gamma > 1.0) || !std::isfinite(gamma)) {
    throw InvalidParameter("super-Rayleigh exponent must exceed 1, got " + std::to_string(gamma));
  }
  if (pattern.tag.kind != SpeckleKind::rayleigh) {
    throw InvalidParameter("super-Rayleigh transform expects a Rayleigh pattern");
  }
  if (pattern.intensity.empty()) throw ShapeError("empty speckle pattern");

  SpecklePattern out = pattern;
  double mean_in = 0.0;
  double mean_out = 0.0;
  for (auto& v : out.intensity.values()) {
    mean_in += v;
    v = std::pow(v, gamma);
    mean_out += v;
  }
  if (mean_out > 0.0) {
    const double scale = mean_in / mean_out;
    for (auto& v : out.intensity.values()) v *= scale;
  }
  out.tag = StatisticsTag::super_rayleigh(gamma);
  return out;
}

SpeckleStats contrast(std::span<const double> intensities) {
  if (intensities.empty()) throw ShapeError("contrast of an empty pattern");
  const double n = static_cast<double>(intensities.size());
  double mean = 0.0;
  for (double v : intensities) mean += v;
  mean /= n;
  if (mean == 0.0) {
    throw NumericError("speckle contrast undefined: mean intensity is zero (division by zero)");
  }
  double var = 0.0;
  for (double v : intensities) var += (v - mean) * (v - mean);
  var /= n;
  SpeckleStats s;
  s.mean = mean;
  s.stddev = std::sqrt(var);
  s.contrast = s.stddev / mean;
  s.sample_count = intensities.size();
  return s;
}

SpeckleStats contrast(const SpecklePattern& pattern) { return contrast(pattern.intensity.values()); }

}  // namespace gisc::optics
