#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "gisc/grid.hpp"

namespace gisc::optics {

// Thin random phase modulator: a Gaussian random surface with Gaussian
// autocorrelation. heights() has zero mean and unit variance; the physical
// height is heights() * rms_height_um.
class PhaseScreen {
 public:
  PhaseScreen(RealGrid heights, double pitch_um, double correlation_length_um,
              double refractive_delta, double rms_height_um, std::uint64_t seed);

  const RealGrid& heights() const noexcept { return heights_; }
  std::size_t size() const noexcept { return heights_.rows(); }
  double pitch_um() const noexcept { return pitch_um_; }
  double correlation_length_um() const noexcept { return correlation_length_um_; }
  double refractive_delta() const noexcept { return refractive_delta_; }
  double rms_height_um() const noexcept { return rms_height_um_; }
  std::uint64_t seed() const noexcept { return seed_; }

  // Phase delay 2*pi*delta_n*h/lambda at one grid point.
  double phase(std::size_t r, std::size_t c, double wavelength_nm) const;

 private:
  RealGrid heights_;
  double pitch_um_;
  double correlation_length_um_;
  double refractive_delta_;
  double rms_height_um_;
  std::uint64_t seed_;
};

struct ScreenParams {
  std::size_t size = 512;
  double pitch_um = 8.0;
  double correlation_length_um = 40.0;
  double refractive_delta = 0.5;
  double rms_height_um = 1.2;
};

// White Gaussian noise filtered by a Gaussian kernel whose autocorrelation
// falls to 1/e at correlation_length_um, then standardized. Requires
// size >= 16 and correlation_length_um >= pitch_um.
PhaseScreen make_phase_screen(std::uint64_t seed, const ScreenParams& params);
PhaseScreen make_phase_screen(std::uint64_t seed, std::size_t size, double pitch_um,
                              double correlation_length_um);

struct ComplexField {
  ComplexGrid values;
  double pitch_um = 1.0;
  double wavelength_nm = 0.0;

  RealGrid re() const;
  RealGrid im() const;
  double energy() const;
};

// Angular-spectrum free-space propagation with evanescent components
// removed. Non power-of-two grids are zero-padded to the next power of two
// and cropped back. distance 0 returns the field unchanged.
ComplexField propagate(const ComplexField& field, double distance_um);

enum class SpeckleKind { rayleigh, super_rayleigh };

struct StatisticsTag {
  SpeckleKind kind = SpeckleKind::rayleigh;
  double gamma = 1.0;

  static StatisticsTag rayleigh() { return {}; }
  static StatisticsTag super_rayleigh(double g) { return {SpeckleKind::super_rayleigh, g}; }
  friend bool operator==(const StatisticsTag&, const StatisticsTag&) = default;
};

const char* to_string(SpeckleKind kind);
SpeckleKind speckle_kind_from_string(std::string_view name);

struct SpecklePattern {
  RealGrid intensity;
  double wavelength_nm = 0.0;
  StatisticsTag tag;
};

struct SpeckleStats {
  double mean = 0.0;
  double stddev = 0.0;
  double contrast = 0.0;
  std::size_t sample_count = 0;
};

struct Geometry {
  double distance_um = 20000.0;
  std::size_t detector_size = 512;
  // Object-plane pixel to detector pixel scale; integral so that shifted
  // calibration patterns land on the detector grid.
  int magnification = 2;
  double band_lo_nm = 400.0;
  double band_hi_nm = 1000.0;
};

struct SourceOffset {
  double dx = 0.0;  // object-plane pixels, along columns
  double dy = 0.0;  // object-plane pixels, along rows
};

// Detector intensity for a monochromatic point source. The source tilt is
// applied in the spectral domain (shifted transfer function), which is the
// exact periodic-screen solution. The detector is the centred
// detector_size window. Offsets beyond 10% of the screen size throw
// OutOfMemoryEffect.
SpecklePattern speckle_from_point_source(const PhaseScreen& screen, SourceOffset offset,
                                         double wavelength_nm, const Geometry& geometry);

// Mean-preserving power law I -> c * I^gamma.
SpecklePattern to_super_rayleigh(const SpecklePattern& pattern, double gamma);

SpeckleStats contrast(const SpecklePattern& pattern);
SpeckleStats contrast(std::span<const double> intensities);

}  // namespace gisc::optics
