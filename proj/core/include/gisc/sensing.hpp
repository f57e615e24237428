#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gisc/grid.hpp"
#include "gisc/hsi.hpp"
#include "gisc/optics.hpp"

namespace gisc::sensing {

// Reference speckle patterns, one per wavelength, each pattern_size() square.
// The column of Phi for object voxel (band b, row r, col c) is the window of
// pattern b starting at (mag * (n-1-r), mag * (n-1-c)), which keeps every
// shifted copy inside the reference pattern.
struct CalibrationSet {
  std::vector<optics::SpecklePattern> reference_patterns;
  std::vector<double> wavelengths_nm;
  int magnification = 2;
  std::size_t n = 0;
  std::size_t m = 0;

  // Provenance, hashed into the operator fingerprint.
  std::uint64_t screen_seed = 0;
  optics::ScreenParams screen;
  optics::Geometry geometry;
  std::optional<double> gamma;

  std::size_t bands() const noexcept { return wavelengths_nm.size(); }
  std::size_t pattern_size() const {
    return reference_patterns.empty() ? 0 : reference_patterns.front().intensity.rows();
  }
  // Phi entry for voxel (band, row, col) at detector pixel (i, j).
  double column_value(std::size_t band, std::size_t row, std::size_t col, std::size_t i,
                      std::size_t j) const;
};

// Smallest reference pattern side covering an m x m detector for an n x n object.
std::size_t required_pattern_size(std::size_t n, std::size_t m, int magnification);

// One on-axis reference per wavelength. geometry.detector_size is the detector
// side m; the patterns themselves are required_pattern_size(n, m, mag) wide.
CalibrationSet calibrate(const optics::PhaseScreen& screen, const optics::Geometry& geometry,
                         const std::vector<double>& wavelengths_nm, std::size_t n,
                         std::optional<double> super_rayleigh_gamma = std::nullopt);

enum class Mode { dense, convolutional };
enum class ColumnNorm { none, unit_l2 };

const char* to_string(Mode mode);
const char* to_string(ColumnNorm norm);
ColumnNorm column_norm_from_string(std::string_view name);

inline constexpr std::size_t kDefaultMemoryCap = std::size_t{2} << 30;  // 2 GiB

// Phi in R^{mm x nnB}; x is band-major, row-major within band, y is row-major.
class SensingOperator {
 public:
  static SensingOperator dense(const CalibrationSet& calib, std::size_t m,
                               ColumnNorm norm = ColumnNorm::none,
                               std::size_t memory_cap_bytes = kDefaultMemoryCap);
  static SensingOperator convolutional(const CalibrationSet& calib, std::size_t m,
                                       ColumnNorm norm = ColumnNorm::none);
  // Dense up to n = 32 when it fits the memory cap, convolutional otherwise.
  static SensingOperator automatic(const CalibrationSet& calib, std::size_t m,
                                   ColumnNorm norm = ColumnNorm::none);

  Mode mode() const noexcept { return mode_; }
  ColumnNorm column_norm() const noexcept { return norm_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t rows() const noexcept { return m_ * m_; }
  std::size_t cols() const noexcept { return n_ * n_ * bands_; }
  const std::vector<double>& wavelengths_nm() const noexcept { return wavelengths_; }

  // mm / nnB, exactly and as a reduced fraction.
  double sampling_rate() const;
  std::pair<std::size_t, std::size_t> sampling_ratio() const;

  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

  void forward(std::span<const double> x, std::span<double> y) const;
  void adjoint(std::span<const double> y, std::span<double> x) const;
  std::vector<double> forward(std::span<const double> x) const;
  std::vector<double> adjoint(std::span<const double> y) const;

  // Row-major mm x nnB matrix; empty in convolutional mode.
  const std::vector<double>& dense_matrix() const noexcept { return matrix_; }
  // Column norms of the unnormalized matrix.
  const std::vector<double>& column_norms() const noexcept { return column_norms_; }

 private:
  SensingOperator() = default;
  void init_common(const CalibrationSet& calib, std::size_t m, ColumnNorm norm);

  Mode mode_ = Mode::dense;
  ColumnNorm norm_ = ColumnNorm::none;
  std::size_t n_ = 0, m_ = 0, bands_ = 0;
  int magnification_ = 1;
  std::vector<double> wavelengths_;
  std::uint64_t fingerprint_ = 0;
  std::vector<double> column_norms_;
  std::vector<double> inv_norms_;

  std::vector<double> matrix_;

  std::size_t fft_size_ = 0;
  std::vector<ComplexGrid> pattern_spectra_;
};

std::uint64_t operator_fingerprint(const CalibrationSet& calib, std::size_t m, ColumnNorm norm);

enum class NoiseKind { none, additive_gaussian };
const char* to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(std::string_view name);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double target_snr_db = 40.0;
};

struct Measurement {
  RealGrid image;  // m x m
  NoiseSpec noise;
  std::uint64_t seed = 0;
  std::uint64_t operator_fingerprint = 0;
};

// y = Phi x + e. Gaussian noise is rescaled so that ||Phi x||^2 / ||e||^2
// equals the target SNR exactly; a zero signal gets no noise.
Measurement forward(const SensingOperator& op, const hsi::HsiCube& x, const NoiseSpec& noise,
                    std::uint64_t seed);
Measurement forward(const SensingOperator& op, std::span<const double> x, const NoiseSpec& noise,
                    std::uint64_t seed);
std::vector<double> adjoint(const SensingOperator& op, const Measurement& y);

// Empirical 10 log10(||clean||^2 / ||noisy - clean||^2).
double measured_snr_db(std::span<const double> clean, std::span<const double> noisy);

// Quadrants in the order top-left, top-right, bottom-left, bottom-right.
using PatchStack = std::array<RealGrid, 4>;
PatchStack reshape_measurement(const RealGrid& y);
RealGrid assemble_measurement(const PatchStack& patches);

}  // namespace gisc::sensing
