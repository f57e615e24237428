#include "gisc/sensing.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>

#include "gisc/error.hpp"
#include "gisc/fft.hpp"
#include "gisc/hash.hpp"

namespace gisc::sensing {
namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_span(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + " has " + std::to_string(got) + " entries, expected " +
                     std::to_string(want));
  }
}

}  // namespace

double CalibrationSet::column_value(std::size_t band, std::size_t row, std::size_t col,
                                    std::size_t i, std::size_t j) const {
  const auto mag = static_cast<std::size_t>(magnification);
  return reference_patterns[band].intensity(i + mag * (n - 1 - row), j + mag * (n - 1 - col));
}

std::size_t required_pattern_size(std::size_t n, std::size_t m, int magnification) {
  return m + static_cast<std::size_t>(magnification) * (n - 1);
}

CalibrationSet calibrate(const optics::PhaseScreen& screen, const optics::Geometry& geometry,
                         const std::vector<double>& wavelengths_nm, std::size_t n,
                         std::optional<double> super_rayleigh_gamma) {
  if (wavelengths_nm.empty()) throw InvalidParameter("calibration needs at least one wavelength");
  for (std::size_t i = 1; i < wavelengths_nm.size(); ++i) {
    if (!(wavelengths_nm[i] > wavelengths_nm[i - 1])) {
      throw InvalidParameter("calibration wavelengths must be strictly increasing");
    }
  }
  if (n < 4) throw InvalidParameter("object side n must be at least 4");
  if (geometry.magnification < 1) throw InvalidParameter("magnification must be a positive integer");
  const std::size_t m = geometry.detector_size;
  if (m == 0) throw InvalidParameter("detector size must be positive");

  const std::size_t pattern = required_pattern_size(n, m, geometry.magnification);
  if (pattern > screen.size()) {
    throw ConfigError("screen of " + std::to_string(screen.size()) + " px cannot cover shifted " +
                      std::to_string(pattern) + " px reference patterns (n=" + std::to_string(n) +
                      ", m=" + std::to_string(m) + ", magnification=" +
                      std::to_string(geometry.magnification) + ")");
  }

  CalibrationSet calib;
  calib.wavelengths_nm = wavelengths_nm;
  calib.magnification = geometry.magnification;
  calib.n = n;
  calib.m = m;
  calib.screen_seed = screen.seed();
  calib.screen = {screen.size(), screen.pitch_um(), screen.correlation_length_um(),
                  screen.refractive_delta(), screen.rms_height_um()};
  calib.geometry = geometry;
  calib.gamma = super_rayleigh_gamma;

  optics::Geometry g = geometry;
  g.detector_size = pattern;
  for (double w : wavelengths_nm) {
    auto p = optics::speckle_from_point_source(screen, {}, w, g);
    if (super_rayleigh_gamma) p = optics::to_super_rayleigh(p, *super_rayleigh_gamma);
    calib.reference_patterns.push_back(std::move(p));
  }
  return calib;
}

const char* to_string(Mode mode) { return mode == Mode::dense ? "dense" : "convolutional"; }
const char* to_string(ColumnNorm norm) { return norm == ColumnNorm::none ? "none" : "unit_l2"; }

ColumnNorm column_norm_from_string(std::string_view name) {
  if (name == "none") return ColumnNorm::none;
  if (name == "unit_l2") return ColumnNorm::unit_l2;
  throw InvalidParameter("unknown column normalization '" + std::string(name) + "'");
}

std::uint64_t operator_fingerprint(const CalibrationSet& calib, std::size_t m, ColumnNorm norm) {
  std::string s = "gisc-operator-v1";
  auto add = [&s](const std::string& key, const std::string& value) {
    s += '|';
    s += key;
    s += '=';
    s += value;
  };
  add("screen_seed", std::to_string(calib.screen_seed));
  add("screen_size", std::to_string(calib.screen.size));
  add("pitch_um", fmt_double(calib.screen.pitch_um));
  add("corr_len_um", fmt_double(calib.screen.correlation_length_um));
  add("refractive_delta", fmt_double(calib.screen.refractive_delta));
  add("rms_height_um", fmt_double(calib.screen.rms_height_um));
  add("distance_um", fmt_double(calib.geometry.distance_um));
  add("magnification", std::to_string(calib.magnification));
  add("n", std::to_string(calib.n));
  add("m", std::to_string(m));
  std::string wl;
  for (double w : calib.wavelengths_nm) wl += fmt_double(w) + ",";
  add("wavelengths_nm", wl);
  add("gamma", calib.gamma ? fmt_double(*calib.gamma) : "none");
  add("normalization", to_string(norm));
  return fnv1a64(s);
}

void SensingOperator::init_common(const CalibrationSet& calib, std::size_t m, ColumnNorm norm) {
  if (calib.reference_patterns.size() != calib.wavelengths_nm.size() || calib.bands() == 0) {
    throw InvalidParameter("calibration set is empty or inconsistent");
  }
  const std::size_t size = calib.pattern_size();
  for (const auto& p : calib.reference_patterns) {
    if (p.intensity.rows() != size || p.intensity.cols() != size) {
      throw ShapeError("reference patterns differ in size");
    }
    for (double v : p.intensity.values()) {
      if (!(v >= 0.0)) throw InvalidParameter("reference pattern has a negative or NaN intensity");
    }
  }
  if (m == 0) throw InvalidParameter("detector side m must be positive");
  if (required_pattern_size(calib.n, m, calib.magnification) > size) {
    throw ConfigError("reference patterns of " + std::to_string(size) + " px do not cover an m=" +
                      std::to_string(m) + " detector");
  }
  n_ = calib.n;
  m_ = m;
  bands_ = calib.bands();
  magnification_ = calib.magnification;
  wavelengths_ = calib.wavelengths_nm;
  norm_ = norm;
  fingerprint_ = operator_fingerprint(calib, m, norm);
}

SensingOperator SensingOperator::dense(const CalibrationSet& calib, std::size_t m, ColumnNorm norm,
                                       std::size_t memory_cap_bytes) {
  SensingOperator op;
  op.init_common(calib, m, norm);
  op.mode_ = Mode::dense;
  const std::size_t rows = op.rows();
  const std::size_t cols = op.cols();
  const long double bytes = static_cast<long double>(rows) * cols * sizeof(double);
  if (bytes > static_cast<long double>(memory_cap_bytes)) {
    throw CapacityError("dense " + std::to_string(rows) + "x" + std::to_string(cols) +
                        " operator needs " + std::to_string(static_cast<double>(bytes) / (1 << 30)) +
                        " GiB, above the " +
                        std::to_string(static_cast<double>(memory_cap_bytes) / (1 << 30)) +
                        " GiB cap; use convolutional mode");
  }

  op.matrix_.assign(rows * cols, 0.0);
  const std::size_t n = op.n_;
  for (std::size_t b = 0; b < op.bands_; ++b) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const std::size_t k = (b * n + r) * n + c;
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            op.matrix_[(i * m + j) * cols + k] = calib.column_value(b, r, c, i, j);
          }
        }
      }
    }
  }

  op.column_norms_.assign(cols, 0.0);
  for (std::size_t row = 0; row < rows; ++row) {
    const double* a = op.matrix_.data() + row * cols;
    for (std::size_t k = 0; k < cols; ++k) op.column_norms_[k] += a[k] * a[k];
  }
  for (auto& v : op.column_norms_) v = std::sqrt(v);
  if (norm == ColumnNorm::unit_l2) {
    op.inv_norms_.resize(cols);
    for (std::size_t k = 0; k < cols; ++k) {
      if (op.column_norms_[k] == 0.0) throw NumericError("zero-norm column in sensing matrix");
      op.inv_norms_[k] = 1.0 / op.column_norms_[k];
    }
    for (std::size_t row = 0; row < rows; ++row) {
      double* a = op.matrix_.data() + row * cols;
      for (std::size_t k = 0; k < cols; ++k) a[k] *= op.inv_norms_[k];
    }
  }
  return op;
}

SensingOperator SensingOperator::convolutional(const CalibrationSet& calib, std::size_t m,
                                               ColumnNorm norm) {
  SensingOperator op;
  op.init_common(calib, m, norm);
  op.mode_ = Mode::convolutional;
  const std::size_t size = calib.pattern_size();
  op.fft_size_ = good_fft_size(size);
  const std::size_t L = op.fft_size_;

  for (const auto& p : calib.reference_patterns) {
    RealGrid padded(L, L);
    for (std::size_t r = 0; r < size; ++r) {
      for (std::size_t c = 0; c < size; ++c) padded(r, c) = p.intensity(r, c);
    }
    op.pattern_spectra_.push_back(fft::forward_real(padded));
  }

  // Windowed sums of squared intensity from a summed-area table.
  const std::size_t n = op.n_;
  const auto mag = static_cast<std::size_t>(op.magnification_);
  op.column_norms_.assign(op.cols(), 0.0);
  for (std::size_t b = 0; b < op.bands_; ++b) {
    const auto& I = calib.reference_patterns[b].intensity;
    RealGrid sat(size + 1, size + 1);
    for (std::size_t r = 0; r < size; ++r) {
      for (std::size_t c = 0; c < size; ++c) {
        sat(r + 1, c + 1) = I(r, c) * I(r, c) + sat(r, c + 1) + sat(r + 1, c) - sat(r, c);
      }
    }
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const std::size_t r0 = mag * (n - 1 - r);
        const std::size_t c0 = mag * (n - 1 - c);
        const double s = sat(r0 + m, c0 + m) - sat(r0, c0 + m) - sat(r0 + m, c0) + sat(r0, c0);
        op.column_norms_[(b * n + r) * n + c] = std::sqrt(std::max(s, 0.0));
      }
    }
  }
  if (norm == ColumnNorm::unit_l2) {
    op.inv_norms_.assign(op.cols(), 0.0);
    for (std::size_t k = 0; k < op.cols(); ++k) {
      if (op.column_norms_[k] == 0.0) throw NumericError("zero-norm column in sensing matrix");
      op.inv_norms_[k] = 1.0 / op.column_norms_[k];
    }
  }
  return op;
}

SensingOperator SensingOperator::automatic(const CalibrationSet& calib, std::size_t m,
                                           ColumnNorm norm) {
  const long double bytes =
      static_cast<long double>(m * m) * (calib.n * calib.n * calib.bands()) * sizeof(double);
  if (calib.n <= 32 && bytes <= static_cast<long double>(kDefaultMemoryCap)) {
    return dense(calib, m, norm);
  }
  return convolutional(calib, m, norm);
}

double SensingOperator::sampling_rate() const {
  return static_cast<double>(rows()) / static_cast<double>(cols());
}

std::pair<std::size_t, std::size_t> SensingOperator::sampling_ratio() const {
  const std::size_t g = std::gcd(rows(), cols());
  return {rows() / g, cols() / g};
}

void SensingOperator::forward(std::span<const double> x, std::span<double> y) const {
  check_span(x.size(), cols(), "object vector");
  check_span(y.size(), rows(), "measurement vector");
  const std::size_t nc = cols();

  if (mode_ == Mode::dense) {
    // normalization is folded into the stored matrix
    for (std::size_t row = 0; row < rows(); ++row) {
      const double* a = matrix_.data() + row * nc;
      double acc = 0.0;
      for (std::size_t k = 0; k < nc; ++k) acc += a[k] * x[k];
      y[row] = acc;
    }
    return;
  }

  std::vector<double> scaled;
  if (!inv_norms_.empty()) {
    scaled.resize(nc);
    for (std::size_t k = 0; k < nc; ++k) scaled[k] = x[k] * inv_norms_[k];
  }

  const double* xv = scaled.empty() ? x.data() : scaled.data();
  const std::size_t L = fft_size_;
  const std::size_t n = n_;
  const auto mag = static_cast<std::size_t>(magnification_);
  ComplexGrid acc(L, L / 2 + 1);
  RealGrid u(L, L);
  for (std::size_t b = 0; b < bands_; ++b) {
    bool any = false;
    std::fill(u.values().begin(), u.values().end(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const double v = xv[(b * n + r) * n + c];
        any = any || v != 0.0;
        u(mag * (n - 1 - r), mag * (n - 1 - c)) = v;
      }
    }
    if (!any) continue;
    const ComplexGrid U = fft::forward_real(u);
    const auto& R = pattern_spectra_[b];
    for (std::size_t i = 0; i < acc.size(); ++i) {
      acc.values()[i] += R.values()[i] * std::conj(U.values()[i]);
    }
  }
  const RealGrid full = fft::inverse_real(acc, L);
  for (std::size_t i = 0; i < m_; ++i) {
    for (std::size_t j = 0; j < m_; ++j) y[i * m_ + j] = full(i, j);
  }
}

void SensingOperator::adjoint(std::span<const double> y, std::span<double> x) const {
  check_span(y.size(), rows(), "measurement vector");
  check_span(x.size(), cols(), "object vector");
  const std::size_t nc = cols();

  if (mode_ == Mode::dense) {
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t row = 0; row < rows(); ++row) {
      const double yv = y[row];
      if (yv == 0.0) continue;
      const double* a = matrix_.data() + row * nc;
      for (std::size_t k = 0; k < nc; ++k) x[k] += a[k] * yv;
    }
    return;
  }

  const std::size_t L = fft_size_;
  const std::size_t n = n_;
  const auto mag = static_cast<std::size_t>(magnification_);
  RealGrid ypad(L, L);
  for (std::size_t i = 0; i < m_; ++i) {
    for (std::size_t j = 0; j < m_; ++j) ypad(i, j) = y[i * m_ + j];
  }
  const ComplexGrid Y = fft::forward_real(ypad);
  ComplexGrid V(L, L / 2 + 1);
  for (std::size_t b = 0; b < bands_; ++b) {
    const auto& R = pattern_spectra_[b];
    for (std::size_t i = 0; i < V.size(); ++i) V.values()[i] = R.values()[i] * std::conj(Y.values()[i]);
    const RealGrid v = fft::inverse_real(V, L);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const std::size_t k = (b * n + r) * n + c;
        const double val = v(mag * (n - 1 - r), mag * (n - 1 - c));
        x[k] = inv_norms_.empty() ? val : val * inv_norms_[k];
      }
    }
  }
}

std::vector<double> SensingOperator::forward(std::span<const double> x) const {
  std::vector<double> y(rows());
  forward(x, y);
  return y;
}

std::vector<double> SensingOperator::adjoint(std::span<const double> y) const {
  std::vector<double> x(cols());
  adjoint(y, x);
  return x;
}

const char* to_string(NoiseKind kind) {
  return kind == NoiseKind::none ? "none" : "additive_gaussian";
}

NoiseKind noise_kind_from_string(std::string_view name) {
  if (name == "none") return NoiseKind::none;
  if (name == "additive_gaussian" || name == "gaussian") return NoiseKind::additive_gaussian;
  throw InvalidParameter("unknown noise kind '" + std::string(name) + "'");
}

Measurement forward(const SensingOperator& op, std::span<const double> x, const NoiseSpec& noise,
                    std::uint64_t seed) {
  Measurement out;
  out.noise = noise;
  out.seed = seed;
  out.operator_fingerprint = op.fingerprint();
  std::vector<double> y = op.forward(x);

  if (noise.kind == NoiseKind::additive_gaussian) {
    if (!std::isfinite(noise.target_snr_db)) throw InvalidParameter("target SNR must be finite");
    double signal = 0.0;
    for (double v : y) signal += v * v;
    if (signal > 0.0) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      std::vector<double> e(y.size());
      double energy = 0.0;
      for (auto& v : e) {
        v = normal(rng);
        energy += v * v;
      }
      const double target = signal / std::pow(10.0, noise.target_snr_db / 10.0);
      const double k = std::sqrt(target / energy);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += k * e[i];
    }
  }
  out.image = RealGrid(op.m(), op.m(), std::move(y));
  return out;
}

Measurement forward(const SensingOperator& op, const hsi::HsiCube& x, const NoiseSpec& noise,
                    std::uint64_t seed) {
  if (x.height() != op.n() || x.width() != op.n() || x.bands() != op.bands()) {
    throw ShapeError("cube is " + std::to_string(x.height()) + "x" + std::to_string(x.width()) +
                     "x" + std::to_string(x.bands()) + ", operator expects " +
                     std::to_string(op.n()) + "x" + std::to_string(op.n()) + "x" +
                     std::to_string(op.bands()));
  }
  const auto v = x.to_vector();
  return forward(op, std::span<const double>(v), noise, seed);
}

std::vector<double> adjoint(const SensingOperator& op, const Measurement& y) {
  if (y.image.rows() != op.m() || y.image.cols() != op.m()) {
    throw ShapeError("measurement is " + std::to_string(y.image.rows()) + "x" +
                     std::to_string(y.image.cols()) + ", operator expects " +
                     std::to_string(op.m()) + "x" + std::to_string(op.m()));
  }
  return op.adjoint(y.image.values());
}

double measured_snr_db(std::span<const double> clean, std::span<const double> noisy) {
  check_span(noisy.size(), clean.size(), "noisy measurement");
  double s = 0.0, e = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    s += clean[i] * clean[i];
    e += (noisy[i] - clean[i]) * (noisy[i] - clean[i]);
  }
  return 10.0 * std::log10(s / e);
}

PatchStack reshape_measurement(const RealGrid& y) {
  if (y.rows() != y.cols()) throw ShapeError("measurement must be square");
  if (y.rows() % 2 != 0 || y.rows() == 0) {
    throw ShapeError("quadrant reshape needs an even side, got " + std::to_string(y.rows()));
  }
  const std::size_t h = y.rows() / 2;
  return {y.crop(0, 0, h, h), y.crop(0, h, h, h), y.crop(h, 0, h, h), y.crop(h, h, h, h)};
}

RealGrid assemble_measurement(const PatchStack& patches) {
  const std::size_t h = patches[0].rows();
  for (const auto& p : patches) {
    if (p.rows() != h || p.cols() != h) throw ShapeError("patches must be equal squares");
  }
  RealGrid y(2 * h, 2 * h);
  for (std::size_t q = 0; q < 4; ++q) {
    const std::size_t r0 = (q / 2) * h;
    const std::size_t c0 = (q % 2) * h;
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < h; ++c) y(r0 + r, c0 + c) = patches[q](r, c);
    }
  }
  return y;
}

}  // namespace gisc::sensing
