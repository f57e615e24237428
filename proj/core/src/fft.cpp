#include "gisc/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "gisc/error.hpp"

namespace gisc::fft {
namespace {

enum class Kind { c2c_forward, c2c_backward, r2c, c2r, dct, idct };

using Key = std::tuple<Kind, std::size_t, std::size_t>;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Plans live for the process lifetime; they are shared read-only after creation.
fftw_plan cached_plan(Kind kind, std::size_t rows, std::size_t cols) {
  static std::map<Key, fftw_plan> cache;
  std::lock_guard lock(planner_mutex());
  const Key key{kind, rows, cols};
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  const int r = static_cast<int>(rows);
  const int c = static_cast<int>(cols);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fftw_plan plan = nullptr;
  const std::size_t complex_len = rows * cols;
  const std::size_t half_len = rows * (cols / 2 + 1);
  switch (kind) {
    case Kind::c2c_forward:
    case Kind::c2c_backward: {
      auto* buf = fftw_alloc_complex(complex_len);
      plan = fftw_plan_dft_2d(r, c, buf, buf,
                              kind == Kind::c2c_forward ? FFTW_FORWARD : FFTW_BACKWARD, flags);
      fftw_free(buf);
      break;
    }
    case Kind::r2c: {
      auto* in = fftw_alloc_real(complex_len);
      auto* out = fftw_alloc_complex(half_len);
      plan = fftw_plan_dft_r2c_2d(r, c, in, out, flags);
      fftw_free(in);
      fftw_free(out);
      break;
    }
    case Kind::c2r: {
      auto* in = fftw_alloc_complex(half_len);
      auto* out = fftw_alloc_real(complex_len);
      plan = fftw_plan_dft_c2r_2d(r, c, in, out, flags);
      fftw_free(in);
      fftw_free(out);
      break;
    }
    case Kind::dct:
    case Kind::idct: {
      auto* buf = fftw_alloc_real(complex_len);
      const fftw_r2r_kind k = kind == Kind::dct ? FFTW_REDFT10 : FFTW_REDFT01;
      plan = fftw_plan_r2r_2d(r, c, buf, buf, k, k, flags);
      fftw_free(buf);
      break;
    }
  }
  if (plan == nullptr) throw NumericError("FFTW could not create a plan");
  cache.emplace(key, plan);
  return plan;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

void check_nonempty(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw ShapeError("FFT of an empty grid");
}

// Per-axis orthonormal weights for FFTW's unnormalized REDFT10 output.
void scale_dct(std::span<double> block, std::size_t rows, std::size_t cols, bool forward) {
  auto weight = [forward](std::size_t k, std::size_t n) {
    const double dn = static_cast<double>(n);
    if (forward) return k == 0 ? std::sqrt(1.0 / (4.0 * dn)) : std::sqrt(1.0 / (2.0 * dn));
    return k == 0 ? std::sqrt(1.0 / dn) : std::sqrt(1.0 / (2.0 * dn));
  };
  for (std::size_t r = 0; r < rows; ++r) {
    const double wr = weight(r, rows);
    for (std::size_t c = 0; c < cols; ++c) block[r * cols + c] *= wr * weight(c, cols);
  }
}

}  // namespace

void forward(ComplexGrid& g) {
  check_nonempty(g.rows(), g.cols());
  auto* p = as_fftw(g.values().data());
  fftw_execute_dft(cached_plan(Kind::c2c_forward, g.rows(), g.cols()), p, p);
}

void inverse(ComplexGrid& g) {
  check_nonempty(g.rows(), g.cols());
  auto* p = as_fftw(g.values().data());
  fftw_execute_dft(cached_plan(Kind::c2c_backward, g.rows(), g.cols()), p, p);
  const double norm = 1.0 / static_cast<double>(g.size());
  for (auto& v : g.values()) v *= norm;
}

ComplexGrid forward_real(const RealGrid& g) {
  check_nonempty(g.rows(), g.cols());
  ComplexGrid out(g.rows(), g.cols() / 2 + 1);
  // r2c with FFTW_ESTIMATE leaves the input intact, but the API takes a
  // non-const pointer.
  std::vector<double> in(g.values().begin(), g.values().end());
  fftw_execute_dft_r2c(cached_plan(Kind::r2c, g.rows(), g.cols()), in.data(),
                       as_fftw(out.values().data()));
  return out;
}

RealGrid inverse_real(const ComplexGrid& half_spectrum, std::size_t cols) {
  check_nonempty(half_spectrum.rows(), cols);
  if (half_spectrum.cols() != cols / 2 + 1) {
    throw ShapeError("half spectrum width does not match the requested real width");
  }
  const std::size_t rows = half_spectrum.rows();
  // c2r destroys its input.
  std::vector<std::complex<double>> in(half_spectrum.values().begin(),
                                       half_spectrum.values().end());
  RealGrid out(rows, cols);
  fftw_execute_dft_c2r(cached_plan(Kind::c2r, rows, cols), as_fftw(in.data()),
                       out.values().data());
  const double norm = 1.0 / static_cast<double>(rows * cols);
  for (auto& v : out.values()) v *= norm;
  return out;
}

void dct2(std::span<double> block, std::size_t rows, std::size_t cols) {
  check_nonempty(rows, cols);
  if (block.size() != rows * cols) throw ShapeError("DCT block size mismatch");
  fftw_execute_r2r(cached_plan(Kind::dct, rows, cols), block.data(), block.data());
  scale_dct(block, rows, cols, true);
}

void idct2(std::span<double> block, std::size_t rows, std::size_t cols) {
  check_nonempty(rows, cols);
  if (block.size() != rows * cols) throw ShapeError("DCT block size mismatch");
  scale_dct(block, rows, cols, false);
  fftw_execute_r2r(cached_plan(Kind::idct, rows, cols), block.data(), block.data());
}

}  // namespace gisc::fft
