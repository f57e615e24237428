#include "gisc/grid.hpp"

#include <cmath>
#include <stdexcept>

#include "gisc/error.hpp"

namespace gisc {

template <typename T>
Grid2<T>::Grid2(std::size_t rows, std::size_t cols, std::vector<T> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("grid storage of " + std::to_string(data_.size()) + " values cannot be " +
                     std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

template <typename T>
Grid2<T> Grid2<T>::crop(std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) const {
  if (r0 + rows > rows_ || c0 + cols > cols_) {
    throw ShapeError("crop window exceeds grid bounds");
  }
  Grid2 out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = (*this)(r0 + r, c0 + c);
  }
  return out;
}

template class Grid2<double>;
template class Grid2<std::complex<double>>;

RealGrid circular_shift(const RealGrid& in, long dr, long dc) {
  const long rows = static_cast<long>(in.rows());
  const long cols = static_cast<long>(in.cols());
  RealGrid out(in.rows(), in.cols());
  for (long r = 0; r < rows; ++r) {
    const long sr = (((r - dr) % rows) + rows) % rows;
    for (long c = 0; c < cols; ++c) {
      const long sc = (((c - dc) % cols) + cols) % cols;
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) =
          in(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc));
    }
  }
  return out;
}

double normalized_correlation(const RealGrid& a, const RealGrid& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.empty()) {
    throw ShapeError("correlation needs two nonempty grids of equal shape");
  }
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a.values()[i];
    mb += b.values()[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a.values()[i] - ma;
    const double db = b.values()[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::size_t good_fft_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t k = n;; ++k) {
    std::size_t r = k;
    for (std::size_t f : {2u, 3u, 5u, 7u}) {
      while (r % f == 0) r /= f;
    }
    if (r == 1) return k;
  }
}

}  // namespace gisc
