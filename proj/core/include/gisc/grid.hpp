#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace gisc {

// Dense row-major 2D array.
template <typename T>
class Grid2 {
 public:
  Grid2() = default;
  Grid2(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Grid2(std::size_t rows, std::size_t cols, std::vector<T> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  // Copy of the rows x cols window whose top-left corner is (r0, c0).
  Grid2 crop(std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) const;

  friend bool operator==(const Grid2&, const Grid2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealGrid = Grid2<double>;
using ComplexGrid = Grid2<std::complex<double>>;

extern template class Grid2<double>;
extern template class Grid2<std::complex<double>>;

// Circular translation: out(r, c) = in(r - dr, c - dc) modulo the grid size.
RealGrid circular_shift(const RealGrid& in, long dr, long dc);

// Pearson correlation of two equally shaped grids.
double normalized_correlation(const RealGrid& a, const RealGrid& b);

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }
std::size_t next_power_of_two(std::size_t n);

// Smallest integer >= n whose only prime factors are 2, 3, 5 and 7.
std::size_t good_fft_size(std::size_t n);

}  // namespace gisc
