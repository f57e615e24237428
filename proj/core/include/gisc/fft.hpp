#pragma once

#include <cstddef>
#include <span>

#include "gisc/grid.hpp"

// Thin layer over FFTW. Plans are created with FFTW_ESTIMATE so that results
// are bit-reproducible between runs, and cached per shape. Execution is
// reentrant; planning is serialized internally.
namespace gisc::fft {

// Unnormalized forward transform, in place.
void forward(ComplexGrid& g);
// Inverse transform including the 1/N factor, in place.
void inverse(ComplexGrid& g);

// Half spectrum of a real grid: rows x (cols / 2 + 1).
ComplexGrid forward_real(const RealGrid& g);
// Inverse of forward_real including the 1/N factor.
RealGrid inverse_real(const ComplexGrid& half_spectrum, std::size_t cols);

// Orthonormal 2D DCT-II (and its inverse, DCT-III) of a rows x cols block
// stored row-major, in place.
void dct2(std::span<double> block, std::size_t rows, std::size_t cols);
void idct2(std::span<double> block, std::size_t rows, std::size_t cols);

}  // namespace gisc::fft
