#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gisc/hsi.hpp"

namespace gisc::synthetic {

// Evenly spaced wavelengths lo, lo + step, ..., hi.
std::vector<double> wavelength_grid(double lo_nm, double hi_nm, double step_nm);

// Piecewise-smooth scene: a dim smooth background plus a handful of
// rectangles and discs, each with a smooth (Gaussian-mixture) spectrum.
// Max-normalized to [0, 1].
hsi::HsiCube make_scene(std::uint64_t seed, std::size_t height, std::size_t width,
                        const std::vector<double>& wavelengths_nm);

// Cube with round(density * voxels) nonzero voxels at random positions,
// values uniform in [0.2, 1].
hsi::HsiCube make_sparse(std::uint64_t seed, std::size_t height, std::size_t width,
                         const std::vector<double>& wavelengths_nm, double density);

}  // namespace gisc::synthetic
