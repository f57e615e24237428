#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace gisc::recon {

// Sparsifying transform Psi for the l1 term. Both choices are orthonormal,
// so the proximal map is Psi^T soft(Psi v).
enum class Transform { identity, dct2_per_band };

const char* to_string(Transform t);
Transform transform_from_string(std::string_view name);

// In place on a band-major n x n x bands vector.
void apply_transform(Transform t, std::span<double> x, std::size_t n, std::size_t bands);
void apply_inverse_transform(Transform t, std::span<double> x, std::size_t n, std::size_t bands);

}  // namespace gisc::recon
