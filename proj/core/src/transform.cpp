#include "gisc/transform.hpp"

#include <string>

#include "gisc/error.hpp"
#include "gisc/fft.hpp"

namespace gisc::recon {

const char* to_string(Transform t) { return t == Transform::identity ? "identity" : "dct2_per_band"; }

Transform transform_from_string(std::string_view name) {
  if (name == "identity") return Transform::identity;
  if (name == "dct2_per_band" || name == "dct") return Transform::dct2_per_band;
  throw InvalidParameter("unknown transform '" + std::string(name) + "'");
}

void apply_transform(Transform t, std::span<double> x, std::size_t n, std::size_t bands) {
  if (x.size() != n * n * bands) throw ShapeError("transform input size mismatch");
  if (t == Transform::identity) return;
  for (std::size_t b = 0; b < bands; ++b) fft::dct2(x.subspan(b * n * n, n * n), n, n);
}

void apply_inverse_transform(Transform t, std::span<double> x, std::size_t n, std::size_t bands) {
  if (x.size() != n * n * bands) throw ShapeError("transform input size mismatch");
  if (t == Transform::identity) return;
  for (std::size_t b = 0; b < bands; ++b) fft::idct2(x.subspan(b * n * n, n * n), n, n);
}

}  // namespace gisc::recon
