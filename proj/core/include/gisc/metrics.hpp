#pragma once

#include <string>
#include <vector>

#include "gisc/hsi.hpp"

namespace gisc::metrics {

inline constexpr double kPeak = 1.0;
inline constexpr double kPsnrCap = 100.0;  // dB, returned for identical cubes

struct MetricsReport {
  double psnr_db = 0.0;
  double ssim = 0.0;
  double sam_rad = 0.0;
  std::vector<double> per_band_psnr;
};

// 10 log10(peak^2 / MSE) over the whole volume.
double psnr(const hsi::HsiCube& x, const hsi::HsiCube& x_hat);
std::vector<double> per_band_psnr(const hsi::HsiCube& x, const hsi::HsiCube& x_hat);

// Gaussian-window SSIM (11x11, sigma 1.5, K1 0.01, K2 0.03) over valid
// window positions, computed per band and averaged. Needs height, width >= 11.
double ssim(const hsi::HsiCube& x, const hsi::HsiCube& x_hat);

// Mean spectral angle over pixels whose spectra both have norm > 1e-12; 0 when
// no pixel qualifies. Needs at least two bands.
double sam(const hsi::HsiCube& x, const hsi::HsiCube& x_hat);

MetricsReport evaluate(const hsi::HsiCube& x, const hsi::HsiCube& x_hat);

struct LabeledReport {
  std::string name;
  std::string algorithm;
  std::string speckle_kind;
  MetricsReport report;
};

// Arithmetic mean of each metric (in list order).
MetricsReport aggregate(const std::vector<MetricsReport>& reports);

struct PairInput {
  const hsi::HsiCube* truth;
  const hsi::HsiCube* estimate;
};
// Evaluates every pair; the aggregate is the mean, the rows are kept.
MetricsReport evaluate_set(const std::vector<PairInput>& pairs, std::vector<MetricsReport>* rows = nullptr);

inline constexpr const char* kCsvHeader = "name,algorithm,speckle_kind,psnr_db,ssim,sam_rad";
std::string csv_row(const LabeledReport& r);
// "31.1172 / 0.8946 / 0.0932"
std::string table_cell(const MetricsReport& r);

}  // namespace gisc::metrics
