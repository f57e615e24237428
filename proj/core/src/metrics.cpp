#include "gisc/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "gisc/error.hpp"

namespace gisc::metrics {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * kPeak) * (0.01 * kPeak);
constexpr double kC2 = (0.03 * kPeak) * (0.03 * kPeak);

void check_same_shape(const hsi::HsiCube& a, const hsi::HsiCube& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("metric inputs differ in shape: " + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + "x" + std::to_string(a.bands()) + " vs " +
                     std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                     std::to_string(b.bands()));
  }
}

double mse_to_psnr(double mse) {
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(kPeak * kPeak / mse));
}

std::array<double, kWindow * kWindow> gaussian_window() {
  std::array<double, kWindow * kWindow> w{};
  double sum = 0.0;
  for (int r = 0; r < kWindow; ++r) {
    for (int c = 0; c < kWindow; ++c) {
      const double dr = r - kWindow / 2;
      const double dc = c - kWindow / 2;
      w[r * kWindow + c] = std::exp(-(dr * dr + dc * dc) / (2.0 * kSigma * kSigma));
      sum += w[r * kWindow + c];
    }
  }
  for (auto& v : w) v /= sum;
  return w;
}

}  // namespace

double psnr(const hsi::HsiCube& x, const hsi::HsiCube& x_hat) {
  check_same_shape(x, x_hat);
  double se = 0.0;
  for (std::size_t i = 0; i < x.voxel_count(); ++i) {
    const double d = static_cast<double>(x.data()[i]) - static_cast<double>(x_hat.data()[i]);
    se += d * d;
  }
  return mse_to_psnr(se / static_cast<double>(x.voxel_count()));
}

std::vector<double> per_band_psnr(const hsi::HsiCube& x, const hsi::HsiCube& x_hat) {
  check_same_shape(x, x_hat);
  std::vector<double> out;
  for (std::size_t b = 0; b < x.bands(); ++b) {
    const auto a = x.band(b);
    const auto e = x_hat.band(b);
    double se = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = static_cast<double>(a[i]) - static_cast<double>(e[i]);
      se += d * d;
    }
    out.push_back(mse_to_psnr(se / static_cast<double>(a.size())));
  }
  return out;
}

double ssim(const hsi::HsiCube& x, const hsi::HsiCube& x_hat) {
  check_same_shape(x, x_hat);
  const std::size_t h = x.height();
  const std::size_t w = x.width();
  if (h < kWindow || w < kWindow) throw ShapeError("SSIM needs at least 11x11 pixels");
  static const auto window = gaussian_window();

  double total = 0.0;
  for (std::size_t b = 0; b < x.bands(); ++b) {
    const auto a = x.band(b);
    const auto e = x_hat.band(b);
    double band_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t r0 = 0; r0 + kWindow <= h; ++r0) {
      for (std::size_t c0 = 0; c0 + kWindow <= w; ++c0) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int r = 0; r < kWindow; ++r) {
          for (int c = 0; c < kWindow; ++c) {
            const double g = window[r * kWindow + c];
            const std::size_t idx = (r0 + r) * w + c0 + c;
            const double xv = a[idx];
            const double yv = e[idx];
            mx += g * xv;
            my += g * yv;
            sxx += g * xv * xv;
            syy += g * yv * yv;
            sxy += g * xv * yv;
          }
        }
        const double vx = sxx - mx * mx;
        const double vy = syy - my * my;
        const double cxy = sxy - mx * my;
        band_sum += ((2.0 * mx * my + kC1) * (2.0 * cxy + kC2)) /
                    ((mx * mx + my * my + kC1) * (vx + vy + kC2));
        ++count;
      }
    }
    total += band_sum / static_cast<double>(count);
  }
  return total / static_cast<double>(x.bands());
}

double sam(const hsi::HsiCube& x, const hsi::HsiCube& x_hat) {
  check_same_shape(x, x_hat);
  if (x.bands() < 2) throw ShapeError("SAM needs at least two bands");
  const std::size_t pixels = x.height() * x.width();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < pixels; ++p) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t b = 0; b < x.bands(); ++b) {
      const double u = x.data()[b * pixels + p];
      const double v = x_hat.data()[b * pixels + p];
      dot += u * v;
      na += u * u;
      nb += v * v;
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na <= 1e-12 || nb <= 1e-12) continue;
    sum += std::acos(std::clamp(dot / (na * nb), -1.0, 1.0));
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

MetricsReport evaluate(const hsi::HsiCube& x, const hsi::HsiCube& x_hat) {
  MetricsReport r;
  r.psnr_db = psnr(x, x_hat);
  r.ssim = ssim(x, x_hat);
  r.sam_rad = x.bands() >= 2 ? sam(x, x_hat) : 0.0;
  r.per_band_psnr = per_band_psnr(x, x_hat);
  return r;
}

MetricsReport aggregate(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw InvalidParameter("cannot aggregate an empty set of reports");
  MetricsReport out;
  const double n = static_cast<double>(reports.size());
  for (const auto& r : reports) {
    out.psnr_db += r.psnr_db;
    out.ssim += r.ssim;
    out.sam_rad += r.sam_rad;
  }
  out.psnr_db /= n;
  out.ssim /= n;
  out.sam_rad /= n;
  return out;
}

MetricsReport evaluate_set(const std::vector<PairInput>& pairs, std::vector<MetricsReport>* rows) {
  if (pairs.empty()) throw InvalidParameter("evaluate_set needs at least one pair");
  std::vector<MetricsReport> reports;
  reports.reserve(pairs.size());
  for (const auto& p : pairs) reports.push_back(evaluate(*p.truth, *p.estimate));
  auto agg = aggregate(reports);
  if (rows != nullptr) *rows = std::move(reports);
  return agg;
}

std::string csv_row(const LabeledReport& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, ",%.12g,%.12g,%.12g", r.report.psnr_db, r.report.ssim, r.report.sam_rad);
  return r.name + "," + r.algorithm + "," + r.speckle_kind + buf;
}

std::string table_cell(const MetricsReport& r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.4f / %.4f / %.4f", r.psnr_db, r.ssim, r.sam_rad);
  return buf;
}

}  // namespace gisc::metrics
