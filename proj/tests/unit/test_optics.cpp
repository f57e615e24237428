#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "gisc/error.hpp"
#include "gisc/optics.hpp"

namespace gisc::optics {
namespace {

// Lag at which the brute-force circular autocorrelation along rows and
// columns first drops below 1/e, linearly interpolated.
double autocorrelation_width(const RealGrid& h, std::size_t max_lag) {
  const std::size_t n = h.rows();
  std::vector<double> acf(max_lag + 1, 0.0);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        s += h(r, c) * h(r, (c + lag) % n) + h(r, c) * h((r + lag) % n, c);
      }
    }
    acf[lag] = s / (2.0 * n * n);
  }
  const double target = std::exp(-1.0) * acf[0];
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    if (acf[lag] < target) {
      const double t = (acf[lag - 1] - target) / (acf[lag - 1] - acf[lag]);
      return static_cast<double>(lag - 1) + t;
    }
  }
  return static_cast<double>(max_lag);
}

// Kolmogorov-Smirnov distance between samples and Exp(mean).
double ks_exponential(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double d = 0.0;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double cdf = 1.0 - std::exp(-v[i] / mean);
    d = std::max({d, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
  }
  return d;
}

Geometry full_detector() {
  Geometry g;
  g.detector_size = ScreenParams{}.size;
  return g;
}

SpecklePattern exponential_pattern(std::size_t side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> dist(1.0);
  SpecklePattern p;
  p.intensity = RealGrid(side, side);
  for (auto& v : p.intensity.values()) v = dist(rng);
  return p;
}

TEST(PhaseScreen, Deterministic) {
  const auto a = make_phase_screen(7, 256, 1.0, 4.0);
  const auto b = make_phase_screen(7, 256, 1.0, 4.0);
  EXPECT_EQ(a.heights(), b.heights());
  EXPECT_NE(a.heights(), make_phase_screen(8, 256, 1.0, 4.0).heights());
}

TEST(PhaseScreen, ZeroMeanUnitVariance) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = make_phase_screen(seed, 128, 1.0, 3.0);
    double mean = 0.0, var = 0.0;
    for (double v : s.heights().values()) mean += v;
    mean /= static_cast<double>(s.heights().size());
    for (double v : s.heights().values()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(s.heights().size());
    EXPECT_LE(std::abs(mean), 1e-6);
    EXPECT_NEAR(var, 1.0, 1e-6);
  }
}

TEST(PhaseScreen, AutocorrelationWidthMatchesCorrelationLength) {
  const auto s = make_phase_screen(7, 1024, 1.0, 8.0);
  EXPECT_NEAR(autocorrelation_width(s.heights(), 16), 8.0, 1.6);
}

TEST(PhaseScreen, RejectsInvalidParameters) {
  EXPECT_THROW(make_phase_screen(1, 8, 1.0, 4.0), InvalidParameter);
  EXPECT_THROW(make_phase_screen(1, 64, 2.0, 1.0), InvalidParameter);
}

TEST(Propagate, ZeroDistanceIsIdentity) {
  ComplexField f;
  f.pitch_um = 1.0;
  f.wavelength_nm = 600.0;
  const auto re = testing::random_vector(64 * 64, 1);
  const auto im = testing::random_vector(64 * 64, 2);
  f.values = ComplexGrid(64, 64);
  for (std::size_t i = 0; i < re.size(); ++i) f.values.storage()[i] = {re[i], im[i]};
  const auto out = propagate(f, 0.0);
  for (std::size_t i = 0; i < re.size(); ++i) {
    EXPECT_LE(std::abs(out.values.storage()[i] - f.values.storage()[i]), 1e-12);
  }
}

TEST(Propagate, PlaneWaveStaysUniform) {
  ComplexField f;
  f.pitch_um = 1.0;
  f.wavelength_nm = 633.0;
  f.values = ComplexGrid(64, 64, std::complex<double>(0.6, 0.8));
  const auto out = propagate(f, 5000.0);
  for (const auto& v : out.values.values()) EXPECT_NEAR(std::abs(v), 1.0, 1e-9);
}

TEST(Propagate, ConservesEnergyOnRandomFields) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ComplexField f;
    f.pitch_um = 1.0;
    f.wavelength_nm = 560.0 + 10.0 * static_cast<double>(seed);
    const std::size_t side = 128;
    const auto re = testing::random_vector(side * side, 2 * seed + 10);
    const auto im = testing::random_vector(side * side, 2 * seed + 11);
    f.values = ComplexGrid(side, side);
    for (std::size_t i = 0; i < re.size(); ++i) f.values.storage()[i] = {re[i], im[i]};
    const auto out = propagate(f, 5000.0);
    EXPECT_NEAR(out.energy() / f.energy(), 1.0, 1e-9);
  }
}

TEST(Propagate, RejectsNonPositiveWavelength) {
  ComplexField f;
  f.values = ComplexGrid(16, 16, std::complex<double>(1.0, 0.0));
  f.wavelength_nm = 0.0;
  EXPECT_THROW(propagate(f, 10.0), InvalidParameter);
}

class SpeckleTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { screen_ = new PhaseScreen(make_phase_screen(11, ScreenParams{})); }
  static void TearDownTestSuite() { delete screen_; }
  static PhaseScreen* screen_;
};
PhaseScreen* SpeckleTest::screen_ = nullptr;

TEST_F(SpeckleTest, Deterministic) {
  Geometry g;
  g.detector_size = 128;
  const auto a = speckle_from_point_source(*screen_, {}, 600.0, g);
  const auto b = speckle_from_point_source(*screen_, {}, 600.0, g);
  EXPECT_EQ(a.intensity, b.intensity);
  for (double v : a.intensity.values()) EXPECT_GE(v, 0.0);
}

TEST_F(SpeckleTest, MemoryEffectOneStep) {
  const auto g = full_detector();
  const auto p0 = speckle_from_point_source(*screen_, {}, 600.0, g);
  const auto p1 = speckle_from_point_source(*screen_, {1.0, 0.0}, 600.0, g);
  const auto shifted = circular_shift(p0.intensity, 0, g.magnification);
  EXPECT_GE(normalized_correlation(shifted, p1.intensity), 0.9);
}

TEST_F(SpeckleTest, MemoryEffectAtTenPercentOfScreen) {
  const auto g = full_detector();
  const long d = static_cast<long>(0.1 * static_cast<double>(screen_->size()));
  const auto p0 = speckle_from_point_source(*screen_, {}, 560.0, g);
  const auto p = speckle_from_point_source(*screen_, {0.0, static_cast<double>(d)}, 560.0, g);
  const auto shifted = circular_shift(p0.intensity, g.magnification * d, 0);
  EXPECT_GE(normalized_correlation(shifted, p.intensity), 0.9);
  EXPECT_THROW(speckle_from_point_source(*screen_, {static_cast<double>(d + 1), 0.0}, 560.0, g),
               OutOfMemoryEffect);
}

TEST_F(SpeckleTest, SpectralDecorrelation) {
  const auto g = full_detector();
  const auto a = speckle_from_point_source(*screen_, {}, 560.0, g);
  const auto b = speckle_from_point_source(*screen_, {}, 700.0, g);
  EXPECT_LT(normalized_correlation(a.intensity, b.intensity), 0.5);
}

TEST(Speckle, RayleighStatisticsOverAMillionPixels) {
  std::vector<double> samples;
  const auto g = full_detector();
  for (std::uint64_t seed : {21u, 22u, 23u, 24u}) {
    const auto screen = make_phase_screen(seed, ScreenParams{});
    const auto p = speckle_from_point_source(screen, {}, 620.0, g);
    samples.insert(samples.end(), p.intensity.values().begin(), p.intensity.values().end());
  }
  ASSERT_GE(samples.size(), 1000000u);
  EXPECT_NEAR(contrast(samples).contrast, 1.0, 0.05);
  EXPECT_LE(ks_exponential(samples), 0.01);
}

TEST(SuperRayleigh, MomentOracleOnExponentialSamples) {
  const auto p = exponential_pattern(1000, 5);
  const auto sr = to_super_rayleigh(p, 2.0);
  EXPECT_NEAR(contrast(sr).contrast, std::sqrt(5.0), 0.02);
  EXPECT_NEAR(contrast(sr).mean / contrast(p).mean, 1.0, 1e-9);
  EXPECT_EQ(sr.tag, StatisticsTag::super_rayleigh(2.0));
}

TEST(SuperRayleigh, ContinuousAtIdentityAndMonotone) {
  const auto p = exponential_pattern(200, 6);
  const double c0 = contrast(p).contrast;
  EXPECT_LE(std::abs(contrast(to_super_rayleigh(p, 1.0 + 1e-9)).contrast - c0), 1e-6);
  double prev = c0;
  for (double gamma : {1.2, 1.5, 2.0, 3.0}) {
    const double c = contrast(to_super_rayleigh(p, gamma)).contrast;
    EXPECT_GT(c, prev);
    prev = c;
  }
}

TEST(SuperRayleigh, RejectsInvalidInput) {
  const auto p = exponential_pattern(16, 7);
  EXPECT_THROW(to_super_rayleigh(p, 1.0), InvalidParameter);
  EXPECT_THROW(to_super_rayleigh(to_super_rayleigh(p, 2.0), 2.0), InvalidParameter);
}

TEST(Contrast, ConstantAndZeroPatterns) {
  const std::vector<double> constant(100, 3.0);
  const auto s = contrast(constant);
  EXPECT_EQ(s.contrast, 0.0);
  EXPECT_EQ(s.mean, 3.0);
  EXPECT_EQ(s.sample_count, 100u);
  const std::vector<double> zero(10, 0.0);
  EXPECT_THROW(contrast(zero), NumericError);
}

TEST(SpeckleKind, StringRoundTrip) {
  EXPECT_EQ(speckle_kind_from_string(to_string(SpeckleKind::super_rayleigh)), SpeckleKind::super_rayleigh);
  EXPECT_THROW(speckle_kind_from_string("gaussian"), InvalidParameter);
}

}  // namespace
}  // namespace gisc::optics
