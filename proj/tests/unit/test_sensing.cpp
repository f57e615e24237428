#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fixtures.hpp"
#include "gisc/error.hpp"
#include "gisc/sensing.hpp"

namespace gisc::sensing {
namespace {

using testing::dot;
using testing::make_calibration;
using testing::norm;
using testing::random_vector;
using testing::relative_error;

class DeskOperator : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { calib_ = new CalibrationSet(make_calibration(16, 8, 32)); }
  static void TearDownTestSuite() { delete calib_; }
  static CalibrationSet* calib_;
};
CalibrationSet* DeskOperator::calib_ = nullptr;

TEST(Calibrate, CountsPatternsAndColumns) {
  const auto c1 = make_calibration(4, 1, 8);
  EXPECT_EQ(c1.reference_patterns.size(), 1u);
  EXPECT_EQ(SensingOperator::dense(c1, 8).cols(), 16u);

  const auto screen = optics::make_phase_screen(3, optics::ScreenParams{});
  optics::Geometry g;
  g.detector_size = 16;
  const auto wl15 = synthetic::wavelength_grid(560.0, 700.0, 10.0);
  const auto c15 = calibrate(screen, g, wl15, 8);
  EXPECT_EQ(c15.reference_patterns.size(), 15u);
  EXPECT_EQ(c15.pattern_size(), required_pattern_size(8, 16, 2));
  const auto again = calibrate(screen, g, wl15, 8);
  for (std::size_t b = 0; b < 15; ++b) {
    EXPECT_EQ(again.reference_patterns[b].intensity, c15.reference_patterns[b].intensity);
  }
}

TEST(Calibrate, RejectsInvalidInput) {
  const auto screen = optics::make_phase_screen(3, 64, 8.0, 40.0);
  optics::Geometry g;
  g.detector_size = 16;
  EXPECT_THROW(calibrate(screen, g, {600.0, 600.0}, 4), InvalidParameter);
  EXPECT_THROW(calibrate(screen, g, {}, 4), InvalidParameter);
  EXPECT_THROW(calibrate(screen, g, {600.0}, 3), InvalidParameter);
  g.detector_size = 60;
  EXPECT_THROW(calibrate(screen, g, {600.0}, 8), ConfigError);
}

TEST(Calibrate, SuperRayleighVariantHasHigherContrast) {
  const auto r = make_calibration(8, 2, 16);
  const auto s = make_calibration(8, 2, 16, 11, 2.0);
  for (std::size_t b = 0; b < 2; ++b) {
    EXPECT_GT(optics::contrast(s.reference_patterns[b]).contrast,
              optics::contrast(r.reference_patterns[b]).contrast);
  }
}

TEST(DenseOperator, TinyMatrixColumnsAreShiftedWindows) {
  const auto calib = make_calibration(4, 2, 8);
  const auto op = SensingOperator::dense(calib, 8);
  ASSERT_EQ(op.rows(), 64u);
  ASSERT_EQ(op.cols(), 32u);
  const auto& a = op.dense_matrix();
  const std::size_t n = 4, mag = 2;
  for (std::size_t b = 0; b < 2; ++b) {
    const auto& ref = calib.reference_patterns[b].intensity;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const std::size_t k = (b * n + r) * n + c;
        for (std::size_t i = 0; i < 8; ++i) {
          for (std::size_t j = 0; j < 8; ++j) {
            const double want = ref(i + mag * (n - 1 - r), j + mag * (n - 1 - c));
            EXPECT_NEAR(a[(i * 8 + j) * op.cols() + k], want, 1e-6 * std::abs(want) + 1e-300);
          }
        }
      }
    }
  }
}

TEST(DenseOperator, TwoByTwoObjectColumnZero) {
  auto calib = make_calibration(4, 1, 4);
  const auto op = SensingOperator::dense(calib, 4);
  EXPECT_EQ(op.rows(), 16u);
  std::vector<double> e0(op.cols(), 0.0);
  e0[0] = 1.0;
  const auto y = op.forward(e0);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(y[i * 4 + j], calib.column_value(0, 0, 0, i, j));
  }
}

TEST_F(DeskOperator, ShapeAndSamplingRate) {
  const auto op = SensingOperator::dense(*calib_, 32);
  EXPECT_EQ(op.rows(), 1024u);
  EXPECT_EQ(op.cols(), 2048u);
  EXPECT_DOUBLE_EQ(op.sampling_rate(), 0.5);
  EXPECT_EQ(op.sampling_ratio(), (std::pair<std::size_t, std::size_t>{1, 2}));
  EXPECT_EQ(SensingOperator::automatic(*calib_, 32).mode(), Mode::dense);
}

TEST_F(DeskOperator, CapacityCapIsEnforced) {
  EXPECT_THROW(SensingOperator::dense(*calib_, 32, ColumnNorm::none, 1024), CapacityError);
}

TEST_F(DeskOperator, DenseAndConvolutionalAgree) {
  for (auto norm_kind : {ColumnNorm::none, ColumnNorm::unit_l2}) {
    const auto dense = SensingOperator::dense(*calib_, 32, norm_kind);
    const auto conv = SensingOperator::convolutional(*calib_, 32, norm_kind);
    EXPECT_EQ(dense.fingerprint(), conv.fingerprint());
    for (std::uint64_t s = 0; s < 3; ++s) {
      const auto x = random_vector(dense.cols(), 100 + s, 0.0, 1.0);
      const auto y = random_vector(dense.rows(), 200 + s);
      EXPECT_LE(relative_error(conv.forward(x), dense.forward(x)), 1e-6);
      EXPECT_LE(relative_error(conv.adjoint(y), dense.adjoint(y)), 1e-6);
    }
  }
}

TEST(ConvolutionalOperator, AgreesWithDenseAtN32) {
  const auto calib = make_calibration(32, 8, 64);
  const auto dense = SensingOperator::dense(calib, 64);
  const auto conv = SensingOperator::convolutional(calib, 64);
  const auto x = random_vector(dense.cols(), 1, 0.0, 1.0);
  const auto y = random_vector(dense.rows(), 2);
  EXPECT_LE(relative_error(conv.forward(x), dense.forward(x)), 1e-6);
  EXPECT_LE(relative_error(conv.adjoint(y), dense.adjoint(y)), 1e-6);
}

TEST_F(DeskOperator, AdjointDotProductTest) {
  for (auto mode : {Mode::dense, Mode::convolutional}) {
    const auto op = mode == Mode::dense ? SensingOperator::dense(*calib_, 32)
                                        : SensingOperator::convolutional(*calib_, 32);
    // Operator norm estimate from a few power iterations.
    std::vector<double> v(op.cols(), 1.0);
    double op_norm = 0.0;
    for (int it = 0; it < 10; ++it) {
      const auto w = op.adjoint(op.forward(v));
      op_norm = std::sqrt(norm(w) / norm(v));
      v = w;
    }
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto x = random_vector(op.cols(), 300 + s);
      const auto y = random_vector(op.rows(), 400 + s);
      const double lhs = dot(op.forward(x), y);
      const double rhs = dot(x, op.adjoint(y));
      EXPECT_LE(std::abs(lhs - rhs), 1e-6 * norm(x) * norm(y) * op_norm);
    }
  }
}

TEST_F(DeskOperator, Linearity) {
  const auto op = SensingOperator::convolutional(*calib_, 32);
  const auto x1 = random_vector(op.cols(), 1);
  const auto x2 = random_vector(op.cols(), 2);
  std::vector<double> mix(op.cols());
  for (std::size_t k = 0; k < mix.size(); ++k) mix[k] = 2.5 * x1[k] - 0.75 * x2[k];
  const auto y1 = op.forward(x1);
  const auto y2 = op.forward(x2);
  std::vector<double> want(op.rows());
  for (std::size_t j = 0; j < want.size(); ++j) want[j] = 2.5 * y1[j] - 0.75 * y2[j];
  EXPECT_LE(relative_error(op.forward(mix), want), 1e-9);
}

TEST_F(DeskOperator, ForwardOfZeroAndOneHot) {
  const auto op = SensingOperator::dense(*calib_, 32);
  const hsi::HsiCube zero(16, 16, calib_->wavelengths_nm);
  const auto y0 = forward(op, zero, {NoiseKind::none, 40.0}, 1);
  for (double v : y0.image.values()) EXPECT_EQ(v, 0.0);
  const auto yn = forward(op, zero, {NoiseKind::additive_gaussian, 20.0}, 1);
  for (double v : yn.image.values()) EXPECT_EQ(v, 0.0);

  const std::size_t k = 777;
  std::vector<double> e(op.cols(), 0.0);
  e[k] = 1.0;
  const auto y = forward(op, e, {NoiseKind::none, 40.0}, 1);
  for (std::size_t j = 0; j < op.rows(); ++j) {
    EXPECT_EQ(y.image.values()[j], op.dense_matrix()[j * op.cols() + k]);
  }
  EXPECT_EQ(y.operator_fingerprint, op.fingerprint());
}

TEST_F(DeskOperator, AdjointOfOneHotPeaksAtTheVoxel) {
  const auto op = SensingOperator::dense(*calib_, 32, ColumnNorm::unit_l2);
  const auto& a = op.dense_matrix();
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> phi(
      a.data(), op.rows(), op.cols());
  const Eigen::MatrixXd gram = phi.transpose() * phi;
  for (Eigen::Index k = 0; k < gram.cols(); ++k) {
    Eigen::Index best = 0;
    gram.col(k).maxCoeff(&best);
    EXPECT_EQ(best, k);
  }
  for (std::size_t k = 0; k < op.cols(); k += 64) {
    std::vector<double> e(op.cols(), 0.0);
    e[k] = 1.0;
    const auto back = op.adjoint(op.forward(e));
    EXPECT_EQ(static_cast<std::size_t>(std::max_element(back.begin(), back.end()) - back.begin()), k);
  }
}

TEST_F(DeskOperator, AdjointOfZeroIsZero) {
  const auto op = SensingOperator::convolutional(*calib_, 32);
  for (double v : op.adjoint(std::vector<double>(op.rows(), 0.0))) EXPECT_EQ(v, 0.0);
}

TEST_F(DeskOperator, ShapeErrors) {
  const auto op = SensingOperator::dense(*calib_, 32);
  const hsi::HsiCube wrong(8, 8, calib_->wavelengths_nm);
  EXPECT_THROW(forward(op, wrong, {}, 1), ShapeError);
  Measurement y;
  y.image = RealGrid(16, 16);
  EXPECT_THROW(adjoint(op, y), ShapeError);
}

TEST_F(DeskOperator, FingerprintTracksNormalization) {
  EXPECT_NE(operator_fingerprint(*calib_, 32, ColumnNorm::none),
            operator_fingerprint(*calib_, 32, ColumnNorm::unit_l2));
  EXPECT_EQ(SensingOperator::dense(*calib_, 32).fingerprint(),
            operator_fingerprint(*calib_, 32, ColumnNorm::none));
}

TEST(Noise, MeasuredSnrMatchesTarget) {
  const auto calib = make_calibration(16, 4, 64);
  const auto op = SensingOperator::convolutional(calib, 64);
  const auto x = random_vector(op.cols(), 9, 0.0, 1.0);
  const auto clean = op.forward(x);
  for (double snr : {10.0, 20.0, 30.0, 40.0}) {
    const auto y = forward(op, x, {NoiseKind::additive_gaussian, snr}, 17);
    EXPECT_NEAR(measured_snr_db(clean, y.image.values()), snr, 0.1);
  }
  const auto exact = forward(op, x, {NoiseKind::none, 0.0}, 17);
  for (std::size_t j = 0; j < clean.size(); ++j) EXPECT_EQ(exact.image.values()[j], clean[j]);
  const auto a = forward(op, x, {NoiseKind::additive_gaussian, 20.0}, 5);
  const auto b = forward(op, x, {NoiseKind::additive_gaussian, 20.0}, 5);
  EXPECT_EQ(a.image, b.image);
}

TEST(Reshape, QuadrantOrderAndInverse) {
  RealGrid y(4, 4);
  for (std::size_t i = 0; i < 16; ++i) y.storage()[i] = static_cast<double>(i);
  const auto p = reshape_measurement(y);
  EXPECT_EQ(p[0], RealGrid(2, 2, std::vector<double>{0, 1, 4, 5}));
  EXPECT_EQ(p[1], RealGrid(2, 2, std::vector<double>{2, 3, 6, 7}));
  EXPECT_EQ(p[2], RealGrid(2, 2, std::vector<double>{8, 9, 12, 13}));
  EXPECT_EQ(p[3], RealGrid(2, 2, std::vector<double>{10, 11, 14, 15}));
  EXPECT_EQ(assemble_measurement(p), y);

  const RealGrid big(288, 288, random_vector(288 * 288, 3));
  const auto q = reshape_measurement(big);
  for (const auto& c : q) EXPECT_EQ(c.rows(), 144u);
  EXPECT_EQ(assemble_measurement(q), big);
  EXPECT_THROW(reshape_measurement(RealGrid(5, 5)), ShapeError);
}

TEST(NamedEnums, StringRoundTrip) {
  EXPECT_EQ(column_norm_from_string(to_string(ColumnNorm::unit_l2)), ColumnNorm::unit_l2);
  EXPECT_EQ(noise_kind_from_string(to_string(NoiseKind::additive_gaussian)), NoiseKind::additive_gaussian);
  EXPECT_THROW(noise_kind_from_string("poisson"), InvalidParameter);
}

}  // namespace
}  // namespace gisc::sensing
