#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gisc/metrics.hpp"
#include "gisc/optics.hpp"
#include "gisc/recon.hpp"
#include "gisc/sensing.hpp"
#include "gisc/synthetic.hpp"

namespace {

using namespace gisc;

std::vector<double> random_vector(std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(size);
  for (auto& x : v) x = dist(rng);
  return v;
}

sensing::CalibrationSet calibration(std::size_t n, std::size_t m) {
  const auto screen = optics::make_phase_screen(11, optics::ScreenParams{});
  optics::Geometry g;
  g.detector_size = m;
  return sensing::calibrate(screen, g, synthetic::wavelength_grid(560, 700, 20), n);
}

sensing::SensingOperator make_operator(const sensing::CalibrationSet& calib, std::size_t m, bool dense) {
  return dense ? sensing::SensingOperator::dense(calib, m) : sensing::SensingOperator::convolutional(calib, m);
}

// range(0): n (m = 2n); range(1): 1 for dense, 0 for convolutional
void BM_Forward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto calib = calibration(n, 2 * n);
  const auto op = make_operator(calib, 2 * n, state.range(1) != 0);
  const auto x = random_vector(op.cols(), 1);
  std::vector<double> y(op.rows());
  for (auto _ : state) {
    op.forward(x, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_Forward)->Args({16, 1})->Args({16, 0})->Args({32, 1})->Args({32, 0})->Unit(benchmark::kMicrosecond);

void BM_Adjoint(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto calib = calibration(n, 2 * n);
  const auto op = make_operator(calib, 2 * n, state.range(1) != 0);
  const auto y = random_vector(op.rows(), 2);
  std::vector<double> x(op.cols());
  for (auto _ : state) {
    op.adjoint(y, x);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_Adjoint)->Args({16, 1})->Args({16, 0})->Args({32, 1})->Args({32, 0})->Unit(benchmark::kMicrosecond);

void BM_FistaIterations(benchmark::State& state) {
  const auto calib = calibration(16, 32);
  const auto op = sensing::SensingOperator::dense(calib, 32);
  const auto x = synthetic::make_scene(3, 16, 16, op.wavelengths_nm());
  const auto y = sensing::forward(op, x, {sensing::NoiseKind::additive_gaussian, 40.0}, 3);
  recon::ReconConfig cfg;
  cfg.max_iters = static_cast<int>(state.range(0));
  cfg.tol = 1e-15;
  for (auto _ : state) benchmark::DoNotOptimize(recon::cs_reconstruct(y, op, cfg).raw.data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FistaIterations)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Speckle(benchmark::State& state) {
  optics::ScreenParams params;
  params.size = static_cast<std::size_t>(state.range(0));
  const auto screen = optics::make_phase_screen(11, params);
  optics::Geometry g;
  g.detector_size = params.size;
  for (auto _ : state) {
    benchmark::DoNotOptimize(optics::speckle_from_point_source(screen, {}, 600.0, g).intensity.values().data());
  }
}
BENCHMARK(BM_Speckle)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto wl = synthetic::wavelength_grid(560, 700, 10);
  const auto a = synthetic::make_scene(1, side, side, wl);
  const auto b = synthetic::make_scene(2, side, side, wl);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::ssim(a, b));
}
BENCHMARK(BM_Ssim)->Arg(144)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
