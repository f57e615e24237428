#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gisc/hsi.hpp"
#include "gisc/sensing.hpp"
#include "gisc/transform.hpp"

namespace gisc::recon {

enum class Algorithm { gi, dgi, cs_fista };
const char* to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view name);

// fraction: tau = tau_fraction * ||Phi^T y||_inf.
// noise: tau = tau_noise_scale * sigma * c * sqrt(2 ln N), the universal
// threshold, with c the rms norm of the columns of W Phi and sigma the noise
// standard deviation implied by the measurement's target SNR. Falls back to
// fraction for noise-free measurements.
enum class TauRule { fraction, noise };
const char* to_string(TauRule r);
TauRule tau_rule_from_string(std::string_view name);

struct ReconConfig {
  Algorithm algorithm = Algorithm::cs_fista;
  int max_iters = 200;
  std::optional<double> step;  // nullopt: 0.95 / L with L from power iteration
  std::optional<double> tau;   // nullopt: see TauRule
  double tau_fraction = 1e-3;
  double tol = 1e-5;
  Transform transform = Transform::dct2_per_band;
  bool momentum = true;  // false runs plain ISTA
  // Resets the momentum whenever the objective increases.
  bool restart = false;
  int power_iterations = 50;
  double step_safety = 0.95;
  // How the default tau is chosen when tau is unset.
  TauRule tau_rule = TauRule::fraction;
  double tau_noise_scale = 1.0;
  // Constrains x >= 0; the proximal step becomes max(v - theta, 0). Only
  // valid with the identity transform.
  bool nonnegative = false;
  // After the solver, refits the nonzero transform coefficients by least
  // squares (CGLS, debias_iterations steps), removing the l1 shrinkage bias.
  bool debias = false;
  int debias_iterations = 50;
  // Weight w in [0, 1] of the mean detector row in the data term: the
  // objective uses ||W (Phi x - y)||^2 with W = I - (1 - w) 11^T / M. Small
  // w removes the common speckle pedestal shared by every column of Phi.
  double mean_weight = 1.0;

  void validate() const;
};

struct ReconResult {
  // gi/dgi: min-max normalized to [0, 1]. cs_fista: the unclamped iterate.
  hsi::HsiCube estimate;
  // Pre-normalization values, band-major.
  std::vector<double> raw;
  std::vector<double> objective_trace;
  std::vector<double> iteration_ms;
  int iterations_used = 0;
  double wall_time_s = 0.0;
  double lipschitz = 0.0;
  double step = 0.0;
  double tau = 0.0;
  double final_relative_change = 0.0;
  std::size_t support_size = 0;  // nonzero coefficients refit by debiasing
};

// sign(v) * max(|v| - theta, 0), elementwise.
std::vector<double> soft_threshold(std::span<const double> v, double theta);
void soft_threshold_inplace(std::span<double> v, double theta);

// Largest eigenvalue of Phi^T W^2 Phi by power iteration from the all-ones
// vector; see ReconConfig::mean_weight for W.
double estimate_lipschitz(const sensing::SensingOperator& op, int iterations,
                          double mean_weight = 1.0);

// Noise standard deviation implied by y = Phi x + e and the recorded target
// SNR: ||y||^2 / (M (1 + 10^(snr/10))). Zero for noise-free measurements.
double implied_noise_sigma(const sensing::Measurement& y);

// x_k = sum_j (y_j - mean(y)) Phi_jk.
ReconResult gi_correlate(const sensing::Measurement& y, const sensing::SensingOperator& op);

// x_k = sum_j y_j Phi_jk - (mean(y) / mean(R)) sum_j R_j Phi_jk with R = Phi 1,
// the detector pixels acting as the ensemble.
ReconResult dgi(const sensing::Measurement& y, const sensing::SensingOperator& op);

// FISTA (or ISTA) on 0.5 ||W (Phi x - y)||^2 + tau ||Psi x||_1 starting from 0.
ReconResult cs_reconstruct(const sensing::Measurement& y, const sensing::SensingOperator& op,
                           const ReconConfig& cfg);

ReconResult reconstruct(const sensing::Measurement& y, const sensing::SensingOperator& op,
                        const ReconConfig& cfg);

// Copy of the estimate clamped to [0, 1], for writing to disk.
hsi::HsiCube clamp_for_export(const hsi::HsiCube& cube);

}  // namespace gisc::recon
