#include "gisc/recon.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "gisc/error.hpp"

namespace gisc::recon {
namespace {

using Clock = std::chrono::steady_clock;

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void check_pairing(const sensing::Measurement& y, const sensing::SensingOperator& op) {
  if (y.operator_fingerprint != op.fingerprint()) {
    throw PairingError("measurement was taken with operator " + std::to_string(y.operator_fingerprint) +
                       " but reconstruction uses operator " + std::to_string(op.fingerprint()));
  }
  if (y.image.rows() != op.m() || y.image.cols() != op.m()) {
    throw ShapeError("measurement size does not match the operator detector size");
  }
}

hsi::HsiCube to_cube(const sensing::SensingOperator& op, std::span<const double> values,
                     const char* name) {
  return hsi::HsiCube::from_vector(op.n(), op.n(), op.wavelengths_nm(), values, name);
}

std::vector<double> min_max_normalize(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  std::vector<double> out(v.size(), 0.0);
  const double range = *hi - *lo;
  if (range > 0.0) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / range;
  }
  return out;
}

ReconResult correlation_result(const sensing::SensingOperator& op, std::vector<double> raw,
                               const char* name, Clock::time_point start) {
  ReconResult r;
  r.estimate = to_cube(op, min_max_normalize(raw), name);
  r.raw = std::move(raw);
  r.iterations_used = 1;
  r.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

// r <- W r with W = I - (1 - w) 11^T / M.
void weight_rows(std::span<double> r, double w) {
  if (w == 1.0) return;
  const double shift = (1.0 - w) * mean(r);
  for (auto& v : r) v -= shift;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// CGLS on min ||Phi Psi^T c - y|| over the coefficients c that are nonzero in
// Psi x, starting from the current estimate.
void debias_support(const sensing::SensingOperator& op, const ReconConfig& cfg,
                    std::span<const double> y, std::vector<double>& x, ReconResult& res) {
  const std::size_t nc = op.cols();
  const std::size_t n = op.n();
  const std::size_t bands = op.bands();
  std::vector<double> c = x;
  apply_transform(cfg.transform, c, n, bands);
  std::vector<char> support(nc);
  for (std::size_t k = 0; k < nc; ++k) support[k] = c[k] != 0.0;
  res.support_size = static_cast<std::size_t>(std::count(support.begin(), support.end(), 1));
  if (res.support_size == 0) return;

  std::vector<double> tmp(nc), ax(op.rows()), wr(op.rows());
  auto apply = [&](const std::vector<double>& coef, std::vector<double>& out) {
    tmp = coef;
    apply_inverse_transform(cfg.transform, tmp, n, bands);
    op.forward(tmp, out);
    weight_rows(out, cfg.mean_weight);
  };
  auto apply_t = [&](const std::vector<double>& r, std::vector<double>& out) {
    wr = r;
    weight_rows(wr, cfg.mean_weight);
    op.adjoint(wr, out);
    apply_transform(cfg.transform, out, n, bands);
    for (std::size_t k = 0; k < nc; ++k) {
      if (!support[k]) out[k] = 0.0;
    }
  };

  apply(c, ax);
  std::vector<double> r(y.begin(), y.end());
  weight_rows(r, cfg.mean_weight);
  for (std::size_t j = 0; j < r.size(); ++j) r[j] -= ax[j];
  std::vector<double> s(nc), p, q(op.rows());
  apply_t(r, s);
  p = s;
  double gamma = dot(s, s);
  const double gamma0 = gamma;
  for (int it = 0; it < cfg.debias_iterations && gamma > 1e-28 * gamma0; ++it) {
    apply(p, q);
    const double qq = dot(q, q);
    if (!(qq > 0.0)) break;
    const double alpha = gamma / qq;
    for (std::size_t k = 0; k < nc; ++k) c[k] += alpha * p[k];
    for (std::size_t j = 0; j < r.size(); ++j) r[j] -= alpha * q[j];
    apply_t(r, s);
    const double next = dot(s, s);
    const double beta = next / gamma;
    gamma = next;
    for (std::size_t k = 0; k < nc; ++k) p[k] = s[k] + beta * p[k];
  }
  apply_inverse_transform(cfg.transform, c, n, bands);
  x = std::move(c);
}

}  // namespace

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::gi: return "gi";
    case Algorithm::dgi: return "dgi";
    case Algorithm::cs_fista: return "cs_fista";
  }
  return "?";
}

Algorithm algorithm_from_string(std::string_view name) {
  if (name == "gi") return Algorithm::gi;
  if (name == "dgi") return Algorithm::dgi;
  if (name == "cs_fista" || name == "cs") return Algorithm::cs_fista;
  throw InvalidParameter("unknown algorithm '" + std::string(name) + "' (gi, dgi, cs_fista)");
}

const char* to_string(TauRule r) { return r == TauRule::fraction ? "fraction" : "noise"; }

TauRule tau_rule_from_string(std::string_view name) {
  if (name == "fraction") return TauRule::fraction;
  if (name == "noise") return TauRule::noise;
  throw InvalidParameter("unknown tau rule '" + std::string(name) + "' (fraction, noise)");
}

void ReconConfig::validate() const {
  if (max_iters < 1) throw InvalidParameter("max_iters must be >= 1");
  if (tau && !(*tau >= 0.0)) throw InvalidParameter("tau must be >= 0");
  if (!(tau_fraction >= 0.0)) throw InvalidParameter("tau fraction must be >= 0");
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidParameter("tol must be in (0, 1)");
  if (step && !(*step > 0.0)) throw InvalidParameter("step must be positive");
  if (!(tau_noise_scale >= 0.0)) throw InvalidParameter("tau noise scale must be >= 0");
  if (!(mean_weight >= 0.0 && mean_weight <= 1.0)) throw InvalidParameter("mean weight must be in [0, 1]");
  if (debias_iterations < 1) throw InvalidParameter("debias iterations must be >= 1");
  if (nonnegative && transform != Transform::identity) {
    throw InvalidParameter("the nonnegative constraint needs the identity transform");
  }
  if (power_iterations < 1) throw InvalidParameter("power iterations must be >= 1");
  if (!(step_safety > 0.0 && step_safety <= 1.0)) throw InvalidParameter("step safety must be in (0, 1]");
}

std::vector<double> soft_threshold(std::span<const double> v, double theta) {
  std::vector<double> out(v.begin(), v.end());
  soft_threshold_inplace(out, theta);
  return out;
}

void soft_threshold_inplace(std::span<double> v, double theta) {
  if (!(theta >= 0.0)) throw InvalidParameter("threshold must be >= 0");
  for (auto& x : v) {
    const double a = std::abs(x) - theta;
    x = a > 0.0 ? std::copysign(a, x) : 0.0;
  }
}

double estimate_lipschitz(const sensing::SensingOperator& op, int iterations, double mean_weight) {
  std::vector<double> v(op.cols(), 1.0 / std::sqrt(static_cast<double>(op.cols())));
  std::vector<double> w(op.cols());
  std::vector<double> tmp(op.rows());
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    op.forward(v, tmp);
    weight_rows(tmp, mean_weight);
    weight_rows(tmp, mean_weight);
    op.adjoint(tmp, w);
    lambda = norm2(w);
    if (lambda == 0.0) return 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = w[k] / lambda;
  }
  return lambda;
}

double implied_noise_sigma(const sensing::Measurement& y) {
  if (y.noise.kind == sensing::NoiseKind::none) return 0.0;
  const auto v = y.image.values();
  double e = 0.0;
  for (double x : v) e += x * x;
  const double ratio = std::pow(10.0, y.noise.target_snr_db / 10.0);
  return std::sqrt(e / (static_cast<double>(v.size()) * (1.0 + ratio)));
}

ReconResult gi_correlate(const sensing::Measurement& y, const sensing::SensingOperator& op) {
  const auto start = Clock::now();
  check_pairing(y, op);
  const auto yv = y.image.values();
  const double ybar = mean(yv);
  std::vector<double> centred(yv.begin(), yv.end());
  for (auto& v : centred) v -= ybar;
  return correlation_result(op, op.adjoint(centred), "gi", start);
}

ReconResult dgi(const sensing::Measurement& y, const sensing::SensingOperator& op) {
  const auto start = Clock::now();
  check_pairing(y, op);
  const std::vector<double> ones(op.cols(), 1.0);
  const std::vector<double> bucket = op.forward(ones);  // R_j = sum_k Phi_jk
  const double rbar = mean(bucket);
  if (rbar == 0.0 || !std::isfinite(rbar)) {
    throw NumericError("degenerate calibration: mean total reference intensity is zero");
  }
  const auto yv = y.image.values();
  const double ratio = mean(yv) / rbar;
  std::vector<double> raw = op.adjoint(yv);
  const std::vector<double> background = op.adjoint(bucket);
  for (std::size_t k = 0; k < raw.size(); ++k) raw[k] -= ratio * background[k];
  return correlation_result(op, std::move(raw), "dgi", start);
}

ReconResult cs_reconstruct(const sensing::Measurement& y, const sensing::SensingOperator& op,
                           const ReconConfig& cfg) {
  const auto start = Clock::now();
  cfg.validate();
  check_pairing(y, op);

  const std::size_t nc = op.cols();
  const std::size_t nr = op.rows();
  const auto yv = y.image.values();

  ReconResult res;
  if (cfg.step) {
    res.step = *cfg.step;
    res.lipschitz = 1.0 / *cfg.step;
  } else {
    res.lipschitz = estimate_lipschitz(op, cfg.power_iterations, cfg.mean_weight);
    if (!(res.lipschitz > 0.0)) throw NumericError("operator has zero norm");
    res.step = cfg.step_safety / res.lipschitz;
  }
  const double sigma = cfg.tau_rule == TauRule::noise ? implied_noise_sigma(y) : 0.0;
  if (cfg.tau) {
    res.tau = *cfg.tau;
  } else if (sigma > 0.0) {
    // ||W phi_k||^2 = ||phi_k||^2 - (1 - w^2) (sum_j phi_jk)^2 / M
    const bool unit = op.column_norm() == sensing::ColumnNorm::unit_l2;
    const auto sums = op.adjoint(std::vector<double>(nr, 1.0));
    const double shrink = 1.0 - cfg.mean_weight * cfg.mean_weight;
    double ss = 0.0;
    for (std::size_t k = 0; k < nc; ++k) {
      const double c = unit ? 1.0 : op.column_norms()[k];
      ss += c * c - shrink * sums[k] * sums[k] / static_cast<double>(nr);
    }
    const double col = std::sqrt(std::max(ss, 0.0) / static_cast<double>(nc));
    res.tau = cfg.tau_noise_scale * sigma * col * std::sqrt(2.0 * std::log(static_cast<double>(nc)));
  } else {
    std::vector<double> wy(yv.begin(), yv.end());
    weight_rows(wy, cfg.mean_weight);
    weight_rows(wy, cfg.mean_weight);
    const auto aty = op.adjoint(wy);
    double inf = 0.0;
    for (double v : aty) inf = std::max(inf, std::abs(v));
    res.tau = cfg.tau_fraction * inf;
  }

  auto l1 = [&](std::span<const double> x) {
    if (cfg.transform == Transform::identity) {
      double s = 0.0;
      for (double v : x) s += std::abs(v);
      return s;
    }
    std::vector<double> c(x.begin(), x.end());
    apply_transform(cfg.transform, c, op.n(), op.bands());
    double s = 0.0;
    for (double v : c) s += std::abs(v);
    return s;
  };
  std::vector<double> diff(nr);
  auto objective = [&](std::span<const double> ax, std::span<const double> x) {
    for (std::size_t j = 0; j < nr; ++j) diff[j] = ax[j] - yv[j];
    weight_rows(diff, cfg.mean_weight);
    double r = 0.0;
    for (double d : diff) r += d * d;
    return 0.5 * r + res.tau * l1(x);
  };

  // x: current iterate, z: extrapolated point; ax, az are their images.
  std::vector<double> x(nc, 0.0), x_prev(nc, 0.0), z(nc, 0.0);
  std::vector<double> ax(nr, 0.0), ax_prev(nr, 0.0), az(nr, 0.0);
  std::vector<double> residual(nr), grad(nc);
  const double initial = objective(ax, x);
  double t = 1.0;
  double previous = initial;
  const double threshold = res.step * res.tau;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    const auto it_start = Clock::now();
    for (std::size_t j = 0; j < nr; ++j) residual[j] = az[j] - yv[j];
    weight_rows(residual, cfg.mean_weight);
    weight_rows(residual, cfg.mean_weight);
    op.adjoint(residual, grad);

    x_prev.swap(x);
    ax_prev.swap(ax);
    for (std::size_t k = 0; k < nc; ++k) x[k] = z[k] - res.step * grad[k];
    apply_transform(cfg.transform, x, op.n(), op.bands());
    if (cfg.nonnegative) {
      for (auto& v : x) v = std::max(v - threshold, 0.0);
    } else {
      soft_threshold_inplace(x, threshold);
    }
    apply_inverse_transform(cfg.transform, x, op.n(), op.bands());
    op.forward(x, ax);

    const double obj = objective(ax, x);
    res.objective_trace.push_back(obj);
    if (!std::isfinite(obj) || obj > 10.0 * initial) {
      throw NumericError("FISTA diverged at iteration " + std::to_string(it) +
                         " (objective " + std::to_string(obj) + " vs initial " +
                         std::to_string(initial) + "); use step = auto");
    }

    double dx = 0.0, xn = 0.0;
    for (std::size_t k = 0; k < nc; ++k) {
      dx += (x[k] - x_prev[k]) * (x[k] - x_prev[k]);
      xn += x[k] * x[k];
    }
    res.final_relative_change = xn > 0.0 ? std::sqrt(dx / xn) : (dx > 0.0 ? 1.0 : 0.0);
    res.iterations_used = it;
    res.iteration_ms.push_back(
        std::chrono::duration<double, std::milli>(Clock::now() - it_start).count());
    if (res.final_relative_change <= cfg.tol) break;

    double beta = 0.0;
    if (cfg.restart && obj > previous) {
      t = 1.0;
    } else if (cfg.momentum) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      beta = (t - 1.0) / t_next;
      t = t_next;
    }
    previous = obj;
    for (std::size_t k = 0; k < nc; ++k) z[k] = x[k] + beta * (x[k] - x_prev[k]);
    for (std::size_t j = 0; j < nr; ++j) az[j] = ax[j] + beta * (ax[j] - ax_prev[j]);
  }

  if (cfg.debias) debias_support(op, cfg, yv, x, res);

  res.estimate = to_cube(op, x, "cs_fista");
  res.raw = std::move(x);
  res.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
  return res;
}

ReconResult reconstruct(const sensing::Measurement& y, const sensing::SensingOperator& op,
                        const ReconConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::gi: return gi_correlate(y, op);
    case Algorithm::dgi: return dgi(y, op);
    case Algorithm::cs_fista: return cs_reconstruct(y, op, cfg);
  }
  throw InvalidParameter("unknown algorithm");
}

hsi::HsiCube clamp_for_export(const hsi::HsiCube& cube) {
  hsi::HsiCube out = cube;
  for (auto& v : out.data()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

}  // namespace gisc::recon
