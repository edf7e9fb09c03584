#pragma once

// Parameter estimation from correlated quadratures and from LO moments,
// including finite-size worst-case bounds.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "cvqkd/errors.hpp"
#include "cvqkd/params.hpp"
#include "cvqkd/rng.hpp"

namespace cvqkd {

/// Transmittance and excess noise of a (possibly effective) channel.
struct ChannelParams {
  double t = 0.0;
  double xi = 0.0;
};

/// Paired quadrature samples in shot-noise units.
struct QuadratureBatch {
  std::vector<double> x_alice;
  std::vector<double> x_bob;
  double n0 = 1.0;
  double v_el = 0.0;
  double eta = 1.0;

  std::size_t size() const { return x_alice.size(); }

  void validate() const {
    detail::require(x_alice.size() == x_bob.size(), "quadratures: length mismatch");
    detail::require(x_alice.size() > 1, "quadratures: need at least two symbols");
    detail::require(n0 > 0.0 && v_el >= 0.0 && eta > 0.0 && eta <= 1.0,
                    "quadratures: invalid detector parameters");
  }
};

struct EstimatedChannel {
  double t_hat = 0.0;       // sqrt(eta) * E[sqrt T]
  double sigma_r_sq = 0.0;  // residual noise variance
  double t_estimate = 0.0;  // t_hat^2 / eta
  double xi_estimate = 0.0;
};

/// Least-squares slope sum(xA xB) / sum(xA^2).
inline double estimate_t(const QuadratureBatch& batch) {
  batch.validate();
  double sab = 0.0, saa = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    sab += batch.x_alice[i] * batch.x_bob[i];
    saa += batch.x_alice[i] * batch.x_alice[i];
  }
  if (saa <= 0.0) throw invalid_input("estimate_t: Alice's quadratures are all zero");
  return sab / saa;
}

/// Mean squared residual of x_B - t_hat x_A.
inline double estimate_noise(const QuadratureBatch& batch, double t_hat) {
  batch.validate();
  double acc = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double r = batch.x_bob[i] - t_hat * batch.x_alice[i];
    acc += r * r;
  }
  return acc / static_cast<double>(batch.size());
}

/// E[T] from Bob's quadrature variance, given independently measured
/// V_A and xi: (E[xB^2] - N0 - v_el) / (eta V_A N0 + eta xi).
inline double estimate_mean_transmittance(const QuadratureBatch& batch, double v_a, double xi) {
  batch.validate();
  double sbb = 0.0;
  for (double x : batch.x_bob) sbb += x * x;
  sbb /= static_cast<double>(batch.size());
  return (sbb - batch.n0 - batch.v_el) / (batch.eta * v_a * batch.n0 + batch.eta * xi);
}

/// Regression route: T = t_hat^2/eta and xi = (sigma_R^2 - v_el - N0)/(eta T).
inline EstimatedChannel estimate_channel(const QuadratureBatch& batch) {
  EstimatedChannel out;
  out.t_hat = estimate_t(batch);
  out.sigma_r_sq = estimate_noise(batch, out.t_hat);
  out.t_estimate = out.t_hat * out.t_hat / batch.eta;
  if (out.t_estimate <= 0.0) throw blocked_channel("estimate_channel: zero transmittance");
  out.xi_estimate = (out.sigma_r_sq - batch.v_el - batch.n0) / (batch.eta * out.t_estimate);
  return out;
}

/// Generate x_B = sqrt(eta T_i) x_A + z_i with x_A ~ N(0, V_A) and
/// z_i ~ N(0, N0 + v_el + eta T_i xi), one symbol per transmittance draw.
inline QuadratureBatch simulate_quadratures(std::span<const double> transmittances, double v_a,
                                            double xi, double eta, double v_el, double n0,
                                            std::uint64_t seed) {
  detail::require(v_a > 0.0 && xi >= 0.0, "simulate_quadratures: invalid V_A or xi");
  QuadratureBatch batch;
  batch.n0 = n0;
  batch.v_el = v_el;
  batch.eta = eta;
  batch.x_alice.reserve(transmittances.size());
  batch.x_bob.reserve(transmittances.size());
  Engine eng = make_engine(seed, 0x9a);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double sa = std::sqrt(v_a);
  for (double t : transmittances) {
    const double xa = sa * unit(eng);
    const double z = std::sqrt(n0 + v_el + eta * t * xi) * unit(eng);
    batch.x_alice.push_back(xa);
    batch.x_bob.push_back(std::sqrt(eta * t) * xa + z);
  }
  return batch;
}

/// Effective channel inferred from LO moments when the transmittance
/// fluctuates: T = (E sqrt T)^2, xi' = E[T]/(E sqrt T)^2 (V_A + xi) - V_A.
inline ChannelParams attacked_estimators(double e_sqrt_t, double e_t, double v_a, double xi) {
  if (!(e_sqrt_t > 0.0)) throw blocked_channel("attacked_estimators: E[sqrt T] is zero");
  detail::require(e_t >= 0.0, "attacked_estimators: negative E[T]");
  const double t_hat = e_sqrt_t * e_sqrt_t;
  return {t_hat, e_t / t_hat * (v_a + xi) - v_a};
}

/// Confidence multiplier w = sqrt(2) erfinv(1 - eps_pe), solved as
/// erfc(w / sqrt 2) = eps_pe by bisection.
inline double w_factor(double eps_pe) {
  detail::require(eps_pe > 0.0 && eps_pe <= 1.0, "w_factor: eps_pe must lie in (0,1]");
  if (eps_pe == 1.0) return 0.0;
  const auto f = [&](double w) { return std::erfc(w / std::numbers::sqrt2) - eps_pe; };
  double lo = 0.0, hi = 1.0;
  while (f(hi) > 0.0) hi *= 2.0;  // erfc decreasing
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Gaussian worst-case channel parameters for `m` estimation symbols.
inline ChannelParams worst_case_params(double t, double xi, const FiniteSizeConfig& cfg,
                                       const LinkConfig& link) {
  cfg.validate();
  if (!(t > 0.0)) throw estimation_failure("worst_case_params: transmittance must be positive");
  const double w = w_factor(cfg.eps_pe);
  const double m = cfg.pe_symbols;
  const double sigma_t =
      2.0 * t / std::sqrt(cfg.v0 * m) *
      std::sqrt(cfg.c_pe + (xi + (cfg.v0 + link.v_el) / (link.eta * t)) / link.v_a);
  const double t_wc = t - w * sigma_t;
  if (!(t_wc > 0.0))
    throw estimation_failure("worst_case_params: block too small, T_wc <= 0");
  const double sigma_xi =
      std::sqrt(2.0 / (cfg.v0 * m)) * (link.eta * t + cfg.v0 + link.v_el) / (link.eta * t_wc);
  return {t_wc, t / t_wc * xi + w * sigma_xi};
}

/// Channel estimate when the attack is active for a fraction f of the block
/// and Bob averages over everything.
inline ChannelParams weighted_params(double f_attack, double p, double g, double t0, double v_a,
                                     double xi) {
  detail::require(f_attack >= 0.0 && f_attack <= 1.0, "weighted_params: f must lie in [0,1]");
  if (f_attack == 0.0) return {t0, xi};
  if (f_attack == 1.0) {
    if (!(p > 0.0)) throw blocked_channel("weighted_params: channel fully blocked");
    return {p * p * g * t0, (v_a + xi) / p - v_a};
  }
  const double f = f_attack;
  const double q = 1.0 - f;
  const double spread = f * f * p * p * g + 2.0 * q * f * p * std::sqrt(g) + q * q;
  if (!(spread > 0.0)) throw blocked_channel("weighted_params: channel fully blocked");
  return {t0 * spread, (f * p * g + q) / spread * (v_a + xi) - v_a};
}

}  // namespace cvqkd
