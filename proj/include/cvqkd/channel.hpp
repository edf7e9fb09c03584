#pragma once

// Fiber transmittance, channel-amplification gain and the tampered
// transmittance distribution seen through the local oscillator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cvqkd/errors.hpp"
#include "cvqkd/rng.hpp"

namespace cvqkd {

struct FiberSegment {
  double loss_db_per_km = 0.2;
  double length_km = 0.0;
};

/// Power transmittance 10^(-loss*length/10) of a fiber span.
inline double transmittance(const FiberSegment& seg) {
  detail::require(seg.loss_db_per_km >= 0.0, "transmittance: negative fiber loss");
  detail::require(seg.length_km >= 0.0, "transmittance: negative fiber length");
  return std::pow(10.0, -seg.loss_db_per_km * seg.length_km / 10.0);
}

/// Gain g obtained by swapping `d_eve_km` of fiber with loss `loss` for
/// fiber with loss `loss_prime`. g < 1 when the replacement is lossier.
inline double amplification_gain(double loss, double loss_prime, double d_eve_km) {
  detail::require(d_eve_km >= 0.0, "amplification_gain: negative distance");
  detail::require(loss >= 0.0 && loss_prime >= 0.0, "amplification_gain: negative loss");
  return std::pow(10.0, (loss - loss_prime) * d_eve_km / 10.0);
}

/// Excess noise including the LO relative-intensity-noise contribution.
inline double total_excess_noise(double xi_b, double sigma_rin_lo, double v_a) {
  detail::require(xi_b >= 0.0 && sigma_rin_lo >= 0.0 && v_a >= 0.0,
                  "total_excess_noise: inputs must be non-negative");
  return xi_b + (v_a + 1.0) / 4.0 * sigma_rin_lo;
}

enum class AttackKind { normal = 0, ca = 1, ca_dos = 2, dos = 3 };

inline constexpr std::size_t kNumClasses = 4;

inline std::string_view to_string(AttackKind k) {
  switch (k) {
    case AttackKind::normal: return "Normal";
    case AttackKind::ca: return "CA";
    case AttackKind::ca_dos: return "CADoS";
    case AttackKind::dos: return "DoS";
  }
  return "?";
}

inline AttackKind attack_kind_from_string(std::string_view s) {
  if (s == "Normal" || s == "normal") return AttackKind::normal;
  if (s == "CA" || s == "ca") return AttackKind::ca;
  if (s == "CADoS" || s == "ca-dos" || s == "cados" || s == "CA-DoS") return AttackKind::ca_dos;
  if (s == "DoS" || s == "dos") return AttackKind::dos;
  throw invalid_input("unknown attack kind '" + std::string(s) + "'");
}

struct AttackConfig {
  AttackKind kind = AttackKind::normal;
  double g = 1.0;
  double p = 1.0;
  double d_eve_km = 0.0;
  double d_bob_km = 0.0;
  double f_attack = 1.0;
  double sigma_rin_lo = 0.0;

  // Tolerance on the CA-DoS tuning p = 1/sqrt(g); published scenarios round p
  // to two decimals (e.g. g=1.12, p=0.94).
  static constexpr double kCaDosTolerance = 0.01;

  double total_length_km() const { return d_eve_km + d_bob_km; }

  void validate() const {
    detail::require(g > 0.0, "attack: gain must be positive");
    detail::require(p >= 0.0 && p <= 1.0, "attack: p must lie in [0,1]");
    detail::require(d_eve_km >= 0.0 && d_bob_km >= 0.0, "attack: negative distance");
    detail::require(f_attack >= 0.0 && f_attack <= 1.0, "attack: f_attack must lie in [0,1]");
    detail::require(sigma_rin_lo >= 0.0, "attack: negative RIN");
    switch (kind) {
      case AttackKind::normal:
        detail::require(g == 1.0 && p == 1.0, "attack: normal channel requires g = p = 1");
        break;
      case AttackKind::ca:
        detail::require(p == 1.0 && g > 1.0, "attack: CA requires p = 1 and g > 1");
        break;
      case AttackKind::ca_dos:
        detail::require(g > 1.0 && std::abs(p - 1.0 / std::sqrt(g)) <= kCaDosTolerance,
                        "attack: CA-DoS requires g > 1 and p = 1/sqrt(g)");
        break;
      case AttackKind::dos:
        detail::require(p < 1.0 && g <= 1.0, "attack: DoS requires p < 1 and g <= 1");
        break;
    }
  }

  void validate(double total_length_km_expected) const {
    validate();
    detail::require(std::abs(total_length_km() - total_length_km_expected) <= 1e-9,
                    "attack: d_eve + d_bob must equal the link length");
  }

  static AttackConfig normal(double d_eve, double d_bob, double sigma) {
    return {AttackKind::normal, 1.0, 1.0, d_eve, d_bob, 1.0, sigma};
  }
  static AttackConfig ca(double g, double d_eve, double d_bob, double sigma) {
    return {AttackKind::ca, g, 1.0, d_eve, d_bob, 1.0, sigma};
  }
  static AttackConfig ca_dos(double g, double d_eve, double d_bob, double sigma) {
    return {AttackKind::ca_dos, g, 1.0 / std::sqrt(g), d_eve, d_bob, 1.0, sigma};
  }
  static AttackConfig ca_dos(double g, double p, double d_eve, double d_bob, double sigma) {
    return {AttackKind::ca_dos, g, p, d_eve, d_bob, 1.0, sigma};
  }
  static AttackConfig dos(double g, double p, double d_eve, double d_bob, double sigma) {
    return {AttackKind::dos, g, p, d_eve, d_bob, 1.0, sigma};
  }
};

struct Moments {
  double e_sqrt_t = 0.0;
  double e_t = 0.0;
};

/// Two-point moments E[sqrt T] = p sqrt(g T0), E[T] = p g T0, ignoring LO noise.
inline Moments analytic_moments(const AttackConfig& cfg, double t0) {
  detail::require(t0 > 0.0 && t0 <= 1.0, "analytic_moments: T0 must lie in (0,1]");
  cfg.validate();
  return {cfg.p * std::sqrt(cfg.g * t0), cfg.p * cfg.g * t0};
}

namespace detail {

// Moments of the normal N(mu, s) truncated to [0, 1]: E[X], E[sqrt X].
inline Moments truncated_normal_moments(double mu, double s) {
  if (s == 0.0) return {std::sqrt(mu), mu};
  const double inv = 1.0 / (s * std::sqrt(2.0));
  const auto pdf = [&](double x) { return std::exp(-(x - mu) * (x - mu) / (2 * s * s)); };
  const double z = 0.5 * (std::erf((1.0 - mu) * inv) - std::erf((0.0 - mu) * inv)) * s *
                   std::sqrt(2.0 * std::numbers::pi);
  using boost::math::quadrature::gauss_kronrod;
  const double lo = std::max(0.0, mu - 12.0 * s);
  const double hi = std::min(1.0, mu + 12.0 * s);
  const double m1 = gauss_kronrod<double, 61>::integrate(
      [&](double x) { return x * pdf(x); }, lo, hi, 15, 1e-13);
  const double mh = gauss_kronrod<double, 61>::integrate(
      [&](double x) { return std::sqrt(x) * pdf(x); }, lo, hi, 15, 1e-13);
  return {mh / z, m1 / z};
}

}  // namespace detail

/// Moments of the simulated LO transmittance including the truncated
/// multiplicative RIN factor. Reduces to analytic_moments when sigma = 0.
inline Moments rin_moments(const AttackConfig& cfg, double loss_db_per_km) {
  cfg.validate();
  const double t_eve = transmittance({loss_db_per_km, cfg.d_eve_km});
  const double t_bob = transmittance({loss_db_per_km, cfg.d_bob_km});
  const Moments nu = detail::truncated_normal_moments(t_bob, cfg.sigma_rin_lo * t_bob);
  const double scale = cfg.g * t_eve;
  return {cfg.p * std::sqrt(scale) * nu.e_sqrt_t, cfg.p * scale * nu.e_t};
}

struct TransmittanceSamples {
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::size_t count() const { return values.size(); }
};

/// Draw T_i = b_i * g * T_eve * nu_i with b_i ~ Bernoulli(p) and nu_i a
/// normal(T_bob, sigma*T_bob) truncated to [0,1] by rejection. Deterministic
/// for a fixed (seed, stream).
inline TransmittanceSamples sample_transmittance(const AttackConfig& cfg, double loss_db_per_km,
                                                 std::size_t n, std::uint64_t seed,
                                                 std::uint64_t stream = 0) {
  detail::require(n > 0, "sample_transmittance: n must be positive");
  cfg.validate();
  const double t_eve = transmittance({loss_db_per_km, cfg.d_eve_km});
  const double t_bob = transmittance({loss_db_per_km, cfg.d_bob_km});
  const double scale = cfg.g * t_eve;
  const double sd = cfg.sigma_rin_lo * t_bob;

  Engine eng = make_engine(seed, stream);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(t_bob, sd > 0.0 ? sd : 1.0);

  TransmittanceSamples out;
  out.seed = seed;
  out.stream = stream;
  out.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool on = unif(eng) < cfg.p;
    double nu = t_bob;
    if (sd > 0.0) {
      int tries = 0;
      do {
        nu = gauss(eng);
        if (++tries > 1'000'000)
          throw numerical_domain_error("sample_transmittance: truncated normal rejection stalled");
      } while (nu < 0.0 || nu > 1.0);
    }
    const double t = on ? scale * nu : 0.0;
    out.values.push_back(std::clamp(t, 0.0, 1.0));
  }
  return out;
}

}  // namespace cvqkd
