#pragma once

// Secret key rate of the Gaussian-modulated coherent-state protocol with
// heterodyne detection: covariance matrix, mutual information, Holevo bound,
// finite-size corrections and modulation-variance optimisation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>

#include "cvqkd/errors.hpp"
#include "cvqkd/estimation.hpp"
#include "cvqkd/params.hpp"

namespace cvqkd {

inline constexpr double kPhysicalTolerance = 1e-9;

/// Two-mode covariance [[a I, c Z], [c Z, b I]] in shot-noise units.
struct CovarianceState {
  double a = 1.0;
  double b = 1.0;
  double c = 0.0;

  double determinant() const { return (a * b - c * c) * (a * b - c * c); }
};

inline CovarianceState build_covariance(double v_a, double t, double xi, double eta,
                                        double v_el) {
  detail::require(v_a > 0.0, "build_covariance: V_A must be positive");
  detail::require(t >= 0.0, "build_covariance: negative transmittance");
  detail::require(eta > 0.0 && eta <= 1.0, "build_covariance: eta must lie in (0,1]");
  detail::require(v_el >= 0.0, "build_covariance: negative electronic noise");
  CovarianceState cov;
  cov.a = v_a + 1.0;
  cov.b = eta * t * (v_a + xi) + 1.0 + v_el;
  cov.c = std::sqrt(eta * t * (v_a * v_a + 2.0 * v_a));
  if (cov.a * cov.b - cov.c * cov.c < 1.0 - kPhysicalTolerance || cov.b < 1.0 - kPhysicalTolerance)
    throw numerical_domain_error("build_covariance: unphysical state (excess noise too negative)");
  return cov;
}

/// von Neumann entropy function G(x) = (x+1) log2(x+1) - x log2 x.
inline double entropy_g(double x) {
  detail::require(x >= 0.0, "entropy_g: argument must be non-negative");
  if (x == 0.0) return 0.0;
  return (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
}

namespace detail {

// Entropy of a mode with symplectic eigenvalue nu, tolerating round-off below 1.
inline double mode_entropy(double nu) {
  if (nu < 1.0 - kPhysicalTolerance)
    throw numerical_domain_error("symplectic eigenvalue below 1");
  return entropy_g(std::max(0.0, (nu - 1.0) / 2.0));
}

// Roots of x^2 - s x + p = 0 taken as squared symplectic eigenvalues.
inline std::pair<double, double> eigen_pair(double s, double p) {
  double disc = s * s - 4.0 * p;
  if (disc < 0.0) {
    if (disc < -kPhysicalTolerance * std::max(1.0, s * s))
      throw numerical_domain_error("symplectic spectrum: negative discriminant");
    disc = 0.0;
  }
  const double r = std::sqrt(disc);
  return {std::sqrt(0.5 * (s + r)), std::sqrt(std::max(0.0, 0.5 * (s - r)))};
}

}  // namespace detail

struct SymplecticSpectrum {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
};

inline SymplecticSpectrum symplectic_spectrum(const CovarianceState& cov) {
  const double delta = cov.a * cov.a + cov.b * cov.b - 2.0 * cov.c * cov.c;
  const double det_sqrt = cov.a * cov.b - cov.c * cov.c;
  // Delta^2 - 4 D = (a-b)^2 ((a+b)^2 - 4c^2); factored to avoid cancellation.
  const double inner = (cov.a + cov.b) * (cov.a + cov.b) - 4.0 * cov.c * cov.c;
  if (inner < -kPhysicalTolerance)
    throw numerical_domain_error("symplectic_spectrum: Delta^2 < 4 D");
  const double r = std::abs(cov.a - cov.b) * std::sqrt(std::max(0.0, inner));
  SymplecticSpectrum s;
  s.lambda1 = std::sqrt(0.5 * (delta + r));
  // lambda1^2 lambda2^2 = D keeps the small root accurate.
  s.lambda2 = det_sqrt / s.lambda1;
  if (s.lambda2 < 1.0 - kPhysicalTolerance)
    throw numerical_domain_error("symplectic_spectrum: state is not physical");
  return s;
}

/// Alice-Bob mutual information for heterodyne detection (bits/symbol).
inline double mutual_information(const CovarianceState& cov) {
  const double v_b = cov.b;
  const double v_b_given_a = cov.b - cov.c * cov.c / (cov.a + 1.0);
  return std::max(0.0, std::log2((v_b + 1.0) / (v_b_given_a + 1.0)));
}

/// Symplectic eigenvalue of Alice's mode conditioned on Bob's heterodyne.
inline double conditional_eigenvalue(const CovarianceState& cov) {
  return cov.a - cov.c * cov.c / (cov.b + 1.0);
}

/// Holevo bound taken over the Alice-Bob state itself (detector untrusted).
inline double holevo_bound(const CovarianceState& cov) {
  const SymplecticSpectrum s = symplectic_spectrum(cov);
  const double l3 = conditional_eigenvalue(cov);
  const double chi = detail::mode_entropy(s.lambda1) + detail::mode_entropy(s.lambda2) -
                     detail::mode_entropy(l3);
  if (chi < -kPhysicalTolerance) throw numerical_domain_error("holevo_bound: negative result");
  return std::max(0.0, chi);
}

/// Holevo bound with Bob's detector (efficiency eta, electronic noise v_el)
/// trusted: Eve purifies the channel output, and Bob's imperfect detector is
/// an eta beamsplitter fed by one arm of a thermal EPR pair.
inline double holevo_bound_trusted(double v_a, double t, double xi, double eta, double v_el) {
  detail::require(v_a > 0.0 && t >= 0.0 && eta > 0.0 && eta <= 1.0 && v_el >= 0.0,
                  "holevo_bound_trusted: invalid parameters");
  if (t == 0.0) return 0.0;
  const double v = v_a + 1.0;
  const double chi_het = (2.0 - eta + v_el) / eta;
  const double chi_line = 1.0 / t - 1.0 + xi;
  const double chi_tot = chi_line + chi_het / t;

  const double big_a = v * v * (1.0 - 2.0 * t) + 2.0 * t + t * t * (v + chi_line) * (v + chi_line);
  const double big_b = t * t * (v * chi_line + 1.0) * (v * chi_line + 1.0);
  const double norm = t * (v + chi_tot);
  const double big_c = (big_a * chi_het * chi_het + big_b + 1.0 +
                        2.0 * chi_het * (v * std::sqrt(big_b) + t * (v + chi_line)) +
                        2.0 * t * (v * v - 1.0)) /
                       (norm * norm);
  const double big_d = std::pow((v + std::sqrt(big_b) * chi_het) / norm, 2);

  const auto [l1, l2] = detail::eigen_pair(big_a, big_b);
  const auto [l3, l4] = detail::eigen_pair(big_c, big_d);
  const double chi = detail::mode_entropy(l1) + detail::mode_entropy(l2) -
                     detail::mode_entropy(l3) - detail::mode_entropy(l4);
  if (chi < -kPhysicalTolerance)
    throw numerical_domain_error("holevo_bound_trusted: negative result");
  return std::max(0.0, chi);
}

/// Trusted-detector bound recovered from a covariance built with (eta, v_el).
inline double holevo_bound_trusted(const CovarianceState& cov, double eta, double v_el) {
  const double v_a = cov.a - 1.0;
  const double eta_t = cov.c * cov.c / (v_a * v_a + 2.0 * v_a);
  if (eta_t == 0.0) return 0.0;
  const double xi = (cov.b - 1.0 - v_el) / eta_t - v_a;
  return holevo_bound_trusted(v_a, eta_t / eta, xi, eta, v_el);
}

/// beta I_AB - chi_EB over the given covariance (detector untrusted).
inline double skr_asymptotic(const CovarianceState& cov, double beta) {
  return beta * mutual_information(cov) - holevo_bound(cov);
}

inline double holevo_bound(double t, double xi, const LinkConfig& link) {
  if (link.detector_noise == DetectorNoise::trusted)
    return holevo_bound_trusted(link.v_a, t, xi, link.eta, link.v_el);
  return holevo_bound(build_covariance(link.v_a, t, xi, link.eta, link.v_el));
}

/// Asymptotic key rate K_inf = beta I_AB - chi_EB for the link's detector model.
inline double key_rate_asymptotic(double t, double xi, const LinkConfig& link) {
  const CovarianceState cov = build_covariance(link.v_a, t, xi, link.eta, link.v_el);
  return link.beta * mutual_information(cov) - holevo_bound(t, xi, link);
}

struct FiniteSizeTerms {
  double delta_aep = 0.0;
  double theta = 0.0;
};

inline FiniteSizeTerms finite_size_terms(const FiniteSizeConfig& cfg) {
  cfg.validate();
  FiniteSizeTerms out;
  out.delta_aep = 4.0 * std::log2(2.0 * std::sqrt(cfg.d_alphabet) + 1.0) *
                  std::sqrt(std::log2(18.0 / (cfg.p_ec * cfg.p_ec * std::pow(cfg.eps_s, 4))));
  out.theta = std::log2(cfg.p_ec * (1.0 - cfg.eps_s * cfg.eps_s / 3.0)) +
              2.0 * std::log2(std::numbers::sqrt2 * cfg.eps_h);
  return out;
}

struct SkrReport {
  double i_ab = 0.0;          // at worst-case parameters
  double chi_eb = 0.0;        // at worst-case parameters
  double k_asymptotic = 0.0;  // at the nominal (T, xi)
  double k_finite = 0.0;      // signed
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  ChannelParams worst_case;

  double k_asymptotic_clamped() const { return std::max(0.0, k_asymptotic); }
  double k_finite_clamped() const { return std::max(0.0, k_finite); }
};

inline SkrReport skr_report(double t, double xi, const LinkConfig& link,
                            const FiniteSizeConfig& cfg) {
  link.validate();
  SkrReport rep;
  rep.k_asymptotic = key_rate_asymptotic(t, xi, link);
  rep.worst_case = worst_case_params(t, xi, cfg, link);
  const ChannelParams& wc = rep.worst_case;
  const CovarianceState cov = build_covariance(link.v_a, wc.t, wc.xi, link.eta, link.v_el);
  rep.i_ab = mutual_information(cov);
  rep.chi_eb = holevo_bound(wc.t, wc.xi, link);
  const SymplecticSpectrum s = symplectic_spectrum(cov);
  rep.lambda1 = s.lambda1;
  rep.lambda2 = s.lambda2;
  rep.lambda3 = conditional_eigenvalue(cov);

  const FiniteSizeTerms terms = finite_size_terms(cfg);
  const double n = cfg.key_symbols();
  const double k_wc = link.beta * rep.i_ab - rep.chi_eb;
  rep.k_finite = n * cfg.p_ec / cfg.block_size *
                 (k_wc - terms.delta_aep / std::sqrt(n) + terms.theta / n);
  return rep;
}

/// Finite-size key rate (bits/pulse), signed.
inline double skr_finite(double t, double xi, const LinkConfig& link,
                         const FiniteSizeConfig& cfg) {
  return skr_report(t, xi, link, cfg).k_finite;
}

/// Finite-size rate when `cfg` is given, asymptotic rate otherwise.
inline double key_rate(double t, double xi, const LinkConfig& link,
                       const std::optional<FiniteSizeConfig>& cfg) {
  return cfg ? skr_finite(t, xi, link, *cfg) : key_rate_asymptotic(t, xi, link);
}

struct VaRange {
  double lo = 1.0;
  double hi = 10.0;
};

struct ModulationOptimum {
  double v_a = 0.0;
  double k = 0.0;  // clamped at 0
};

/// Maximise the key rate over V_A in `range`. `xi_of_va` supplies the excess
/// noise, which may itself depend on the modulation (LO intensity noise).
/// A 100-point scan brackets the maximum, golden-section refines it to 1e-4.
inline ModulationOptimum optimize_modulation(double t, const std::function<double(double)>& xi_of_va,
                                             const LinkConfig& link,
                                             const std::optional<FiniteSizeConfig>& cfg,
                                             VaRange range = {}) {
  detail::require(range.lo > 0.0 && range.hi >= range.lo, "optimize_modulation: bad V_A range");
  const auto rate = [&](double v_a) {
    LinkConfig l = link;
    l.v_a = v_a;
    try {
      return key_rate(t, xi_of_va(v_a), l, cfg);
    } catch (const estimation_failure&) {
      return -std::numeric_limits<double>::infinity();
    } catch (const numerical_domain_error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  constexpr int kScan = 100;
  const double step = (range.hi - range.lo) / (kScan - 1);
  int best = 0;
  double best_k = rate(range.lo);
  for (int i = 1; i < kScan && step > 0.0; ++i) {
    const double k = rate(range.lo + i * step);
    if (k > best_k) {
      best_k = k;
      best = i;
    }
  }
  const double best_v = range.lo + best * step;
  if (!(best_k > 0.0)) return {best_v, 0.0};

  double lo = std::max(range.lo, best_v - step);
  double hi = std::min(range.hi, best_v + step);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = rate(x1), f2 = rate(x2);
  while (hi - lo > 1e-4) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = rate(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = rate(x1);
    }
  }
  const double v = 0.5 * (lo + hi);
  const double k = rate(v);
  if (k >= best_k) return {v, k};
  return {best_v, best_k};
}

inline ModulationOptimum optimize_modulation(double t, double xi, const LinkConfig& link,
                                             const std::optional<FiniteSizeConfig>& cfg,
                                             VaRange range = {}) {
  return optimize_modulation(t, [xi](double) { return xi; }, link, cfg, range);
}

}  // namespace cvqkd
