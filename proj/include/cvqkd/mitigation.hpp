#pragma once

// Key rate under intermittent channel tampering, with and without
// post-selection of the attacked sub-channel.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "cvqkd/channel.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/estimation.hpp"
#include "cvqkd/params.hpp"
#include "cvqkd/security.hpp"

namespace cvqkd {

/// Fraction of attacked symbols binned as unattacked (false negatives) and
/// of unattacked symbols binned as attacked (false positives).
struct Misclassification {
  double false_negative = 0.0;
  double false_positive = 0.0;

  void validate() const {
    detail::require(false_negative >= 0.0 && false_negative <= 1.0 && false_positive >= 0.0 &&
                        false_positive <= 1.0,
                    "misclassification rates must lie in [0,1]");
  }
};

enum CellFlag : std::uint32_t {
  kCellOk = 0,
  kNoTamper = 1u << 0,            // D_Eve = 0, no fiber to replace
  kEstimationFailure = 1u << 1,   // some rate had no usable worst-case estimate
  kNumericalFailure = 1u << 2,    // unphysical state in some rate
  kClamped = 1u << 3,             // a reported rate was clamped to 0
};

inline std::string flags_to_string(std::uint32_t f) {
  if (f == kCellOk) return "ok";
  std::string s;
  const auto add = [&](std::uint32_t bit, const char* name) {
    if (f & bit) s += s.empty() ? name : std::string("|") + name;
  };
  add(kNoTamper, "no_tamper");
  add(kEstimationFailure, "estimation_failure");
  add(kNumericalFailure, "numerical_failure");
  add(kClamped, "clamped");
  return s;
}

namespace detail {

inline double link_t0(const LinkConfig& link) {
  return transmittance({link.loss_db_per_km, link.total_length_km});
}

inline double link_xi(const LinkConfig& link) {
  return total_excess_noise(link.xi_b, link.sigma_rin_lo, link.v_a);
}

// Signed rate on an effective channel; failures count as zero key.
inline double guarded_rate(const ChannelParams& ch, const LinkConfig& link,
                           const std::optional<FiniteSizeConfig>& cfg, std::uint32_t* flags) {
  if (!(ch.t > 0.0)) return 0.0;
  try {
    return key_rate(ch.t, ch.xi, link, cfg);
  } catch (const estimation_failure&) {
    if (flags) *flags |= kEstimationFailure;
  } catch (const numerical_domain_error&) {
    if (flags) *flags |= kNumericalFailure;
  }
  return 0.0;
}

inline void check_attack(const AttackConfig& attack, const LinkConfig& link) {
  link.validate();
  attack.validate(link.total_length_km);
}

}  // namespace detail

/// Rate when Bob estimates the channel over the whole block, unaware of the
/// attack. The excess noise is taken from `link` (xi_B and sigma_rin_lo).
inline double attacked_skr(const AttackConfig& attack, const LinkConfig& link,
                           const std::optional<FiniteSizeConfig>& cfg,
                           std::uint32_t* flags = nullptr) {
  detail::check_attack(attack, link);
  const ChannelParams est = weighted_params(attack.f_attack, attack.p, attack.g, detail::link_t0(link),
                                            link.v_a, detail::link_xi(link));
  return detail::guarded_rate(est, link, cfg, flags);
}

/// Rate after binning the block into unattacked and attacked sub-channels
/// and running each through its own estimation and finite-size accounting.
/// Sub-channel rates enter unclamped.
inline double post_selected_skr(const AttackConfig& attack, const LinkConfig& link,
                                const std::optional<FiniteSizeConfig>& cfg,
                                const Misclassification& mis = {},
                                std::uint32_t* flags = nullptr) {
  detail::check_attack(attack, link);
  mis.validate();
  const double f = attack.f_attack;
  const double t0 = detail::link_t0(link);
  const double xi = detail::link_xi(link);

  // Bin weights and the attacked share inside each bin.
  const double w_clean = (1.0 - f) * (1.0 - mis.false_positive) + f * mis.false_negative;
  const double w_attack = f * (1.0 - mis.false_negative) + (1.0 - f) * mis.false_positive;
  const auto bin_rate = [&](double weight, double attacked_share) {
    if (weight <= 0.0) return 0.0;
    std::optional<FiniteSizeConfig> sub;
    if (cfg) sub = cfg->scaled(std::min(1.0, weight));
    ChannelParams ch{0.0, 0.0};
    try {
      ch = weighted_params(std::clamp(attacked_share, 0.0, 1.0), attack.p, attack.g, t0, link.v_a, xi);
    } catch (const blocked_channel&) {
      return 0.0;
    }
    return weight * detail::guarded_rate(ch, link, sub, flags);
  };
  const double share_clean = w_clean > 0.0 ? f * mis.false_negative / w_clean : 0.0;
  const double share_attack = w_attack > 0.0 ? f * (1.0 - mis.false_negative) / w_attack : 0.0;
  return bin_rate(w_clean, share_clean) + bin_rate(w_attack, share_attack);
}

struct MitigationResult {
  double d_eve_km = 0.0;
  double sigma_rin_lo = 0.0;
  double k0 = 0.0;
  double k_attack = 0.0;
  double k_ps = 0.0;
  double improvement = 0.0;  // k_ps - k_attack, both clamped
  double v_a_opt = 0.0;
  double raw_k0 = 0.0;
  double raw_k_attack = 0.0;
  double raw_k_ps = 0.0;
  std::uint32_t flags = kCellOk;

  double raw_improvement() const { return raw_k_ps - raw_k_attack; }
};

struct SweepGrid {
  std::vector<double> d_eve_values;
  std::vector<double> sigma_values;
  LinkConfig link;
  std::optional<FiniteSizeConfig> finite = FiniteSizeConfig{};
  AttackKind attack = AttackKind::ca;
  double f_attack = 0.5;
  double loss_prime_db_per_km = 0.15;
  Misclassification misclassification;
  VaRange va_range;

  void validate() const {
    link.validate();
    if (finite) finite->validate();
    misclassification.validate();
    detail::require(!d_eve_values.empty() && !sigma_values.empty(), "sweep: empty grid axis");
    detail::require(attack == AttackKind::ca || attack == AttackKind::ca_dos,
                    "sweep: attack must be CA or CADoS");
    detail::require(f_attack >= 0.0 && f_attack <= 1.0, "sweep: f_attack must lie in [0,1]");
    detail::require(loss_prime_db_per_km >= 0.0 && loss_prime_db_per_km < link.loss_db_per_km,
                    "sweep: replacement fiber must have lower loss");
    const auto monotone = [](const std::vector<double>& v) {
      return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
    };
    detail::require(monotone(d_eve_values) && monotone(sigma_values),
                    "sweep: axes must be strictly increasing");
    detail::require(d_eve_values.front() >= 0.0 && d_eve_values.back() <= link.total_length_km,
                    "sweep: D_Eve must lie within the link");
    detail::require(sigma_values.front() >= 0.0, "sweep: sigma must be non-negative");
  }

  static std::vector<double> linspace(double lo, double hi, std::size_t n) {
    detail::require(n >= 1, "linspace: need at least one point");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
  }

  /// D_Eve in [0, 40] km and sigma in [0, 0.1], 40 km link, f = 0.5.
  static SweepGrid standard(AttackKind kind, std::size_t n_d = 50, std::size_t n_sigma = 50) {
    SweepGrid g;
    g.attack = kind;
    g.d_eve_values = linspace(0.0, g.link.total_length_km, n_d);
    g.sigma_values = linspace(0.0, 0.1, n_sigma);
    return g;
  }
};

namespace detail {

inline AttackConfig grid_attack(const SweepGrid& grid, double d_eve, double sigma) {
  const double g = amplification_gain(grid.link.loss_db_per_km, grid.loss_prime_db_per_km, d_eve);
  const double d_bob = grid.link.total_length_km - d_eve;
  AttackConfig a = grid.attack == AttackKind::ca ? AttackConfig::ca(g, d_eve, d_bob, sigma)
                                                 : AttackConfig::ca_dos(g, d_eve, d_bob, sigma);
  a.f_attack = grid.f_attack;
  return a;
}

// Best V_A for the unattacked channel at this RIN level.
inline ModulationOptimum column_modulation(const SweepGrid& grid, double sigma) {
  LinkConfig link = grid.link;
  link.sigma_rin_lo = sigma;
  return optimize_modulation(
      link_t0(link), [&](double v_a) { return total_excess_noise(link.xi_b, sigma, v_a); }, link,
      grid.finite, grid.va_range);
}

inline MitigationResult evaluate_cell(const SweepGrid& grid, double d_eve, double sigma,
                                      double v_a) {
  MitigationResult r;
  r.d_eve_km = d_eve;
  r.sigma_rin_lo = sigma;
  r.v_a_opt = v_a;
  LinkConfig link = grid.link;
  link.sigma_rin_lo = sigma;
  link.v_a = v_a;
  r.raw_k0 = guarded_rate({link_t0(link), link_xi(link)}, link, grid.finite, &r.flags);
  if (amplification_gain(link.loss_db_per_km, grid.loss_prime_db_per_km, d_eve) <= 1.0) {
    r.flags |= kNoTamper;
    r.raw_k_attack = r.raw_k_ps = r.raw_k0;
  } else {
    const AttackConfig a = grid_attack(grid, d_eve, sigma);
    r.raw_k_attack = attacked_skr(a, link, grid.finite, &r.flags);
    r.raw_k_ps = post_selected_skr(a, link, grid.finite, grid.misclassification, &r.flags);
  }
  if (r.raw_k0 < 0.0 || r.raw_k_attack < 0.0 || r.raw_k_ps < 0.0) r.flags |= kClamped;
  r.k0 = std::max(0.0, r.raw_k0);
  r.k_attack = std::max(0.0, r.raw_k_attack);
  r.k_ps = std::max(0.0, r.raw_k_ps);
  r.improvement = r.k_ps - r.k_attack;
  return r;
}

}  // namespace detail

/// Row-major results: row i is d_eve_values[i], column j is sigma_values[j].
struct ImprovementMap {
  SweepGrid grid;
  std::vector<MitigationResult> cells;

  std::size_t rows() const { return grid.d_eve_values.size(); }
  std::size_t cols() const { return grid.sigma_values.size(); }
  const MitigationResult& at(std::size_t i, std::size_t j) const { return cells[i * cols() + j]; }

  const MitigationResult& max_improvement() const {
    return *std::max_element(cells.begin(), cells.end(),
                             [](const auto& a, const auto& b) { return a.improvement < b.improvement; });
  }
  const MitigationResult& min_raw_improvement() const {
    return *std::min_element(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
      return a.raw_improvement() < b.raw_improvement();
    });
  }
};

/// K_0, K_Attack and K_PS over the (D_Eve, sigma) grid. V_A is optimised for
/// the unattacked channel once per sigma column. Columns are distributed
/// over `threads` workers; results do not depend on the thread count.
inline ImprovementMap improvement_map(const SweepGrid& grid, unsigned threads = 1) {
  grid.validate();
  ImprovementMap out;
  out.grid = grid;
  out.cells.resize(grid.d_eve_values.size() * grid.sigma_values.size());
  const std::size_t cols = grid.sigma_values.size();
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t j = next++; j < cols; j = next++) {
      const double sigma = grid.sigma_values[j];
      const double v_a = detail::column_modulation(grid, sigma).v_a;
      for (std::size_t i = 0; i < grid.d_eve_values.size(); ++i)
        out.cells[i * cols + j] = detail::evaluate_cell(grid, grid.d_eve_values[i], sigma, v_a);
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cols)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  return out;
}

/// Same grid evaluated with a 1e8-symbol block (m = N/10).
inline ImprovementMap small_block_study(SweepGrid grid, unsigned threads = 1) {
  const FiniteSizeConfig base = grid.finite.value_or(FiniteSizeConfig{});
  FiniteSizeConfig small = FiniteSizeConfig::with_block(1e8, 0.1);
  small.eps_pe = base.eps_pe;
  small.eps_cor = base.eps_cor;
  small.eps_h = base.eps_h;
  small.eps_s = base.eps_s;
  small.p_ec = base.p_ec;
  small.d_alphabet = base.d_alphabet;
  small.v0 = base.v0;
  small.c_pe = base.c_pe;
  grid.finite = small;
  return improvement_map(grid, threads);
}

struct FrequencyPoint {
  double f_attack = 0.0;
  double k_attack = 0.0;
  double k_ps = 0.0;
  double raw_k_attack = 0.0;
  double raw_k_ps = 0.0;
  std::uint32_t flags = kCellOk;
};

struct FrequencyCurve {
  double d_eve_km = 0.0;
  double sigma_rin_lo = 0.0;
  double v_a_opt = 0.0;
  double k0 = 0.0;
  std::vector<FrequencyPoint> points;
};

/// K_Attack and K_PS against the attack frequency at one (D_Eve, sigma)
/// point. The grid supplies link, block and attack settings; its axes and
/// f_attack are ignored.
inline FrequencyCurve frequency_sweep(const SweepGrid& settings, double d_eve, double sigma,
                                      const std::vector<double>& f_values) {
  SweepGrid grid = settings;
  grid.d_eve_values = {d_eve};
  grid.sigma_values = {sigma};
  grid.validate();
  detail::require(!f_values.empty(), "frequency_sweep: no f values");
  FrequencyCurve out;
  out.d_eve_km = d_eve;
  out.sigma_rin_lo = sigma;
  out.v_a_opt = detail::column_modulation(grid, sigma).v_a;
  for (double f : f_values) {
    detail::require(f >= 0.0 && f <= 1.0, "frequency_sweep: f must lie in [0,1]");
    grid.f_attack = f;
    const MitigationResult r = detail::evaluate_cell(grid, d_eve, sigma, out.v_a_opt);
    out.k0 = r.k0;
    out.points.push_back({f, r.k_attack, r.k_ps, r.raw_k_attack, r.raw_k_ps, r.flags});
  }
  return out;
}

/// Zero-key interval of K_Attack within a sampled curve: the first and last
/// f with K_Attack == 0, if any.
inline std::optional<std::pair<double, double>> zero_key_window(const FrequencyCurve& c) {
  std::optional<std::pair<double, double>> w;
  for (const auto& p : c.points) {
    if (p.k_attack > 0.0) continue;
    if (!w) w.emplace(p.f_attack, p.f_attack);
    w->second = p.f_attack;
  }
  return w;
}

inline void write_map_csv(std::ostream& os, const ImprovementMap& map) {
  os << "d_eve_km,sigma_rin_lo,k0,k_attack,k_ps,improvement,v_a_opt,flags,raw_k0,raw_k_attack,"
        "raw_k_ps\n";
  const auto old = os.precision(17);
  for (const auto& c : map.cells)
    os << c.d_eve_km << ',' << c.sigma_rin_lo << ',' << c.k0 << ',' << c.k_attack << ','
       << c.k_ps << ',' << c.improvement << ',' << c.v_a_opt << ',' << flags_to_string(c.flags)
       << ',' << c.raw_k0 << ',' << c.raw_k_attack << ',' << c.raw_k_ps << '\n';
  os.precision(old);
}

inline void write_frequency_csv(std::ostream& os, const FrequencyCurve& curve) {
  os << "f_attack,k0,k_attack,k_ps,v_a_opt,flags,raw_k_attack,raw_k_ps\n";
  const auto old = os.precision(17);
  for (const auto& p : curve.points)
    os << p.f_attack << ',' << curve.k0 << ',' << p.k_attack << ',' << p.k_ps << ','
       << curve.v_a_opt << ',' << flags_to_string(p.flags) << ',' << p.raw_k_attack << ','
       << p.raw_k_ps << '\n';
  os.precision(old);
}

}  // namespace cvqkd
