#pragma once

#include <cmath>

#include "cvqkd/errors.hpp"

namespace cvqkd {

/// How Bob's detector imperfections enter Eve's information.
///  - trusted:   detector efficiency and electronic noise are outside Eve's
///               control (standard practical-security model).
///  - untrusted: the detector is folded into the Alice-Bob covariance and the
///               Holevo bound is taken over that state.
enum class DetectorNoise { trusted, untrusted };

/// System and protocol parameters in shot-noise units (N0 = 1).
struct LinkConfig {
  double beta = 0.9;
  double eta = 0.9;
  double v_el = 0.05;
  double n0 = 1.0;
  double v_a = 2.8;
  double xi_b = 0.01;
  double sigma_rin_lo = 0.0;
  double loss_db_per_km = 0.2;
  double total_length_km = 40.0;
  DetectorNoise detector_noise = DetectorNoise::trusted;

  void validate() const {
    detail::require(beta > 0.0 && beta <= 1.0, "link: beta must lie in (0,1]");
    detail::require(eta > 0.0 && eta <= 1.0, "link: eta must lie in (0,1]");
    detail::require(v_el >= 0.0, "link: v_el must be non-negative");
    detail::require(n0 > 0.0, "link: N0 must be positive");
    detail::require(v_a > 0.0, "link: V_A must be positive");
    detail::require(xi_b >= 0.0, "link: xi_B must be non-negative");
    detail::require(sigma_rin_lo >= 0.0, "link: sigma_rin_lo must be non-negative");
    detail::require(loss_db_per_km >= 0.0, "link: loss must be non-negative");
    detail::require(total_length_km >= 0.0, "link: length must be non-negative");
  }
};

/// Finite-size accounting. Block sizes are kept as reals so that post-selected
/// sub-blocks f*N need no rounding.
struct FiniteSizeConfig {
  double block_size = 1e12;    // N
  double pe_symbols = 1e11;    // m
  double eps_pe = 1e-9;
  double eps_cor = 1e-9;
  double eps_h = 1e-9;
  double eps_s = 1e-9;
  double p_ec = 0.99;
  double d_alphabet = 32.0;
  double v0 = 2.0;             // 2 for heterodyne
  double c_pe = 0.0;

  double key_symbols() const { return block_size - pe_symbols; }

  void validate() const {
    detail::require(block_size > 0.0, "finite-size: N must be positive");
    detail::require(pe_symbols > 0.0 && pe_symbols < block_size,
                    "finite-size: need 0 < m < N");
    const auto in01 = [](double e) { return e > 0.0 && e < 1.0; };
    detail::require(eps_pe > 0.0 && eps_pe <= 1.0, "finite-size: eps_pe must lie in (0,1]");
    detail::require(in01(eps_cor) && in01(eps_h) && in01(eps_s),
                    "finite-size: epsilons must lie in (0,1)");
    detail::require(p_ec > 0.0 && p_ec <= 1.0, "finite-size: p_ec must lie in (0,1]");
    detail::require(d_alphabet >= 1.0, "finite-size: alphabet size must be >= 1");
    detail::require(v0 > 0.0, "finite-size: V0 must be positive");
    detail::require(c_pe >= 0.0, "finite-size: c_PE must be non-negative");
  }

  /// Same accounting on a fraction of the block; N and m scale together.
  FiniteSizeConfig scaled(double fraction) const {
    detail::require(fraction > 0.0 && fraction <= 1.0, "finite-size: fraction must lie in (0,1]");
    FiniteSizeConfig out = *this;
    out.block_size *= fraction;
    out.pe_symbols *= fraction;
    return out;
  }

  /// Block of size N with m = N * pe_fraction.
  static FiniteSizeConfig with_block(double n, double pe_fraction = 0.1) {
    FiniteSizeConfig out;
    out.block_size = n;
    out.pe_symbols = n * pe_fraction;
    return out;
  }
};

}  // namespace cvqkd
