// Key rate of a 40 km link with and without a channel-amplification attack
// on half of the block, before and after post-selection.

#include <cstdio>

#include "cvqkd/cvqkd.hpp"

int main() {
  using namespace cvqkd;
  LinkConfig link;
  link.sigma_rin_lo = 0.08;
  const FiniteSizeConfig block;
  const double t0 = transmittance({link.loss_db_per_km, link.total_length_km});

  const auto best = optimize_modulation(
      t0, [&](double v_a) { return total_excess_noise(link.xi_b, link.sigma_rin_lo, v_a); }, link, block);
  link.v_a = best.v_a;
  std::printf("V_A = %.3f  K0 = %.5f bits/pulse\n", best.v_a, best.k);

  for (double d_eve : {10.0, 25.0, 40.0}) {
    AttackConfig attack =
        AttackConfig::ca(amplification_gain(0.2, 0.15, d_eve), d_eve, link.total_length_km - d_eve, link.sigma_rin_lo);
    attack.f_attack = 0.5;
    std::printf("D_Eve = %4.1f km  g = %.3f  K_Attack = %.5f  K_PS = %.5f\n", d_eve, attack.g,
                std::max(0.0, attacked_skr(attack, link, block)),
                std::max(0.0, post_selected_skr(attack, link, block)));
  }
}
