#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cvqkd/channel.hpp"
#include "cvqkd/estimation.hpp"
#include "oracles/literal.hpp"

using namespace cvqkd;

namespace {

constexpr double kT40 = 0.1584893192461113;

LinkConfig link_28() {
  LinkConfig l;
  l.v_a = 2.8;
  return l;
}

}  // namespace

TEST(QuadratureEstimation, RecoversFixedChannel) {
  const std::vector<double> ts(200000, 0.5);
  const auto batch = simulate_quadratures(ts, 4.0, 0.05, 0.9, 0.05, 1.0, 11);
  const auto est = estimate_channel(batch);
  EXPECT_NEAR(est.t_estimate, 0.5, 0.01);
  EXPECT_NEAR(est.xi_estimate, 0.05, 0.03);
  EXPECT_NEAR(estimate_mean_transmittance(batch, 4.0, 0.05), 0.5, 0.01);
}

TEST(QuadratureEstimation, FluctuatingChannelMatchesMomentEstimators) {
  const auto cfg = AttackConfig::dos(0.9, 0.7, 10, 30, 0.0);
  const auto ts = sample_transmittance(cfg, 0.2, 400000, 5);
  const double v_a = 4.0, xi = 0.02;
  const auto batch = simulate_quadratures(ts.values, v_a, xi, 1.0, 0.0, 1.0, 6);
  const auto est = estimate_channel(batch);
  const auto m = analytic_moments(cfg, kT40);
  const auto ref = attacked_estimators(m.e_sqrt_t, m.e_t, v_a, xi);
  EXPECT_NEAR(est.t_estimate / ref.t, 1.0, 0.02);
  EXPECT_NEAR(est.xi_estimate, ref.xi, 0.03);
}

TEST(QuadratureEstimation, Deterministic) {
  const std::vector<double> ts(100, 0.3);
  const auto a = simulate_quadratures(ts, 2.0, 0.01, 0.9, 0.05, 1.0, 3);
  const auto b = simulate_quadratures(ts, 2.0, 0.01, 0.9, 0.05, 1.0, 3);
  EXPECT_EQ(a.x_alice, b.x_alice);
  EXPECT_EQ(a.x_bob, b.x_bob);
}

TEST(QuadratureEstimation, RejectsBadBatches) {
  QuadratureBatch b;
  b.x_alice = {1.0, 2.0};
  b.x_bob = {1.0};
  EXPECT_THROW(estimate_t(b), invalid_input);
  b.x_bob = {1.0, 2.0};
  b.x_alice = {0.0, 0.0};
  EXPECT_THROW(estimate_t(b), invalid_input);
  b.x_alice = {1.0};
  b.x_bob = {1.0};
  EXPECT_THROW(estimate_t(b), invalid_input);
}

TEST(AttackedEstimators, ReferencePoint) {
  const auto m = analytic_moments(AttackConfig::ca_dos(1.12, 0.94, 10, 30, 0.0), kT40);
  const auto p = attacked_estimators(m.e_sqrt_t, m.e_t, 2.8, 0.01);
  EXPECT_NEAR(p.t, 0.3960380057319847 * 0.3960380057319847, 1e-15);
  EXPECT_NEAR(p.xi, (2.8 + 0.01) / 0.94 - 2.8, 1e-12);
}

TEST(AttackedEstimators, UnattackedIsIdentity) {
  const auto p = attacked_estimators(std::sqrt(kT40), kT40, 2.8, 0.03);
  EXPECT_NEAR(p.t, kT40, 1e-15);
  EXPECT_NEAR(p.xi, 0.03, 1e-14);
}

TEST(AttackedEstimators, CaIsNoiseNeutral) {
  const auto m = analytic_moments(AttackConfig::ca(1.4, 20, 20, 0.0), kT40);
  const auto p = attacked_estimators(m.e_sqrt_t, m.e_t, 3.0, 0.02);
  EXPECT_NEAR(p.t, 1.4 * kT40, 1e-15);
  EXPECT_NEAR(p.xi, 0.02, 1e-13);
}

TEST(AttackedEstimators, BlockedChannelThrows) {
  EXPECT_THROW(attacked_estimators(0.0, 0.0, 2.8, 0.01), blocked_channel);
  EXPECT_THROW(attacked_estimators(0.0, 0.0, 2.8, 0.01), numerical_domain_error);
}

TEST(AttackedEstimators, JensenNeverLowersNoise) {
  for (double p : {0.2, 0.5, 0.9}) {
    for (double g : {0.5, 1.0, 1.5}) {
      const double es = p * std::sqrt(g * kT40), et = p * g * kT40;
      EXPECT_GE(attacked_estimators(es, et, 2.8, 0.01).xi, 0.01 - 1e-12);
    }
  }
}

TEST(WFactor, MatchesInverseErfc) {
  EXPECT_NEAR(w_factor(1e-9), 6.109410204869397, 1e-12);
  EXPECT_NEAR(w_factor(0.3173), 1.000021713322999, 1e-12);
  for (double eps : {1e-15, 1e-10, 1e-6, 1e-3, 0.05, 0.5}) EXPECT_NEAR(w_factor(eps), oracle::literal::w_factor(eps), 1e-11);
  EXPECT_EQ(w_factor(1.0), 0.0);
  EXPECT_THROW(w_factor(0.0), invalid_input);
  EXPECT_THROW(w_factor(1.5), invalid_input);
}

TEST(WorstCase, ReferencePoint) {
  FiniteSizeConfig cfg;
  LinkConfig link = link_28();
  const auto wc = worst_case_params(0.1585, 0.015, cfg, link);
  EXPECT_NEAR(wc.t, 0.15849018405507294, 1e-15);
  EXPECT_NEAR(wc.xi, 0.015297906629702710, 1e-15);
}

TEST(WorstCase, MatchesMultiprecisionOracle) {
  LinkConfig link = link_28();
  for (double m : {1e6, 1e8, 1e10, 1e12}) {
    for (double t : {0.05, 0.1585, 0.6}) {
      FiniteSizeConfig cfg = FiniteSizeConfig::with_block(10 * m);
      const auto wc = worst_case_params(t, 0.02, cfg, link);
      const auto ref = oracle::literal::worst_case(t, 0.02, link.eta, link.v_el, link.v_a, m, cfg.eps_pe);
      EXPECT_NEAR(wc.t, ref.t_wc, 1e-12 * ref.t_wc) << "m=" << m << " t=" << t;
      EXPECT_NEAR(wc.xi, ref.xi_wc, 1e-11 * ref.xi_wc) << "m=" << m << " t=" << t;
    }
  }
}

TEST(WorstCase, PenaltyShrinksWithBlockSize) {
  LinkConfig link = link_28();
  double prev_t = 0.0, prev_xi = 1e9;
  for (double n : {1e8, 1e9, 1e10, 1e11, 1e12}) {
    const auto wc = worst_case_params(kT40, 0.02, FiniteSizeConfig::with_block(n), link);
    EXPECT_LT(wc.t, kT40);
    EXPECT_GT(wc.xi, 0.02);
    EXPECT_GT(wc.t, prev_t);
    EXPECT_LT(wc.xi, prev_xi);
    prev_t = wc.t;
    prev_xi = wc.xi;
  }
}

TEST(WorstCase, TinyBlockFails) {
  FiniteSizeConfig cfg = FiniteSizeConfig::with_block(10.0);
  EXPECT_THROW(worst_case_params(1e-3, 0.01, cfg, link_28()), estimation_failure);
  EXPECT_THROW(worst_case_params(0.0, 0.01, FiniteSizeConfig{}, link_28()), estimation_failure);
}

TEST(WeightedParams, WorkedExample) {
  const auto p = weighted_params(0.5, 1.0, 1.58, 1.0, 2.8, 0.01);
  EXPECT_NEAR(p.t, (std::sqrt(1.58) + 1.0) * (std::sqrt(1.58) + 1.0) / 4.0, 1e-15);
  EXPECT_NEAR(std::round(p.t * 100.0) / 100.0, 1.27, 1e-12);
}

TEST(WeightedParams, Endpoints) {
  const auto none = weighted_params(0.0, 0.94, 1.12, kT40, 2.8, 0.0123);
  EXPECT_EQ(none.t, kT40);
  EXPECT_EQ(none.xi, 0.0123);
  const auto full = weighted_params(1.0, 0.94, 1.12, kT40, 2.8, 0.0123);
  EXPECT_NEAR(full.t, 0.94 * 0.94 * 1.12 * kT40, 1e-16);
  EXPECT_NEAR(full.xi, (2.8 + 0.0123) / 0.94 - 2.8, 1e-14);
}

TEST(WeightedParams, AgreesWithMixtureMoments) {
  for (double f : {0.1, 0.37, 0.5, 0.8}) {
    for (auto [p, g] : {std::pair{1.0, 1.3}, {0.94, 1.12}, {0.5, 0.8}}) {
      const double es = f * p * std::sqrt(g * kT40) + (1 - f) * std::sqrt(kT40);
      const double et = f * p * g * kT40 + (1 - f) * kT40;
      const auto ref = attacked_estimators(es, et, 2.8, 0.01);
      const auto w = weighted_params(f, p, g, kT40, 2.8, 0.01);
      EXPECT_NEAR(w.t, ref.t, 1e-15);
      EXPECT_NEAR(w.xi, ref.xi, 1e-12);
    }
  }
}

TEST(WeightedParams, InvalidInput) {
  EXPECT_THROW(weighted_params(-0.1, 1.0, 1.2, kT40, 2.8, 0.01), invalid_input);
  EXPECT_THROW(weighted_params(1.0, 0.0, 1.2, kT40, 2.8, 0.01), blocked_channel);
}
