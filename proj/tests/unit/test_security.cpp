#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cvqkd/channel.hpp"
#include "cvqkd/security.hpp"
#include "oracles/gaussian_oracle.hpp"
#include "oracles/literal.hpp"

using namespace cvqkd;

namespace {

constexpr double kT40 = 0.1584893192461113;

struct Draw {
  double v_a, t, xi, eta, v_el;
};

std::vector<Draw> random_states(std::size_t n, std::uint64_t seed) {
  Engine eng = make_engine(seed, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Draw> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({0.1 + 20.0 * u(eng), u(eng), 0.2 * u(eng), 0.3 + 0.69 * u(eng), 0.3 * u(eng)});
  return out;
}

LinkConfig trusted_link() { return LinkConfig{}; }

LinkConfig untrusted_link() {
  LinkConfig l;
  l.detector_noise = DetectorNoise::untrusted;
  return l;
}

}  // namespace

TEST(Covariance, ReferenceEntries) {
  const auto cov = build_covariance(2.8, 0.1585, 0.015, 0.9, 0.05);
  EXPECT_DOUBLE_EQ(cov.a, 3.8);
  EXPECT_NEAR(cov.b, 1.45155975, 1e-14);
  EXPECT_NEAR(cov.c, 1.3846356921587714, 1e-14);
  EXPECT_NEAR(cov.determinant(), std::pow(cov.a * cov.b - cov.c * cov.c, 2), 1e-12);
}

TEST(Covariance, RejectsUnphysicalInput) {
  EXPECT_THROW(build_covariance(2.8, 0.5, -3.0, 1.0, 0.0), numerical_domain_error);
  EXPECT_THROW(build_covariance(0.0, 0.5, 0.0, 0.9, 0.0), invalid_input);
  EXPECT_THROW(build_covariance(2.0, -0.1, 0.0, 0.9, 0.0), invalid_input);
  EXPECT_THROW(build_covariance(2.0, 0.1, 0.0, 1.1, 0.0), invalid_input);
}

TEST(EntropyG, KnownValues) {
  EXPECT_EQ(entropy_g(0.0), 0.0);
  EXPECT_NEAR(entropy_g(0.5), 1.3774437510817343, 1e-15);
  EXPECT_NEAR(entropy_g(1.0), 2.0, 1e-15);
  EXPECT_THROW(entropy_g(-0.1), invalid_input);
}

TEST(Spectrum, ReferenceValues) {
  const auto cov = build_covariance(2.8, 0.1585, 0.015, 0.9, 0.05);
  const auto s = symplectic_spectrum(cov);
  EXPECT_NEAR(s.lambda1, 3.405252162411165, 1e-13);
  EXPECT_NEAR(s.lambda2, 1.056811912411165, 1e-13);
  EXPECT_NEAR(conditional_eigenvalue(cov), 3.017960728878829, 1e-13);
}

TEST(Spectrum, MatchesEigenDecompositionOnRandomStates) {
  for (const Draw& d : random_states(1000, 7)) {
    const auto cov = build_covariance(d.v_a, d.t, d.xi, d.eta, d.v_el);
    const auto ref = oracle::symplectic_eigenvalues(oracle::two_mode(cov.a, cov.b, cov.c));
    const auto s = symplectic_spectrum(cov);
    EXPECT_NEAR(s.lambda1, ref[1], 1e-9 * ref[1]);
    EXPECT_NEAR(s.lambda2, ref[0], 1e-9 * ref[1]);
    EXPECT_GE(s.lambda2, 1.0 - 1e-12);
    EXPECT_GE(conditional_eigenvalue(cov), 1.0 - 1e-12);
  }
}

TEST(MutualInformation, ReferenceValues) {
  EXPECT_NEAR(mutual_information(build_covariance(2.8, 0.1585, 0.015, 0.9, 0.05)), 0.25657094244169266,
              1e-14);
  // Ideal channel with V = 4: I = log2((V+1)/2).
  EXPECT_NEAR(mutual_information(build_covariance(3.0, 1.0, 0.0, 1.0, 0.0)), std::log2(2.5), 1e-14);
  EXPECT_EQ(mutual_information(build_covariance(3.0, 0.0, 0.0, 1.0, 0.0)), 0.0);
}

TEST(HolevoUntrusted, ReferenceValue) {
  EXPECT_NEAR(holevo_bound(build_covariance(2.8, 0.1585, 0.015, 0.9, 0.05)), 0.36770757707189477, 1e-12);
}

TEST(HolevoUntrusted, AgreesWithLiteralTranscription) {
  for (const Draw& d : random_states(1000, 8)) {
    const auto cov = build_covariance(d.v_a, d.t, d.xi, d.eta, d.v_el);
    const auto blocks = oracle::literal::blocks(d.v_a, d.t, d.xi, d.eta, d.v_el);
    EXPECT_NEAR(holevo_bound(cov), oracle::literal::holevo(blocks), 1e-9);
    EXPECT_NEAR(mutual_information(cov), oracle::literal::mutual_information(blocks), 1e-9);
    EXPECT_NEAR(skr_asymptotic(cov, 0.9), oracle::literal::key_rate(0.9, d.v_a, d.t, d.xi, d.eta, d.v_el),
                1e-9);
  }
}

TEST(HolevoUntrusted, NonNegative) {
  for (const Draw& d : random_states(500, 9)) EXPECT_GE(holevo_bound(build_covariance(d.v_a, d.t, d.xi, d.eta, d.v_el)), 0.0);
}

TEST(HolevoTrusted, ReferenceValue) {
  EXPECT_NEAR(holevo_bound_trusted(2.8, 0.1585, 0.015, 0.9, 0.05), 0.193737907348009, 1e-12);
}

TEST(HolevoTrusted, MatchesNumericGaussianOracle) {
  for (const Draw& d : random_states(300, 10)) {
    if (d.t < 1e-6) continue;
    const double ref = oracle::holevo_trusted(d.v_a, d.t, d.xi, d.eta, d.v_el);
    EXPECT_NEAR(holevo_bound_trusted(d.v_a, d.t, d.xi, d.eta, d.v_el), ref, 1e-8)
        << d.v_a << ' ' << d.t << ' ' << d.xi << ' ' << d.eta << ' ' << d.v_el;
  }
}

TEST(HolevoTrusted, CovarianceOverloadAgrees) {
  const auto cov = build_covariance(2.8, 0.1585, 0.015, 0.9, 0.05);
  EXPECT_NEAR(holevo_bound_trusted(cov, 0.9, 0.05), 0.193737907348009, 1e-10);
}

TEST(HolevoTrusted, NeverExceedsUntrustedBound) {
  for (const Draw& d : random_states(300, 11)) {
    const double trusted = holevo_bound_trusted(d.v_a, d.t, d.xi, d.eta, d.v_el);
    EXPECT_GE(trusted, 0.0);
    EXPECT_LE(trusted, holevo_bound(build_covariance(d.v_a, d.t, d.xi, d.eta, d.v_el)) + 1e-9);
  }
}

TEST(KeyRate, LosslessNoiselessChannelLeaksNothing) {
  for (double v_a : {0.5, 2.8, 10.0}) {
    const auto cov = build_covariance(v_a, 1.0, 0.0, 1.0, 0.0);
    EXPECT_NEAR(holevo_bound(cov), 0.0, 1e-12);
    EXPECT_NEAR(holevo_bound_trusted(v_a, 1.0, 0.0, 1.0, 0.0), 0.0, 1e-12);
    EXPECT_NEAR(skr_asymptotic(cov, 0.9), 0.9 * mutual_information(cov), 1e-12);
    LinkConfig l;
    l.v_a = v_a;
    l.eta = 1.0;
    l.v_el = 0.0;
    EXPECT_NEAR(key_rate_asymptotic(1.0, 0.0, l), 0.9 * std::log2(1.0 + v_a / 2.0), 1e-12);
  }
}

TEST(KeyRate, ReferencePointAt40km) {
  LinkConfig l = trusted_link();
  EXPECT_NEAR(key_rate_asymptotic(kT40, 0.01, l), 0.0408177294897246, 1e-12);
  EXPECT_NEAR(skr_finite(kT40, 0.01, l, FiniteSizeConfig{}), 0.0360151695665326, 1e-11);
  EXPECT_EQ(key_rate(kT40, 0.01, l, std::nullopt), key_rate_asymptotic(kT40, 0.01, l));
}

TEST(KeyRate, UntrustedDetectorGivesNoKeyAt40km) {
  LinkConfig l = untrusted_link();
  for (double xi : {0.0, 0.01, 0.05}) EXPECT_LT(key_rate_asymptotic(kT40, xi, l), 0.0);
}

TEST(KeyRate, FiniteSizeApproachesAsymptotic) {
  LinkConfig l = trusted_link();
  const double k_inf = key_rate_asymptotic(kT40, 0.01, l);
  double prev = -1e9;
  for (double n : {1e8, 1e10, 1e12, 1e14}) {
    const double k = skr_finite(kT40, 0.01, l, FiniteSizeConfig::with_block(n));
    EXPECT_LT(k, k_inf);
    EXPECT_GT(k, prev);
    prev = k;
  }
  EXPECT_NEAR(prev / (0.9 * 0.99), k_inf, 2e-3);
}

TEST(KeyRate, DecreasesWithExcessNoise) {
  LinkConfig l = trusted_link();
  double prev = 1e9;
  for (double xi = 0.0; xi < 0.1; xi += 0.01) {
    const double k = key_rate_asymptotic(kT40, xi, l);
    EXPECT_LT(k, prev);
    prev = k;
  }
}

TEST(SkrReport, ConsistentFields) {
  LinkConfig l = trusted_link();
  const auto rep = skr_report(kT40, 0.01, l, FiniteSizeConfig{});
  EXPECT_NEAR(rep.k_finite, 0.0360151695665326, 1e-11);
  EXPECT_NEAR(rep.k_asymptotic, 0.0408177294897246, 1e-12);
  EXPECT_LT(rep.worst_case.t, kT40);
  EXPECT_GE(rep.lambda2, 1.0);
  EXPECT_GE(rep.lambda3, 1.0);
  EXPECT_GE(rep.k_finite_clamped(), 0.0);
}

TEST(FiniteSizeTerms, ReferenceValues) {
  const auto terms = finite_size_terms(FiniteSizeConfig{});
  EXPECT_NEAR(terms.delta_aep, 161.20239502205937, 1e-11);
  EXPECT_NEAR(terms.delta_aep, oracle::literal::delta_aep(32, 0.99, 1e-9), 1e-11);
  EXPECT_NEAR(terms.theta, -58.80920527766764, 1e-11);
  FiniteSizeConfig perfect;
  perfect.p_ec = 1.0;
  EXPECT_NEAR(finite_size_terms(perfect).theta, -58.79470570797252, 1e-11);
}

TEST(FiniteSizeConfig, Validation) {
  FiniteSizeConfig c;
  c.pe_symbols = c.block_size;
  EXPECT_THROW(c.validate(), invalid_input);
  c = FiniteSizeConfig{};
  c.p_ec = 0.0;
  EXPECT_THROW(c.validate(), invalid_input);
  const auto half = FiniteSizeConfig{}.scaled(0.5);
  EXPECT_EQ(half.block_size, 5e11);
  EXPECT_EQ(half.pe_symbols, 5e10);
  EXPECT_THROW(FiniteSizeConfig{}.scaled(0.0), invalid_input);
}

TEST(Modulation, OptimumIsLocalMaximum) {
  LinkConfig l = trusted_link();
  const auto xi_of = [](double v_a) { return total_excess_noise(0.01, 0.0, v_a); };
  const auto opt = optimize_modulation(kT40, xi_of, l, FiniteSizeConfig{});
  EXPECT_GT(opt.v_a, 2.7);
  EXPECT_LT(opt.v_a, 3.0);
  for (double dv : {-0.05, 0.05}) {
    LinkConfig shifted = l;
    shifted.v_a = opt.v_a + dv;
    EXPECT_LE(skr_finite(kT40, 0.01, shifted, FiniteSizeConfig{}), opt.k + 1e-12);
  }
}

TEST(Modulation, NoKeyReturnsZero) {
  LinkConfig l = trusted_link();
  const auto opt = optimize_modulation(kT40, 0.5, l, FiniteSizeConfig{});
  EXPECT_EQ(opt.k, 0.0);
  EXPECT_THROW(optimize_modulation(kT40, 0.01, l, std::nullopt, VaRange{-1.0, 2.0}), invalid_input);
}

TEST(Modulation, Deterministic) {
  LinkConfig l = trusted_link();
  const auto a = optimize_modulation(kT40, 0.03, l, FiniteSizeConfig{});
  const auto b = optimize_modulation(kT40, 0.03, l, FiniteSizeConfig{});
  EXPECT_EQ(a.v_a, b.v_a);
  EXPECT_EQ(a.k, b.k);
}
