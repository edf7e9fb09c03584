#pragma once

// Independent reference implementations for the security tests. Nothing in
// here calls into cvqkd's security code.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double g_entropy(double x) {
  if (x <= 0.0) return 0.0;
  return (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
}

inline Eigen::MatrixXd omega(int modes) {
  Eigen::MatrixXd o = Eigen::MatrixXd::Zero(2 * modes, 2 * modes);
  for (int k = 0; k < modes; ++k) {
    o(2 * k, 2 * k + 1) = 1.0;
    o(2 * k + 1, 2 * k) = -1.0;
  }
  return o;
}

/// Symplectic eigenvalues as the moduli of eig(i Omega gamma), ascending,
/// one per mode.
inline std::vector<double> symplectic_eigenvalues(const Eigen::MatrixXd& gamma) {
  const int n = static_cast<int>(gamma.rows()) / 2;
  const Eigen::MatrixXcd m = std::complex<double>(0.0, 1.0) * (omega(n) * gamma).cast<std::complex<double>>();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m);
  std::vector<double> ev;
  for (int i = 0; i < 2 * n; ++i) ev.push_back(std::abs(es.eigenvalues()[i]));
  std::sort(ev.begin(), ev.end());
  std::vector<double> out;
  for (int i = 0; i < 2 * n; i += 2) out.push_back(0.5 * (ev[i] + ev[i + 1]));
  return out;
}

inline double von_neumann(const Eigen::MatrixXd& gamma) {
  double s = 0.0;
  for (double nu : symplectic_eigenvalues(gamma)) s += g_entropy(std::max(0.0, (nu - 1.0) / 2.0));
  return s;
}

inline Eigen::MatrixXd two_mode(double a, double b, double c) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(4, 4);
  g(0, 0) = g(1, 1) = a;
  g(2, 2) = g(3, 3) = b;
  g(0, 2) = g(2, 0) = c;
  g(1, 3) = g(3, 1) = -c;
  return g;
}

/// Heterodyne conditioning of the modes `keep` on the single mode `meas`:
/// gamma_keep - sigma (gamma_meas + I)^-1 sigma^T.
inline Eigen::MatrixXd heterodyne_condition(const Eigen::MatrixXd& g, const std::vector<int>& keep,
                                            int meas) {
  const int k = static_cast<int>(keep.size());
  Eigen::MatrixXd gk(2 * k, 2 * k), s(2 * k, 2);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) gk.block(2 * i, 2 * j, 2, 2) = g.block(2 * keep[i], 2 * keep[j], 2, 2);
    s.block(2 * i, 0, 2, 2) = g.block(2 * keep[i], 2 * meas, 2, 2);
  }
  const Eigen::Matrix2d gm = g.block(2 * meas, 2 * meas, 2, 2) + Eigen::Matrix2d::Identity();
  return gk - s * gm.inverse() * s.transpose();
}

/// Holevo bound with Bob's detector trusted: the detector is a beamsplitter
/// of transmissivity eta mixing in one arm of an EPR pair of variance
/// nu = 1 + v_el/(1-eta), followed by heterodyne detection. Built from
/// full covariance matrices, no closed forms.
inline double holevo_trusted(double v_a, double t, double xi, double eta, double v_el) {
  const double v = v_a + 1.0;
  const double b0 = t * (v_a + xi) + 1.0;
  const double c0 = std::sqrt(t * (v * v - 1.0));
  const Eigen::MatrixXd g_ab = two_mode(v, b0, c0);
  const double s_e = von_neumann(g_ab);
  if (eta >= 1.0 && v_el == 0.0) {
    const Eigen::MatrixXd cond = heterodyne_condition(g_ab, {0}, 1);
    return s_e - von_neumann(cond);
  }
  const double nu = 1.0 + v_el / (1.0 - eta);
  const double cf = std::sqrt(nu * nu - 1.0);
  // modes: 0 A, 1 B, 2 F, 3 G
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(8, 8);
  g.block(0, 0, 4, 4) = g_ab;
  g.block(4, 4, 4, 4) = two_mode(nu, nu, cf);
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(8, 8);
  const double se = std::sqrt(eta), so = std::sqrt(1.0 - eta);
  s.block(2, 2, 2, 2) = se * Eigen::Matrix2d::Identity();
  s.block(2, 4, 2, 2) = so * Eigen::Matrix2d::Identity();
  s.block(4, 2, 2, 2) = -so * Eigen::Matrix2d::Identity();
  s.block(4, 4, 2, 2) = se * Eigen::Matrix2d::Identity();
  g = s * g * s.transpose();
  const Eigen::MatrixXd cond = heterodyne_condition(g, {0, 2, 3}, 1);
  return s_e - von_neumann(cond);
}

}  // namespace oracle
