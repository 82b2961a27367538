// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "cvqkd/gaussian.hpp"

using namespace cvqkd;

namespace {

Eigen::Matrix2d rot(double t) {
  Eigen::Matrix2d r;
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

Eigen::MatrixXd random_symplectic(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> sq(-0.8, 0.8);
  std::uniform_real_distribution<double> trans(0.05, 0.95);
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(4, 4);
  for (int layer = 0; layer < 3; ++layer) {
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(4, 4);
    for (int m = 0; m < 2; ++m) {
      const double r = sq(gen);
      const Eigen::Matrix2d squeeze = Eigen::Vector2d(std::exp(r), std::exp(-r)).asDiagonal();
      local.block<2, 2>(2 * m, 2 * m) = rot(angle(gen)) * squeeze * rot(angle(gen));
    }
    const double t = trans(gen);
    Eigen::MatrixXd bs(4, 4);
    bs << std::sqrt(t), 0, std::sqrt(1 - t), 0,
          0, std::sqrt(t), 0, std::sqrt(1 - t),
          -std::sqrt(1 - t), 0, std::sqrt(t), 0,
          0, -std::sqrt(1 - t), 0, std::sqrt(t);
    const double r2 = 0.5 * sq(gen);
    Eigen::MatrixXd tms(4, 4);
    tms << std::cosh(r2), 0, std::sinh(r2), 0,
           0, std::cosh(r2), 0, -std::sinh(r2),
           std::sinh(r2), 0, std::cosh(r2), 0,
           0, -std::sinh(r2), 0, std::cosh(r2);
    s = tms * bs * local * s;
  }
  return s;
}

double thermal_entropy_fock(double nbar, int cutoff) {
  double s = 0.0;
  for (int k = 0; k <= cutoff; ++k) {
    const double p = std::pow(nbar, k) / std::pow(1.0 + nbar, k + 1);
    if (p > 0.0) s -= p * std::log2(p);
  }
  return s;
}

Eigen::MatrixXd tmsv(double mu) {
  const double c = std::sqrt(mu * mu - 1.0);
  Eigen::MatrixXd v(4, 4);
  v << mu, 0, c, 0,
       0, mu, 0, -c,
       c, 0, mu, 0,
       0, -c, 0, mu;
  return v;
}

}  // namespace

TEST(Spectrum, VacuumAndThermal) {
  auto s = symplectic_spectrum(CovarianceMatrix(Eigen::MatrixXd::Identity(2, 2)));
  ASSERT_EQ(s.values.size(), 1u);
  EXPECT_NEAR(s.values[0], 1.0, 1e-12);
  s = symplectic_spectrum(CovarianceMatrix(3.0 * Eigen::MatrixXd::Identity(2, 2)));
  EXPECT_NEAR(s.values[0], 3.0, 1e-12);
}

TEST(Spectrum, TwoModeSqueezedVacuumIsPure) {
  const CovarianceMatrix v(tmsv(10.0));
  EXPECT_NEAR(v.matrix().determinant(), 1.0, 1e-9);
  const auto s = symplectic_spectrum(v);
  ASSERT_EQ(s.values.size(), 2u);
  EXPECT_NEAR(s.values[0], 1.0, 1e-9);
  EXPECT_NEAR(s.values[1], 1.0, 1e-9);
  // Degenerate spectrum: the invariant formula loses half the digits here.
  const auto d = two_mode_spectrum_invariants(v);
  EXPECT_NEAR(d.values[0], 1.0, 1e-6);
  EXPECT_NEAR(d.values[1], 1.0, 1e-6);
}

TEST(Spectrum, SortedDescending) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(4, 4);
  v(0, 0) = v(1, 1) = 2.0;
  v(2, 2) = v(3, 3) = 5.0;
  const auto s = symplectic_spectrum(CovarianceMatrix(v));
  EXPECT_NEAR(s.values[0], 5.0, 1e-12);
  EXPECT_NEAR(s.values[1], 2.0, 1e-12);
}

TEST(Spectrum, RandomPhysicalStatesAgreeWithInvariantFormula) {
  std::mt19937_64 gen(20240611);
  std::uniform_real_distribution<double> nu(1.0, 6.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double a = nu(gen);
    const double b = nu(gen);
    const Eigen::MatrixXd s = random_symplectic(gen);
    const Eigen::MatrixXd omega = symplectic_form(2);
    ASSERT_LT((s * omega * s.transpose() - omega).cwiseAbs().maxCoeff(), 1e-10);
    const Eigen::Vector4d diag(a, a, b, b);
    Eigen::MatrixXd v = s * diag.asDiagonal() * s.transpose();
    v = 0.5 * (v + v.transpose());
    const CovarianceMatrix cm(v);
    const auto eig = symplectic_spectrum(cm);
    const auto inv = two_mode_spectrum_invariants(cm);
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    EXPECT_NEAR(eig.values[0], hi, 1e-9);
    EXPECT_NEAR(eig.values[1], lo, 1e-9);
    EXPECT_NEAR(inv.values[0], eig.values[0], 1e-9);
    EXPECT_NEAR(inv.values[1], eig.values[1], 1e-9);
  }
}

TEST(Spectrum, SymplecticInvariance) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::MatrixXd v = random_symplectic(gen);
    v = v * Eigen::Vector4d(1.5, 1.5, 2.5, 2.5).asDiagonal() * v.transpose();
    v = 0.5 * (v + v.transpose());
    const auto before = symplectic_spectrum(CovarianceMatrix(v));
    const Eigen::MatrixXd s = random_symplectic(gen);
    Eigen::MatrixXd w = s * v * s.transpose();
    w = 0.5 * (w + w.transpose());
    const auto after = symplectic_spectrum(CovarianceMatrix(w));
    EXPECT_NEAR(before.values[0], after.values[0], 1e-9);
    EXPECT_NEAR(before.values[1], after.values[1], 1e-9);
  }
}

TEST(Spectrum, RejectsNonSymmetric) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(2, 2);
  v(0, 1) = 0.1;
  EXPECT_THROW(CovarianceMatrix{v}, std::invalid_argument);
  EXPECT_THROW(CovarianceMatrix{Eigen::MatrixXd::Identity(3, 3)}, std::invalid_argument);
}

TEST(Spectrum, StateConstructorEnforcesBonaFide) {
  EXPECT_NO_THROW(CovarianceMatrix::state(tmsv(4.0)));
  EXPECT_THROW(CovarianceMatrix::state(0.5 * Eigen::MatrixXd::Identity(2, 2)), std::domain_error);
}

TEST(EntropicH, ClosedForms) {
  EXPECT_EQ(entropic_h(1.0), 0.0);
  EXPECT_NEAR(entropic_h(3.0), 2.0, 1e-15);
  EXPECT_EQ(entropic_h(1.0 - 5e-10), 0.0);
  EXPECT_THROW(entropic_h(1.0 - 2e-9), std::domain_error);
}

TEST(EntropicH, MatchesFockSpaceEntropy) {
  for (double nbar : {0.5, 0.01, 0.2, 1.3}) {
    EXPECT_NEAR(entropic_h(1.0 + 2.0 * nbar), thermal_entropy_fock(nbar, 200), 1e-8) << nbar;
  }
}

TEST(EntropicH, Monotone) {
  double prev = 0.0;
  for (double x = 1.0 + 1e-6; x < 1e4; x *= 1.3) {
    const double h = entropic_h(x);
    EXPECT_GT(h, prev);
    prev = h;
  }
}

namespace {

struct EveBlocks {
  CovarianceMatrix eve;
  Eigen::MatrixXd cross;
  double b;
  Eigen::MatrixXd joint;
};

EveBlocks eve2_like(double tau, double omega, double mu) {
  const double gamma = std::sqrt((1 - tau) * (omega * omega - 1));
  const double theta = std::sqrt(tau * (1 - tau)) * (omega - mu);
  const double psi = std::sqrt(tau * (omega * omega - 1));
  const double phi = tau * omega + (1 - tau) * mu;
  const double b = tau * (mu - 1) + tau * (omega - 1) + 1;
  Eigen::MatrixXd ve(4, 4);
  ve << phi, 0, psi, 0,
        0, phi, 0, -psi,
        psi, 0, omega, 0,
        0, -psi, 0, omega;
  Eigen::MatrixXd c(2, 4);
  c << theta, 0, gamma, 0,
       0, theta, 0, -gamma;
  Eigen::MatrixXd joint(6, 6);
  joint.setZero();
  joint.block(0, 0, 2, 2) = b * Eigen::MatrixXd::Identity(2, 2);
  joint.block(0, 2, 2, 4) = c;
  joint.block(2, 0, 4, 2) = c.transpose();
  joint.block(2, 2, 4, 4) = ve;
  return {CovarianceMatrix(ve), c, b, joint};
}

}  // namespace

TEST(Conditioning, ZeroCrossBlockLeavesStateUnchanged) {
  const auto e = eve2_like(0.5, 1.4, 10.0);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 4);
  EXPECT_LT((condition_on_homodyne(e.eve, zero, 3.0).matrix() - e.eve.matrix()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((condition_on_heterodyne(e.eve, zero, 3.0).matrix() - e.eve.matrix()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Conditioning, HomodyneMatchesPseudoInverseOracle) {
  const auto e = eve2_like(0.5, 1.4, 10.0);
  // Schur complement with the Moore-Penrose inverse of Pi V_B Pi, on the full 6x6 matrix.
  Eigen::MatrixXd vb = e.joint.block(0, 0, 2, 2);
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(2, 2);
  pi(0, 0) = 1.0;
  const Eigen::MatrixXd pinv = (pi * vb * pi).completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::MatrixXd cross = e.joint.block(0, 2, 2, 4);
  Eigen::MatrixXd oracle = e.joint.block(2, 2, 4, 4) - cross.transpose() * pinv * cross;
  oracle = 0.5 * (oracle + oracle.transpose());
  Eigen::EigenSolver<Eigen::MatrixXd> solver(symplectic_form(2) * oracle);
  std::vector<double> mods;
  for (int i = 0; i < 4; ++i) mods.push_back(std::abs(solver.eigenvalues()(i)));
  std::sort(mods.rbegin(), mods.rend());
  const auto ours = symplectic_spectrum(condition_on_homodyne(e.eve, e.cross, e.b));
  EXPECT_NEAR(ours.values[0], mods[0], 1e-9);
  EXPECT_NEAR(ours.values[1], mods[2], 1e-9);
  EXPECT_GE(ours.values[1], 1.0 - 1e-9);
}

TEST(Conditioning, HeterodyneMatchesInverseOracle) {
  const auto e = eve2_like(0.5, 1.4, 10.0);
  const Eigen::MatrixXd vb = e.joint.block(0, 0, 2, 2);
  const Eigen::MatrixXd cross = e.joint.block(0, 2, 2, 4);
  Eigen::MatrixXd oracle =
      e.joint.block(2, 2, 4, 4) - cross.transpose() * (vb + Eigen::MatrixXd::Identity(2, 2)).inverse() * cross;
  oracle = 0.5 * (oracle + oracle.transpose());
  const auto ref = two_mode_spectrum_invariants(CovarianceMatrix(oracle));
  const auto ours = symplectic_spectrum(condition_on_heterodyne(e.eve, e.cross, e.b));
  EXPECT_NEAR(ours.values[0], ref.values[0], 1e-9);
  EXPECT_NEAR(ours.values[1], ref.values[1], 1e-9);
}

TEST(Conditioning, InfiniteVarianceIsVacuous) {
  const auto e = eve2_like(0.3, 1.2, 10.0);
  const auto c = condition_on_heterodyne(e.eve, e.cross, 1e15);
  EXPECT_LT((c.matrix() - e.eve.matrix()).cwiseAbs().maxCoeff(), 1e-9);
  const auto h = condition_on_homodyne(e.eve, e.cross, 1e15);
  EXPECT_LT((h.matrix() - e.eve.matrix()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Conditioning, RejectsNonPositiveVariance) {
  const auto e = eve2_like(0.5, 1.4, 10.0);
  EXPECT_THROW(condition_on_homodyne(e.eve, e.cross, 0.0), std::domain_error);
  EXPECT_THROW(condition_on_heterodyne(e.eve, e.cross, -1.0), std::domain_error);
  EXPECT_THROW(condition_on_heterodyne(e.eve, Eigen::MatrixXd::Zero(2, 2), 1.0), std::invalid_argument);
}
