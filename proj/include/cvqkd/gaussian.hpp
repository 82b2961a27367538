// SPDX-License-Identifier: Apache-2.0
//
// Covariance-matrix algebra for one- and two-mode Gaussian states.
// Quadrature ordering is (q1, p1, q2, p2, ...), shot-noise units.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cvqkd/constants.hpp"

namespace cvqkd {

class CovarianceMatrix {
 public:
  CovarianceMatrix() = default;

  /// Wraps a symmetric even-dimensional matrix. No physicality check, so
  /// conditional intermediates can be represented too.
  explicit CovarianceMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0 || m_.rows() % 2 != 0) {
      throw std::invalid_argument("CovarianceMatrix: need a non-empty square matrix of even size");
    }
    if (!m_.allFinite()) throw std::invalid_argument("CovarianceMatrix: non-finite entry");
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument("CovarianceMatrix: matrix is not symmetric");
    }
  }

  /// As the constructor, additionally requiring a bona fide quantum state.
  static CovarianceMatrix state(Eigen::MatrixXd m);

  int modes() const { return static_cast<int>(m_.rows() / 2); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  bool is_physical(double tol = constants::purity_tolerance) const;

 private:
  Eigen::MatrixXd m_;
};

struct SymplecticSpectrum {
  std::vector<double> values;  // descending
};

/// Standard symplectic form for n modes, block-diagonal in [[0,1],[-1,0]].
inline Eigen::MatrixXd symplectic_form(int modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * modes, 2 * modes);
  for (int k = 0; k < modes; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

/// Symplectic eigenvalues as moduli of the eigenvalues of i*Omega*V.
inline SymplecticSpectrum symplectic_spectrum(const CovarianceMatrix& v) {
  const int n = v.modes();
  const Eigen::MatrixXd a = symplectic_form(n) * v.matrix();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("symplectic_spectrum: eigen-solver did not converge");
  }
  std::vector<double> moduli;
  moduli.reserve(static_cast<std::size_t>(2 * n));
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    moduli.push_back(std::abs(solver.eigenvalues()(i)));
  }
  std::sort(moduli.begin(), moduli.end(), std::greater<>());
  // Eigenvalues come in pairs +-i nu; average each pair.
  SymplecticSpectrum out;
  out.values.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    out.values.push_back(0.5 * (moduli[2 * k] + moduli[2 * k + 1]));
  }
  return out;
}

/// Two-mode spectrum from the invariants det A, det B, det C, det V.
inline SymplecticSpectrum two_mode_spectrum_invariants(const CovarianceMatrix& v) {
  if (v.modes() != 2) throw std::invalid_argument("two_mode_spectrum_invariants: need a two-mode CM");
  const Eigen::MatrixXd& m = v.matrix();
  const double det_a = m.block<2, 2>(0, 0).determinant();
  const double det_b = m.block<2, 2>(2, 2).determinant();
  const double det_c = m.block<2, 2>(0, 2).determinant();
  const double delta = det_a + det_b + 2.0 * det_c;
  const double det_v = m.determinant();
  const double disc = std::sqrt(std::max(0.0, delta * delta - 4.0 * det_v));
  const double plus = std::sqrt(std::max(0.0, 0.5 * (delta + disc)));
  const double minus = std::sqrt(std::max(0.0, 0.5 * (delta - disc)));
  return SymplecticSpectrum{{plus, minus}};
}

inline bool CovarianceMatrix::is_physical(double tol) const {
  const auto spec = symplectic_spectrum(*this);
  return std::all_of(spec.values.begin(), spec.values.end(),
                     [tol](double nu) { return nu >= 1.0 - tol; });
}

inline CovarianceMatrix CovarianceMatrix::state(Eigen::MatrixXd m) {
  CovarianceMatrix cm(std::move(m));
  if (!cm.is_physical()) {
    throw std::domain_error("CovarianceMatrix::state: symplectic eigenvalue below 1 (not a quantum state)");
  }
  return cm;
}

/// Bosonic entropic function H(x) in bits; x is a symplectic eigenvalue.
inline double entropic_h(double x) {
  if (!(x >= 1.0 - constants::purity_tolerance)) {
    throw std::domain_error("entropic_h: argument " + std::to_string(x) + " below 1");
  }
  if (x <= 1.0) return 0.0;
  const double p = 0.5 * (x + 1.0);
  const double q = 0.5 * (x - 1.0);
  return p * std::log2(p) - q * std::log2(q);
}

inline double entropic_sum(const SymplecticSpectrum& s) {
  double total = 0.0;
  for (double nu : s.values) total += entropic_h(nu);
  return total;
}

/// V_E - C^T Pi C / b with Pi = diag(1, 0); C has 2 rows (Bob) and dim(V_E) columns.
inline CovarianceMatrix condition_on_homodyne(const CovarianceMatrix& v_e,
                                              const Eigen::MatrixXd& c, double b) {
  if (!(b > 0.0)) throw std::domain_error("condition_on_homodyne: b must be positive");
  if (c.rows() != 2 || c.cols() != v_e.matrix().rows()) {
    throw std::invalid_argument("condition_on_homodyne: cross block is not conformal");
  }
  Eigen::Matrix2d pi = Eigen::Matrix2d::Zero();
  pi(0, 0) = 1.0;
  Eigen::MatrixXd out = v_e.matrix() - (c.transpose() * pi * c) / b;
  return CovarianceMatrix(0.5 * (out + out.transpose()));
}

/// V_E - C^T C / (b + 1).
inline CovarianceMatrix condition_on_heterodyne(const CovarianceMatrix& v_e,
                                                const Eigen::MatrixXd& c, double b) {
  if (!(b > 0.0)) throw std::domain_error("condition_on_heterodyne: b must be positive");
  if (c.rows() != 2 || c.cols() != v_e.matrix().rows()) {
    throw std::invalid_argument("condition_on_heterodyne: cross block is not conformal");
  }
  Eigen::MatrixXd out = v_e.matrix() - (c.transpose() * c) / (b + 1.0);
  return CovarianceMatrix(0.5 * (out + out.transpose()));
}

}  // namespace cvqkd
