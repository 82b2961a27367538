// SPDX-License-Identifier: Apache-2.0
//
// Asymptotic key rates in reverse reconciliation: mutual information, Eve's
// covariance matrices for the three trust levels, Holevo bounds for standard
// and line-of-sight security, and the thermal PLOB bound.

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "cvqkd/gaussian.hpp"

namespace cvqkd {

enum class Detection { homodyne, heterodyne };

inline int nu_det(Detection d) { return d == Detection::homodyne ? 1 : 2; }
inline const char* to_string(Detection d) { return d == Detection::homodyne ? "hom" : "het"; }

enum class TrustLevel { loss_and_noise_trusted, noise_trusted, untrusted };  // Eve(1), Eve(2), Eve(3)

inline const char* to_string(TrustLevel t) {
  switch (t) {
    case TrustLevel::loss_and_noise_trusted: return "eve1";
    case TrustLevel::noise_trusted: return "eve2";
    case TrustLevel::untrusted: return "eve3";
  }
  return "?";
}

enum class SecurityType { standard, line_of_sight };

inline const char* to_string(SecurityType s) { return s == SecurityType::standard ? "standard" : "los"; }

/// Resolved physical state of one link evaluation.
struct ChannelPoint {
  double eta_ch = 1.0;
  double eta_eff = 1.0;
  double tau = 1.0;
  double n_b = 0.0;
  double n_ex = 0.0;
  double nbar = 0.0;
  Detection detection = Detection::heterodyne;
  double mu = 10.0;

  int nu() const { return nu_det(detection); }
  double sigma_x2() const { return mu - 1.0; }

  static ChannelPoint from_components(double eta_ch, double eta_eff, double n_b, double n_ex,
                                      Detection det, double mu) {
    ChannelPoint ch;
    ch.eta_ch = eta_ch;
    ch.eta_eff = eta_eff;
    ch.tau = eta_ch * eta_eff;
    ch.n_b = n_b;
    ch.n_ex = n_ex;
    ch.nbar = eta_eff * n_b + n_ex;
    ch.detection = det;
    ch.mu = mu;
    ch.validate();
    return ch;
  }

  /// Builds the point from total transmissivity and total noise, attributing
  /// whatever the background does not explain to the setup.
  static ChannelPoint from_totals(double tau, double eta_eff, double n_b, double nbar, Detection det,
                                  double mu) {
    ChannelPoint ch;
    ch.eta_eff = eta_eff;
    ch.tau = tau;
    ch.eta_ch = tau / eta_eff;
    ch.n_b = n_b;
    ch.nbar = nbar;
    ch.n_ex = nbar - eta_eff * n_b;
    if (ch.n_ex < 0.0 && ch.n_ex > -1e-12 * std::max(1.0, nbar)) ch.n_ex = 0.0;
    ch.detection = det;
    ch.mu = mu;
    ch.validate();
    return ch;
  }

  void validate() const {
    if (!(eta_eff > 0.0 && eta_eff <= 1.0)) throw std::invalid_argument("ChannelPoint: eta_eff must lie in (0, 1]");
    if (!(eta_ch > 0.0 && eta_ch <= 1.0 + 1e-12)) throw std::invalid_argument("ChannelPoint: eta_ch must lie in (0, 1]");
    if (!(tau > 0.0 && tau <= 1.0 + 1e-12)) throw std::invalid_argument("ChannelPoint: tau must lie in (0, 1]");
    if (!(n_b >= 0.0) || !(n_ex >= 0.0) || !(nbar >= 0.0)) {
      throw std::invalid_argument("ChannelPoint: photon numbers must be non-negative");
    }
    if (!(mu >= 1.0)) throw std::invalid_argument("ChannelPoint: mu must be >= 1");
  }
};

/// I(x:y) in bits per use.
inline double mutual_information(const ChannelPoint& ch) {
  if (!(ch.tau > 0.0)) throw std::domain_error("mutual_information: tau must be positive");
  const double nu = ch.nu();
  const double chi = (2.0 * ch.nbar + nu) / ch.tau;
  return 0.5 * nu * std::log2(1.0 + ch.sigma_x2() / chi);
}

/// Scalars of Bob and Eve's joint CM and its assembled blocks.
struct EveCovariance {
  double b = 1.0;
  double omega = 1.0;
  double gamma = 0.0;
  double theta = 0.0;
  double psi = 0.0;
  double phi = 1.0;
  bool identity_limit = false;  // Eve decoupled; no CM assembled
  double loss = 0.0;            // 1 - T of Eve's beam splitter
  double injected = 0.0;        // thermal photons Eve injects
  double kappa = 1.0;           // gamma^2 = kappa (1 - T)(omega^2 - 1)
  CovarianceMatrix eve;         // V_EE' (4x4)
  Eigen::MatrixXd cross;        // C (2x4)

  /// Full 6x6 V_BEE'.
  CovarianceMatrix joint() const {
    if (identity_limit) throw std::logic_error("EveCovariance::joint: identity-channel limit has no CM");
    Eigen::MatrixXd v(6, 6);
    v.setZero();
    v.block<2, 2>(0, 0) = b * Eigen::Matrix2d::Identity();
    v.block(0, 2, 2, 4) = cross;
    v.block(2, 0, 4, 2) = cross.transpose();
    v.block(2, 2, 4, 4) = eve.matrix();
    return CovarianceMatrix(v);
  }
};

inline double bob_variance(const ChannelPoint& ch) {
  return ch.tau * (ch.mu - 1.0) + 2.0 * ch.nbar + 1.0;
}

inline EveCovariance eve_joint_cm(const ChannelPoint& ch, TrustLevel trust) {
  EveCovariance e;
  e.b = bob_variance(ch);
  const double mu = ch.mu;
  const double tau = ch.tau;
  if (trust == TrustLevel::loss_and_noise_trusted) {
    const double eta = ch.eta_ch;
    if (eta >= 1.0) {
      e.identity_limit = true;
      return e;
    }
    e.loss = 1.0 - eta;
    e.injected = ch.n_b;
    e.kappa = ch.eta_eff;
    e.omega = 2.0 * ch.n_b / (1.0 - eta) + 1.0;
    const double w2m1 = e.omega * e.omega - 1.0;
    e.gamma = std::sqrt(ch.eta_eff * (1.0 - eta) * w2m1);
    e.theta = std::sqrt(tau * (1.0 - eta)) * (e.omega - mu);
    e.psi = std::sqrt(eta * w2m1);
    e.phi = eta * e.omega + (1.0 - eta) * mu;
  } else {
    if (tau >= 1.0) {
      e.identity_limit = true;
      return e;
    }
    const double injected = trust == TrustLevel::noise_trusted ? ch.eta_eff * ch.n_b : ch.nbar;
    e.loss = 1.0 - tau;
    e.injected = injected;
    e.omega = 2.0 * injected / (1.0 - tau) + 1.0;
    const double w2m1 = e.omega * e.omega - 1.0;
    e.gamma = std::sqrt((1.0 - tau) * w2m1);
    e.theta = std::sqrt(tau * (1.0 - tau)) * (e.omega - mu);
    e.psi = std::sqrt(tau * w2m1);
    e.phi = tau * e.omega + (1.0 - tau) * mu;
  }
  Eigen::MatrixXd v(4, 4);
  v.setZero();
  const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d z = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  v.block<2, 2>(0, 0) = e.phi * id;
  v.block<2, 2>(0, 2) = e.psi * z;
  v.block<2, 2>(2, 0) = e.psi * z;
  v.block<2, 2>(2, 2) = e.omega * id;
  e.eve = CovarianceMatrix(v);
  e.cross = Eigen::MatrixXd(2, 4);
  e.cross.block<2, 2>(0, 0) = e.theta * id;
  e.cross.block<2, 2>(0, 2) = e.gamma * z;
  return e;
}

namespace detail {

inline double h_from_invariants(double trace, double det) {
  const double disc = std::sqrt(std::max(0.0, trace * trace - 4.0 * det));
  const double plus2 = 0.5 * (trace + disc);
  const double minus2 = det / plus2;
  return entropic_h(std::sqrt(plus2)) + entropic_h(std::sqrt(minus2));
}

}  // namespace detail

/// Holevo bound from the symplectic invariants of Eve's CM written in
/// s = 1 - T and q = s (omega - mu); the 1/s terms cancel analytically,
/// so this stays accurate when omega is huge.
inline double holevo_standard_invariants(const EveCovariance& e, double mu, Detection det) {
  const double s = e.loss;
  const double q = 2.0 * e.injected + s * (1.0 - mu);
  const double m2 = mu * mu - 1.0;
  const double d = 1.0 + mu * q + s * m2;
  const double delta = 2.0 + 2.0 * mu * q + q * q + 2.0 * s * m2;
  const double p = -((mu + q) * s * m2 + q * (mu * mu + 1.0) + mu * q * q);
  const double qq = -(s * mu * m2 + 2.0 * q * s * m2 + q * (mu * mu + 1.0) + 3.0 * mu * q * q + q * q * q);
  const double w = m2 * s + 2.0 * mu * q + q * q;
  const double k = e.kappa;
  const double unconditional = detail::h_from_invariants(delta, d * d);
  double conditional = 0.0;
  if (det == Detection::heterodyne) {
    const double b1 = e.b + 1.0;
    const double dh = d + k * p / b1;
    const double deltah = delta + 2.0 * k * qq / b1 + k * k * w * w / (b1 * b1);
    conditional = detail::h_from_invariants(deltah, dh * dh);
  } else {
    conditional = detail::h_from_invariants(delta + k * qq / e.b, (d + k * p / e.b) * d);
  }
  return unconditional - conditional;
}

/// Holevo bound chi(E:y) from Eve's CM and its conditional on Bob's outcome.
inline double holevo_standard(const ChannelPoint& ch, TrustLevel trust) {
  const auto e = eve_joint_cm(ch, trust);
  if (e.identity_limit) return 0.0;
  // Beyond this the entries of V_EE' cancel to O(1) invariants in double precision.
  if (e.omega > 1e4) return holevo_standard_invariants(e, ch.mu, ch.detection);
  const auto cond = ch.detection == Detection::homodyne ? condition_on_homodyne(e.eve, e.cross, e.b)
                                                        : condition_on_heterodyne(e.eve, e.cross, e.b);
  return entropic_sum(symplectic_spectrum(e.eve)) - entropic_sum(symplectic_spectrum(cond));
}

/// Untrusted-receiver Holevo bound from Alice and Bob's purified state.
inline double holevo_untrusted_closed_form(const ChannelPoint& ch) {
  const double mu = ch.mu;
  const double tau = ch.tau;
  const double b = bob_variance(ch);
  const double k = tau * (mu * mu - 1.0);  // c^2
  // mu b - c^2, expanded so that no cancellation occurs.
  const double d = mu * (2.0 * ch.nbar + 1.0) - tau * (mu - 1.0);
  const double z = std::sqrt((mu + b) * (mu + b) - 4.0 * k);
  const double nu_plus = 0.5 * (z + std::abs(b - mu));
  const double nu_minus = d / nu_plus;
  const double joint = entropic_h(nu_plus) + entropic_h(nu_minus);
  const double cond = ch.detection == Detection::homodyne ? std::sqrt(mu * d / b) : (d + mu) / (b + 1.0);
  return joint - entropic_h(cond);
}

/// Line-of-sight Holevo bound from (b, theta, phi).
inline double holevo_los_from(double b, double theta, double phi, Detection det) {
  if (det == Detection::homodyne) {
    return entropic_h(phi) - entropic_h(std::sqrt(phi * (phi - theta * theta / b)));
  }
  return entropic_h(phi) - entropic_h(phi - theta * theta / (b + 1.0));
}

inline double holevo_los(const ChannelPoint& ch, TrustLevel trust) {
  if (trust == TrustLevel::untrusted) {
    throw std::invalid_argument("holevo_los: line-of-sight security requires trusted channel noise (eve1 or eve2)");
  }
  const auto e = eve_joint_cm(ch, trust);
  if (e.identity_limit) return 0.0;
  return holevo_los_from(e.b, e.theta, e.phi, ch.detection);
}

struct RateReport {
  double rate = 0.0;
  double mutual_information = 0.0;
  double holevo = 0.0;
  double beta = 1.0;
  TrustLevel trust = TrustLevel::untrusted;
  SecurityType security = SecurityType::standard;
  ChannelPoint channel;
};

inline double holevo(const ChannelPoint& ch, TrustLevel trust, SecurityType security) {
  return security == SecurityType::line_of_sight ? holevo_los(ch, trust) : holevo_standard(ch, trust);
}

/// R = beta I - chi, unclamped.
inline RateReport asymptotic_rate(const ChannelPoint& ch, TrustLevel trust, SecurityType security, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("asymptotic_rate: beta must lie in [0, 1]");
  RateReport r;
  r.mutual_information = mutual_information(ch);
  r.holevo = holevo(ch, trust, security);
  r.rate = beta * r.mutual_information - r.holevo;
  r.beta = beta;
  r.trust = trust;
  r.security = security;
  r.channel = ch;
  return r;
}

/// Repeaterless bound for a thermal-loss channel of transmissivity tau and thermal photons n.
inline double plob_thermal_bound(double tau, double n) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::domain_error("plob_thermal_bound: tau must lie in (0, 1)");
  if (!(n >= 0.0)) throw std::domain_error("plob_thermal_bound: n must be non-negative");
  if (n >= tau) return 0.0;
  const double x = n / (1.0 - tau);
  return -std::log2(1.0 - tau) - x * std::log2(tau) - entropic_h(2.0 * x + 1.0);
}

struct LosScalars {
  double b = 1.0;
  double theta = 0.0;
  double phi = 1.0;
};

/// Bob/Eve scalars for the microwave line-of-sight scenario.
inline LosScalars microwave_los_cm(double tau, double sigma_x2, double n_th) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::domain_error("microwave_los_cm: tau must lie in (0, 1]");
  LosScalars s;
  const double n_r = tau * sigma_x2 / 2.0 + n_th;
  s.b = 2.0 * n_r + 1.0;
  s.theta = -std::sqrt(tau * (1.0 - tau)) * sigma_x2;
  s.phi = (1.0 - tau) * sigma_x2 + 2.0 * n_th + 1.0;
  return s;
}

}  // namespace cvqkd
