// SPDX-License-Identifier: Apache-2.0
//
// Transmissivity models: Gaussian-beam diffraction, microwave spreading and
// pointing-error fading (Weibull beam wandering).

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "cvqkd/constants.hpp"
#include "cvqkd/special.hpp"

namespace cvqkd {

struct BeamConfig {
  double wavelength = 800e-9;  // m
  double waist = 1e-3;         // w0, m
  double curvature = std::numeric_limits<double>::infinity();  // R0, m
  bool focused = false;        // R0 = z at every distance

  void validate() const {
    if (!(wavelength > 0.0) || !(waist > 0.0)) {
      throw std::invalid_argument("BeamConfig: wavelength and waist must be positive");
    }
    if (!(curvature > 0.0)) throw std::invalid_argument("BeamConfig: curvature must be positive (inf = collimated)");
  }

  double rayleigh_range() const { return constants::pi * waist * waist / wavelength; }
};

/// Beam spot size w_z at distance z.
inline double spot_size(const BeamConfig& beam, double z) {
  beam.validate();
  if (!(z >= 0.0)) throw std::domain_error("spot_size: z must be non-negative");
  const double zr = z / beam.rayleigh_range();
  if (beam.focused) return beam.waist * zr;
  const double focus = std::isinf(beam.curvature) ? 1.0 : 1.0 - z / beam.curvature;
  return beam.waist * std::sqrt(focus * focus + zr * zr);
}

struct DiffractionResult {
  double spot = 0.0;     // w_z
  double eta_d = 0.0;    // aperture collection
  double eta_far = 0.0;  // 2 a^2 / w_z^2
  double eta_ch = 0.0;   // eta_d * eta_atm
};

inline DiffractionResult diffraction_transmissivity(const BeamConfig& beam, double z, double aperture,
                                                    double eta_atm = 1.0) {
  if (!(aperture > 0.0)) throw std::invalid_argument("diffraction_transmissivity: aperture must be positive");
  if (!(eta_atm > 0.0 && eta_atm <= 1.0)) {
    throw std::invalid_argument("diffraction_transmissivity: eta_atm must lie in (0, 1]");
  }
  DiffractionResult out;
  out.spot = spot_size(beam, z);
  out.eta_far = 2.0 * aperture * aperture / (out.spot * out.spot);
  out.eta_d = -std::expm1(-out.eta_far);
  out.eta_ch = out.eta_d * eta_atm;
  return out;
}

struct MicrowaveGeometry {
  double eta_ch = 0.0;
  double z_best = 0.0;  // largest distance with full collection
};

inline MicrowaveGeometry microwave_transmissivity(double gain, double aperture, double z) {
  if (!(gain > 0.0) || !(aperture > 0.0) || !(z > 0.0)) {
    throw std::invalid_argument("microwave_transmissivity: inputs must be positive");
  }
  MicrowaveGeometry out;
  out.eta_ch = std::min(gain * aperture * aperture / (4.0 * constants::pi * z * z), 1.0);
  out.z_best = std::sqrt(gain / constants::pi) * aperture / 2.0;
  return out;
}

// Weibull (Rayleigh) beam wandering.

inline double weibull_deflection_pdf(double r, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("weibull_deflection_pdf: sigma must be positive");
  if (r < 0.0) return 0.0;
  const double s2 = sigma * sigma;
  return r / s2 * std::exp(-r * r / (2.0 * s2));
}

inline double weibull_deflection_cdf(double r, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("weibull_deflection_cdf: sigma must be positive");
  if (r <= 0.0) return 0.0;
  return -std::expm1(-r * r / (2.0 * sigma * sigma));
}

/// Inverse-CDF transform of a uniform u in (0, 1].
inline double weibull_deflection_sample(double u, double sigma) {
  return sigma * std::sqrt(-2.0 * std::log(u));
}

struct FadingModel {
  double angular_error = 0.0;  // sigma~_P, rad
  double distance = 0.0;       // z, m
  double sigma_p = 0.0;        // transverse deflection scale, m
  double aperture = 0.0;       // a_R, m
  double spot = 0.0;           // w_z, m
  double eta_d = 0.0;
  double eta_far = 0.0;
  double eta = 0.0;            // peak transmissivity eta_ch * eta_eff
  double gamma_f = 0.0;        // shape
  double r0 = 0.0;             // scale, m

  void validate() const {
    if (!(angular_error >= 0.0)) throw std::invalid_argument("FadingModel: angular error must be non-negative");
    if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("FadingModel: eta must lie in (0, 1]");
    if (!(gamma_f > 0.0) || !std::isfinite(gamma_f)) throw std::invalid_argument("FadingModel: gamma_f must be positive");
    if (!(r0 > 0.0) || !std::isfinite(r0)) throw std::invalid_argument("FadingModel: r0 must be positive");
  }
};

inline FadingModel make_fading_model(const BeamConfig& beam, double z, double aperture, double eta_eff,
                                     double angular_error, double eta_atm = 1.0) {
  if (!(eta_eff > 0.0 && eta_eff <= 1.0)) throw std::invalid_argument("make_fading_model: eta_eff must lie in (0, 1]");
  const auto diff = diffraction_transmissivity(beam, z, aperture, eta_atm);
  FadingModel f;
  f.angular_error = angular_error;
  f.distance = z;
  f.sigma_p = angular_error * z;
  f.aperture = aperture;
  f.spot = diff.spot;
  f.eta_d = diff.eta_d;
  f.eta_far = diff.eta_far;
  f.eta = diff.eta_ch * eta_eff;
  const double l0 = special::lambda_n(0, f.eta_far);
  const double l1 = special::lambda_n(1, f.eta_far);
  const double log_term = std::log(2.0 * f.eta_d / (1.0 - l0));
  f.gamma_f = 4.0 * f.eta_far * l1 / (1.0 - l0) / log_term;
  f.r0 = aperture * std::pow(log_term, -1.0 / f.gamma_f);
  f.validate();
  return f;
}

namespace detail {

// Fraction of a unit-power Gaussian beam (spot w) centred at distance r from
// the centre of a circular aperture of radius a. The angular integral is
// pi e^-k I0(k); the radial one is done numerically.
inline double aperture_overlap(double r, double w, double a) {
  using boost::math::quadrature::gauss_kronrod;
  const double w2 = w * w;
  constexpr double tol = 1e-10;
  auto radial = [&](double rho) {
    const double radial_decay = std::exp(-2.0 * (rho - r) * (rho - r) / w2);
    if (radial_decay == 0.0) return 0.0;
    const double k = 4.0 * rho * r / w2;
    return 2.0 * rho * radial_decay * constants::pi * special::scaled_bessel_i(0, k);
  };
  // Outside 8 spot radii of the peak the integrand is below e^-128 of its maximum.
  const double centre = std::min(r, a);
  const double lo = std::max(0.0, centre - 8.0 * w);
  const double hi = std::min(a, centre + 8.0 * w);
  double err = 0.0;
  double total = 0.0;
  if (r > lo && r < hi) {
    double e1 = 0.0;
    double e2 = 0.0;
    total = gauss_kronrod<double, 31>::integrate(radial, lo, r, 15, tol, &e1) +
            gauss_kronrod<double, 31>::integrate(radial, r, hi, 15, tol, &e2);
    err = e1 + e2;
  } else {
    total = gauss_kronrod<double, 31>::integrate(radial, lo, hi, 15, tol, &err);
  }
  if (!std::isfinite(total) || (total > 1e-200 && err > 1e-6 * total)) {
    throw std::runtime_error("pointing_tau_exact: quadrature failed to converge");
  }
  return total * 2.0 / (constants::pi * w2);
}

}  // namespace detail

/// Transmissivity at deflection r by direct aperture-overlap quadrature,
/// normalised so that tau(0) = eta.
inline double pointing_tau_exact(double r, double spot, double aperture, double eta) {
  if (!(r >= 0.0) || !(spot > 0.0) || !(aperture > 0.0) || !(eta > 0.0)) {
    throw std::invalid_argument("pointing_tau_exact: inputs must be positive");
  }
  const double centred = -std::expm1(-2.0 * aperture * aperture / (spot * spot));
  if (r == 0.0) return eta;
  return eta * detail::aperture_overlap(r, spot, aperture) / centred;
}

inline double pointing_tau_approx(double r, const FadingModel& f) {
  if (!(r >= 0.0)) throw std::domain_error("pointing_tau_approx: r must be non-negative");
  return f.eta * std::exp(-std::pow(r / f.r0, f.gamma_f));
}

/// Deflection producing transmissivity tau under the approximation (inverse of pointing_tau_approx).
inline double deflection_for_tau(double tau, const FadingModel& f) {
  if (!(tau >= 0.0)) throw std::domain_error("deflection_for_tau: tau must be non-negative");
  if (tau == 0.0) return std::numeric_limits<double>::infinity();
  const double u = std::log(f.eta / tau);
  if (u <= 0.0) return 0.0;
  return f.r0 * std::pow(u, 1.0 / f.gamma_f);
}

namespace detail {

// Density as a function of u = ln(eta / tau) >= 0, times tau.
inline double fading_density_times_tau(double u, const FadingModel& f) {
  const double s2 = f.sigma_p * f.sigma_p;
  const double ratio = f.r0 * f.r0 / s2;
  const double e = 2.0 / f.gamma_f;
  return ratio / f.gamma_f * std::pow(u, e - 1.0) * std::exp(-0.5 * ratio * std::pow(u, e));
}

}  // namespace detail

inline double fading_pdf(double tau, const FadingModel& f) {
  if (!(f.sigma_p > 0.0)) throw std::domain_error("fading_pdf: no beam wandering, the distribution is degenerate");
  if (!(tau > 0.0 && tau <= f.eta)) throw std::domain_error("fading_pdf: tau outside (0, eta]");
  return detail::fading_density_times_tau(std::log(f.eta / tau), f) / tau;
}

/// Probability that tau falls in [tau1, tau2], via the Weibull CDF of the
/// corresponding deflections.
inline double fading_probability(double tau1, double tau2, const FadingModel& f) {
  const double slack = 1e-12 * f.eta;
  if (!(tau1 >= 0.0) || !(tau1 < tau2)) throw std::domain_error("fading_probability: need 0 <= tau1 < tau2");
  if (tau2 > f.eta + slack) throw std::domain_error("fading_probability: tau2 exceeds eta");
  if (!(f.sigma_p > 0.0)) return tau2 >= f.eta - slack ? 1.0 : 0.0;
  const double s2 = 2.0 * f.sigma_p * f.sigma_p;
  const double r_hi = deflection_for_tau(tau1, f);
  const double r_lo = deflection_for_tau(std::min(tau2, f.eta), f);
  const double a_lo = r_lo * r_lo / s2;
  if (std::isinf(r_hi)) return std::exp(-a_lo);
  const double a_hi = r_hi * r_hi / s2;
  return std::exp(-a_lo) * -std::expm1(-(a_hi - a_lo));
}

/// Same probability by numerical quadrature of the density in u = ln(eta / tau),
/// where the measure dtau / tau becomes du and the deep tail stays resolved.
inline double fading_probability_quadrature(double tau1, double tau2, const FadingModel& f,
                                            double* error_estimate = nullptr) {
  if (!(tau1 >= 0.0) || !(tau1 < tau2) || tau2 > f.eta * (1.0 + 1e-12)) {
    throw std::domain_error("fading_probability_quadrature: need 0 <= tau1 < tau2 <= eta");
  }
  if (!(f.sigma_p > 0.0)) throw std::domain_error("fading_probability_quadrature: degenerate distribution");
  auto integrand = [&f](double u) {
    if (!(u > 0.0)) return 0.0;
    const double v = detail::fading_density_times_tau(u, f);
    return std::isfinite(v) ? v : 0.0;
  };
  const double u_lo = tau2 >= f.eta ? 0.0 : std::log(f.eta / tau2);
  const double u_hi = tau1 == 0.0 ? std::numeric_limits<double>::infinity() : std::log(f.eta / tau1);
  // Peak scale of the density in u.
  const double split = std::max(u_lo, std::min(u_hi, std::pow(f.sigma_p / f.r0, f.gamma_f)));
  boost::math::quadrature::tanh_sinh<double> finite(18);
  double err = 0.0;
  double value = 0.0;
  if (split > u_lo) {
    double e = 0.0;
    value += finite.integrate(integrand, u_lo, split, 1e-12, &e);
    err += e;
  }
  if (u_hi > split) {
    double e = 0.0;
    if (std::isinf(u_hi)) {
      boost::math::quadrature::exp_sinh<double> tail;
      value += tail.integrate([&](double t) { return integrand(split + t); }, 0.0, u_hi, 1e-12, &e);
    } else {
      value += finite.integrate(integrand, split, u_hi, 1e-12, &e);
    }
    err += e;
  }
  if (error_estimate != nullptr) *error_estimate = err;
  return value;
}

}  // namespace cvqkd
