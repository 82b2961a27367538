// SPDX-License-Identifier: Apache-2.0
//
// Photon-number noise budgets: local-oscillator setup noise, excess-noise
// conversions, sky background collection and microwave black-body noise.

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "cvqkd/constants.hpp"

namespace cvqkd {

enum class LoKind { transmitted, local };  // TLO, LLO

inline const char* to_string(LoKind k) { return k == LoKind::transmitted ? "TLO" : "LLO"; }

struct SetupConfig {
  double wavelength = 800e-9;          // m
  double detector_bandwidth = 100e6;   // W, Hz
  double nep = 6e-12;                  // W / sqrt(Hz)
  double lo_pulse_duration = 10e-9;    // s
  double lo_power = 100e-3;            // W
  double linewidth = 1.6e3;            // Hz
  double clock = 5e6;                  // Hz
  int nu_det = 2;
  double modulation = 9.0;             // sigma_x^2 = mu - 1, SNU
  LoKind lo_kind = LoKind::local;
  double n_other = 0.0;                // uncharacterised extra photons
  double n_tlo_phase = 0.0;            // TLO phase-error photons

  double carrier() const { return constants::speed_of_light / wavelength; }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string("SetupConfig: ") + name + " must be positive");
      }
    };
    positive(wavelength, "wavelength");
    positive(detector_bandwidth, "detector_bandwidth");
    positive(lo_pulse_duration, "lo_pulse_duration");
    positive(lo_power, "lo_power");
    positive(clock, "clock");
    if (!(nep >= 0.0)) throw std::invalid_argument("SetupConfig: nep must be non-negative");
    if (!(linewidth >= 0.0)) throw std::invalid_argument("SetupConfig: linewidth must be non-negative");
    if (nu_det != 1 && nu_det != 2) throw std::invalid_argument("SetupConfig: nu_det must be 1 or 2");
    if (!(modulation >= 0.0)) throw std::invalid_argument("SetupConfig: modulation must be non-negative");
    if (!(n_other >= 0.0) || !(n_tlo_phase >= 0.0)) {
      throw std::invalid_argument("SetupConfig: noise overrides must be non-negative");
    }
  }
};

struct ReceiverOptics {
  double aperture_radius = 0.01;   // m
  double field_of_view = 1e-4;     // sr
  double spectral_filter = 0.1e-12;  // m
  double quantum_efficiency = 0.7;

  void validate() const {
    if (!(aperture_radius > 0.0)) throw std::invalid_argument("ReceiverOptics: aperture_radius must be positive");
    if (!(field_of_view > 0.0 && field_of_view <= 4.0 * constants::pi)) {
      throw std::invalid_argument("ReceiverOptics: field_of_view must lie in (0, 4 pi]");
    }
    if (!(spectral_filter > 0.0)) throw std::invalid_argument("ReceiverOptics: spectral_filter must be positive");
    if (!(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0)) {
      throw std::invalid_argument("ReceiverOptics: quantum_efficiency must lie in (0, 1]");
    }
  }
};

/// Electronic-noise photons referred to the transmitter LO power.
inline double theta_el(const SetupConfig& cfg) {
  return cfg.nu_det * cfg.nep * cfg.nep * cfg.detector_bandwidth * cfg.lo_pulse_duration /
         (2.0 * constants::planck * cfg.carrier() * cfg.lo_power);
}

/// Phase-error photons per unit transmissivity for a local LO.
inline double theta_ph(const SetupConfig& cfg) {
  return constants::pi * cfg.modulation * cfg.linewidth / cfg.clock;
}

/// Total setup noise n_ex at transmissivity tau.
inline double setup_noise(const SetupConfig& cfg, double tau) {
  if (!(tau > 0.0)) throw std::domain_error("setup_noise: tau must be positive");
  if (cfg.lo_kind == LoKind::transmitted) {
    return theta_el(cfg) / tau + cfg.n_tlo_phase + cfg.n_other;
  }
  return theta_el(cfg) + theta_ph(cfg) * tau + cfg.n_other;
}

/// xi = 2 n / tau.
inline double excess_from_photons(double n, double tau) {
  if (!(tau > 0.0)) throw std::domain_error("excess_from_photons: tau must be positive");
  return 2.0 * n / tau;
}

inline double photons_from_excess(double xi, double tau) {
  if (!(tau > 0.0)) throw std::domain_error("photons_from_excess: tau must be positive");
  return 0.5 * xi * tau;
}

struct ExcessNoise {
  double total = 0.0;    // xi_tot
  double channel = 0.0;  // xi_ch, from the background
  double setup = 0.0;    // xi_ex
};

inline ExcessNoise decompose_excess(double n_b, double n_ex, double eta_eff, double tau) {
  ExcessNoise out;
  out.channel = excess_from_photons(eta_eff * n_b, tau);
  out.setup = excess_from_photons(n_ex, tau);
  out.total = excess_from_photons(eta_eff * n_b + n_ex, tau);
  return out;
}

/// Solid-angle field of view of a sensor of linear size l_d behind focal length f_d.
inline double fov_from_sensor(double l_d, double f_d) {
  if (!(l_d >= 0.0) || !(f_d > 0.0)) throw std::invalid_argument("fov_from_sensor: bad geometry");
  const double angle = 2.0 * std::atan(l_d / (2.0 * f_d));
  return angle * angle;
}

/// Equivalent wavelength filter of an interferometric receiver of bandwidth dnu.
inline double interferometric_filter(double lambda, double dnu) {
  if (!(lambda > 0.0) || !(dnu >= 0.0)) throw std::invalid_argument("interferometric_filter: bad inputs");
  return lambda * lambda * dnu / constants::speed_of_light;
}

/// Photon collection parameter Gamma_R = dlambda * Omega * a_R^2 / W (s m^3 sr).
inline double photon_collection(const ReceiverOptics& optics, double bandwidth) {
  return optics.spectral_filter * optics.field_of_view * optics.aperture_radius *
         optics.aperture_radius / bandwidth;
}

/// Mean background photons per mode; spectral radiance in W m^-2 nm^-1 sr^-1.
inline double sky_background_photons(const ReceiverOptics& optics, double lambda, double bandwidth,
                                     double radiance_per_nm) {
  optics.validate();
  if (!(lambda > 0.0) || !(bandwidth > 0.0) || !(radiance_per_nm >= 0.0)) {
    throw std::invalid_argument("sky_background_photons: bad inputs");
  }
  const double gamma_r = photon_collection(optics, bandwidth);
  return constants::pi * lambda * gamma_r / (constants::planck * constants::speed_of_light) *
         radiance_per_nm * 1e9;
}

struct MicrowaveNoise {
  double gamma_r = 0.0;  // s m^3 sr
  double n_body = 0.0;   // photons s^-1 m^-3 sr^-1
  double n_th = 0.0;     // photons per mode
};

inline MicrowaveNoise microwave_thermal_photons(double lambda, double temperature, double fov,
                                                double aperture_radius) {
  if (!(lambda > 0.0) || !(temperature >= 0.0) || !(fov > 0.0) || !(aperture_radius > 0.0)) {
    throw std::invalid_argument("microwave_thermal_photons: bad inputs");
  }
  constexpr double c = constants::speed_of_light;
  MicrowaveNoise out;
  out.gamma_r = lambda * lambda * fov * aperture_radius * aperture_radius / c;
  if (temperature > 0.0) {
    const double x = constants::planck * c / (lambda * constants::boltzmann * temperature);
    const double occupancy = x > 700.0 ? 0.0 : 1.0 / std::expm1(x);
    out.n_body = 2.0 * c / std::pow(lambda, 4) * occupancy;
  }
  out.n_th = out.gamma_r * out.n_body;
  return out;
}

/// Folds the untrusted share of the setup noise into the background.
inline double hybrid_trust_split(double n_b, double n_ex_untrusted, double eta_eff) {
  if (!(eta_eff > 0.0)) throw std::domain_error("hybrid_trust_split: eta_eff must be positive");
  if (!(n_b >= 0.0) || !(n_ex_untrusted >= 0.0)) {
    throw std::invalid_argument("hybrid_trust_split: photon numbers must be non-negative");
  }
  return n_b + n_ex_untrusted / eta_eff;
}

}  // namespace cvqkd
