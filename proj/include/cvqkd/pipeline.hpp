// SPDX-License-Identifier: Apache-2.0
//
// Single-point evaluation: resolve the physical channel at an abscissa,
// form the worst-case estimators, and assemble asymptotic and composable
// rates for one (trust, security, attack) curve.

#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvqkd/channel.hpp"
#include "cvqkd/finite_size.hpp"
#include "cvqkd/noise.hpp"
#include "cvqkd/rates.hpp"

namespace cvqkd {

enum class AttackModel { collective, general };
enum class ChannelFamily { fixed_loss, optical_fixed, optical_mobile, microwave };
enum class LossMode { channel, total };

inline const char* to_string(AttackModel a) { return a == AttackModel::collective ? "collective" : "general"; }

inline const char* to_string(ChannelFamily f) {
  switch (f) {
    case ChannelFamily::fixed_loss: return "fixed-loss";
    case ChannelFamily::optical_fixed: return "optical-fixed";
    case ChannelFamily::optical_mobile: return "optical-mobile";
    case ChannelFamily::microwave: return "microwave";
  }
  return "?";
}

struct Curve {
  TrustLevel trust = TrustLevel::untrusted;
  SecurityType security = SecurityType::standard;
  AttackModel attack = AttackModel::collective;

  std::string label() const {
    return std::string(to_string(trust)) + "-" + to_string(security) + "-" + to_string(attack);
  }
};

/// Resolved physics for every channel family; fields unused by a family are ignored.
struct LinkConfig {
  ChannelFamily family = ChannelFamily::fixed_loss;
  Detection detection = Detection::heterodyne;
  SetupConfig setup;
  double eta_eff = 0.7;
  double n_b = 1.0 / 500.0;
  LossMode loss_mode = LossMode::channel;
  // Free-space optics.
  BeamConfig beam;
  double aperture = 0.01;
  double eta_atm = 1.0;
  // Fading.
  double angular_error = 0.0;
  double f_th = 0.8;
  int bins = 50;
  double min_p_delta = 1e-6;
  // Microwave.
  double gain = 10.0;
  double n_th = 0.0;
  // Energy test margin; defaults to 3 sqrt(n_T + 1).
  std::optional<double> c_et;
};

struct PointResult {
  double abscissa = std::numeric_limits<double>::quiet_NaN();
  Curve curve;
  double eta_ch = std::numeric_limits<double>::quiet_NaN();
  double tau = std::numeric_limits<double>::quiet_NaN();
  double nbar = std::numeric_limits<double>::quiet_NaN();
  double n_ex = std::numeric_limits<double>::quiet_NaN();
  double rate_asymptotic = std::numeric_limits<double>::quiet_NaN();
  double mutual_information = std::numeric_limits<double>::quiet_NaN();  // at the estimators
  double holevo = std::numeric_limits<double>::quiet_NaN();
  double rate_pe = std::numeric_limits<double>::quiet_NaN();
  double rate_composable = std::numeric_limits<double>::quiet_NaN();
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  double tau_est = std::numeric_limits<double>::quiet_NaN();
  double nbar_est = std::numeric_limits<double>::quiet_NaN();
  double n_b_est = std::numeric_limits<double>::quiet_NaN();
  double p_delta = 1.0;
  double key_signals = std::numeric_limits<double>::quiet_NaN();
  double plob = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> warnings;
  std::string status = "ok";
};

/// Cross-field rules shared by the config layer and direct callers.
inline void check_curve(const LinkConfig& link, const Curve& c) {
  if (c.security == SecurityType::line_of_sight && c.trust == TrustLevel::untrusted) {
    throw std::invalid_argument("rule los-requires-trusted-noise: line-of-sight security needs trust eve1 or eve2");
  }
  if (c.attack == AttackModel::general && link.detection != Detection::heterodyne) {
    throw std::invalid_argument("rule general-requires-heterodyne: general attacks need heterodyne detection");
  }
  if (link.family == ChannelFamily::microwave) {
    if (c.attack != AttackModel::collective ||
        (c.security == SecurityType::standard && c.trust != TrustLevel::untrusted)) {
      throw std::invalid_argument(
          "rule microwave-curves: microwave links support eve3-standard-collective and line-of-sight collective only");
    }
  }
}

namespace detail {

inline double plob_or_nan(double tau, double n) {
  if (!(tau > 0.0 && tau < 1.0)) return std::numeric_limits<double>::quiet_NaN();
  return plob_thermal_bound(tau, n);
}

inline double finish_composable(PointResult& r, const ProtocolParams& p, const LinkConfig& link, const Curve& c,
                                double p_delta) {
  r.p_delta = p_delta;
  r.key_signals = static_cast<double>(p.key_signals());
  if (c.attack == AttackModel::general) {
    const double n_t = (p.mu - 1.0) / 2.0;
    const double eps = total_epsilon(p);
    const auto g = general_attack_extension(p, link.detection, n_t, eps, link.c_et, p_delta);
    r.epsilon = g.eps_prime;
    return composable_rate_general(r.rate_pe, p, g, p_delta);
  }
  r.epsilon = total_epsilon(p);
  return composable_rate(r.rate_pe, p, p_delta);
}

inline void append(std::vector<std::string>& out, const std::vector<std::string>& in) {
  out.insert(out.end(), in.begin(), in.end());
}

}  // namespace detail

/// Fixed (non-fading) link at channel transmissivity eta_ch.
inline PointResult evaluate_fixed_channel(double eta_ch, const LinkConfig& link, const ProtocolParams& p,
                                          const Curve& c) {
  check_curve(link, c);
  p.validate();
  const auto& cfg = link.setup;
  PointResult r;
  r.curve = c;
  r.eta_ch = eta_ch;
  r.tau = eta_ch * link.eta_eff;
  r.n_ex = setup_noise(cfg, r.tau);
  r.nbar = link.eta_eff * link.n_b + r.n_ex;
  const double mu = p.mu;
  const auto truth = ChannelPoint::from_components(eta_ch, link.eta_eff, link.n_b, r.n_ex, link.detection, mu);
  r.rate_asymptotic = asymptotic_rate(truth, c.trust, c.security, p.beta).rate;
  r.plob = detail::plob_or_nan(r.tau, r.nbar);

  const int nu = nu_det(link.detection);
  const double w = confidence_w(p.eps_pe);
  auto est = worst_case_estimators(r.tau, r.nbar, mu - 1.0, 2.0 * r.nbar + nu,
                                   static_cast<double>(nu) * static_cast<double>(p.pe), w);
  setup_and_background_bounds(est, cfg, link.eta_eff);
  detail::append(r.warnings, est.warnings);
  r.tau_est = est.tau_wc;
  r.nbar_est = est.nbar_wc;
  r.n_b_est = est.n_b_wc;
  const auto worst = ChannelPoint::from_totals(est.tau_wc, link.eta_eff, est.n_b_wc, est.nbar_wc, link.detection, mu);
  const auto report = asymptotic_rate(worst, c.trust, c.security, p.beta);
  r.mutual_information = report.mutual_information;
  r.holevo = report.holevo;
  r.rate_pe = report.rate;
  r.rate_composable = detail::finish_composable(r, p, link, c, 1.0);
  return r;
}

/// Channel transmissivity for a fixed-loss abscissa in dB.
inline double eta_ch_from_loss_db(double db, const LinkConfig& link) {
  if (!(db >= 0.0)) throw std::domain_error("loss in dB must be non-negative");
  const double t = std::pow(10.0, -db / 10.0);
  if (link.loss_mode == LossMode::channel) return t;
  const double eta_ch = t / link.eta_eff;
  if (eta_ch > 1.0) throw std::domain_error("total loss below the detector loss");
  return eta_ch;
}

/// Fading link evaluated at its maximum distance z_max.
inline PointResult evaluate_mobile(double z_max, const LinkConfig& link, const ProtocolParams& p, const Curve& c) {
  check_curve(link, c);
  p.validate();
  const auto& cfg = link.setup;
  const auto fading = make_fading_model(link.beam, z_max, link.aperture, link.eta_eff, link.angular_error, link.eta_atm);
  PointResult r;
  r.curve = c;
  r.eta_ch = fading.eta / link.eta_eff;
  r.tau = fading.eta;
  r.n_ex = setup_noise(cfg, r.tau);
  r.nbar = link.eta_eff * link.n_b + r.n_ex;
  const auto aligned = ChannelPoint::from_components(r.eta_ch, link.eta_eff, link.n_b, r.n_ex, link.detection, p.mu);
  r.rate_asymptotic = asymptotic_rate(aligned, c.trust, c.security, p.beta).rate;
  r.plob = detail::plob_or_nan(r.tau, r.nbar);

  const double w = confidence_w(p.eps_pe);
  const auto s = mobile_worst_case(p, fading, cfg, link.n_b, link.eta_eff, link.f_th, link.bins, w, link.min_p_delta);
  detail::append(r.warnings, s.warnings);
  r.tau_est = s.tau_lb;
  r.nbar_est = s.n_ub;
  r.n_b_est = s.n_b_ub;
  const auto worst = ChannelPoint::from_totals(s.tau_lb, link.eta_eff, s.n_b_ub, s.n_ub, link.detection, p.mu);
  const auto report = asymptotic_rate(worst, c.trust, c.security, p.beta);
  r.mutual_information = report.mutual_information;
  r.holevo = report.holevo;
  r.rate_pe = report.rate;
  r.rate_composable = detail::finish_composable(r, p, link, c, s.p_delta);
  return r;
}

/// Short-range microwave link at distance z.
inline PointResult evaluate_microwave(double z, const LinkConfig& link, const ProtocolParams& p, const Curve& c) {
  check_curve(link, c);
  p.validate();
  PointResult r;
  r.curve = c;
  const auto geo = microwave_transmissivity(link.gain, link.aperture, z);
  r.eta_ch = geo.eta_ch;
  r.tau = link.eta_eff * geo.eta_ch;
  r.nbar = link.n_th;
  r.n_ex = 0.0;
  const double sigma_x2 = p.mu - 1.0;
  const int nu = nu_det(link.detection);
  const bool los = c.security == SecurityType::line_of_sight;
  auto holevo_at = [&](double tau, double n_mi, double n_eve) {
    if (los) {
      const auto s = microwave_los_cm(tau, sigma_x2, n_eve);
      return holevo_los_from(s.b, s.theta, s.phi, link.detection);
    }
    return holevo_untrusted_closed_form(ChannelPoint::from_totals(tau, link.eta_eff, 0.0, n_mi, link.detection, p.mu));
  };
  auto mi_at = [&](double tau, double n) {
    return mutual_information(ChannelPoint::from_totals(tau, link.eta_eff, 0.0, n, link.detection, p.mu));
  };
  r.rate_asymptotic = p.beta * mi_at(r.tau, r.nbar) - holevo_at(r.tau, r.nbar, r.nbar);
  r.plob = detail::plob_or_nan(r.tau, r.nbar);

  const double w = confidence_w(p.eps_pe);
  const auto e = microwave_estimators(r.tau, link.n_th, sigma_x2, static_cast<double>(p.pe), nu, w);
  detail::append(r.warnings, e.warnings);
  r.tau_est = e.tau_wc;
  r.nbar_est = e.n_th_wc;
  r.n_b_est = los ? e.n_th_bc : std::numeric_limits<double>::quiet_NaN();
  r.mutual_information = mi_at(e.tau_wc, e.n_th_wc);
  r.holevo = holevo_at(e.tau_wc, e.n_th_wc, e.n_th_bc);
  r.rate_pe = p.beta * r.mutual_information - r.holevo;
  r.rate_composable = detail::finish_composable(r, p, link, c, 1.0);
  return r;
}

/// Dispatches on the channel family; x is dB, z or z_max accordingly.
inline PointResult evaluate_point(double x, const LinkConfig& link, const ProtocolParams& p, const Curve& c) {
  PointResult r;
  switch (link.family) {
    case ChannelFamily::fixed_loss:
      r = evaluate_fixed_channel(eta_ch_from_loss_db(x, link), link, p, c);
      break;
    case ChannelFamily::optical_fixed: {
      const auto d = diffraction_transmissivity(link.beam, x, link.aperture, link.eta_atm);
      r = evaluate_fixed_channel(d.eta_ch, link, p, c);
      break;
    }
    case ChannelFamily::optical_mobile:
      r = evaluate_mobile(x, link, p, c);
      break;
    case ChannelFamily::microwave:
      r = evaluate_microwave(x, link, p, c);
      break;
  }
  r.abscissa = x;
  return r;
}

}  // namespace cvqkd
