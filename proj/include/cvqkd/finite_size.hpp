// SPDX-License-Identifier: Apache-2.0
//
// Finite-size corrections: confidence parameter, worst/best-case estimators,
// AEP and Theta terms, epsilon bookkeeping, the coherent-attack extension and
// the fading (mobile) worst-case pipeline.

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvqkd/channel.hpp"
#include "cvqkd/noise.hpp"
#include "cvqkd/rates.hpp"
#include "cvqkd/special.hpp"

namespace cvqkd {

struct ProtocolParams {
  std::int64_t total = 10'000'000;  // N
  std::int64_t pe = 1'000'000;      // m
  std::int64_t pilots = 0;          // m_PL
  double f_et = 0.0;                // energy-test fraction
  int d = 32;                       // discretisation alphabet
  double beta = 0.95;
  double p_ec = 0.9;
  double eps_pe = 0x1p-33;
  double eps_s = 0x1p-33;
  double eps_h = 0x1p-33;
  double eps_cor = 0x1p-33;
  double mu = 10.0;

  /// Key-generation signals, floored to a whole number of pulses.
  std::int64_t key_signals() const {
    const auto rest = total - pe - pilots;
    if (f_et > 0.0) return static_cast<std::int64_t>(std::floor(static_cast<double>(rest) / (1.0 + f_et)));
    return rest;
  }

  void validate() const {
    if (total <= 0 || pe < 1 || pilots < 0 || total - pe - pilots < 1) {
      throw std::invalid_argument("ProtocolParams: need N > m + m_PL with m >= 1");
    }
    if (!(f_et >= 0.0)) throw std::invalid_argument("ProtocolParams: f_et must be non-negative");
    if (d < 2 || (d & (d - 1)) != 0) throw std::invalid_argument("ProtocolParams: d must be a power of 2 >= 2");
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("ProtocolParams: beta must lie in [0, 1]");
    if (!(p_ec > 0.0 && p_ec <= 1.0)) throw std::invalid_argument("ProtocolParams: p_ec must lie in (0, 1]");
    for (double e : {eps_pe, eps_s, eps_h, eps_cor}) {
      if (!(e > 0.0 && e < 1.0)) throw std::invalid_argument("ProtocolParams: epsilons must lie in (0, 1)");
    }
    if (!(mu >= 1.0)) throw std::invalid_argument("ProtocolParams: mu must be >= 1");
  }
};

/// Number of standard deviations for a one-sided failure probability eps_pe.
inline double confidence_w(double eps_pe) {
  if (!(eps_pe > 0.0 && eps_pe < 0.5)) throw std::domain_error("confidence_w: eps_pe must lie in (0, 0.5)");
  if (eps_pe > 1e-17) return std::sqrt(2.0) * special::erfc_inv(2.0 * eps_pe);
  return std::sqrt(2.0 * std::log(1.0 / eps_pe));
}

struct EmpiricalEstimates {
  double t_hat = 0.0;         // sqrt-transmissivity
  double sigma_z2_hat = 0.0;  // noise variance
  double tau_hat = 0.0;
  double n_hat = 0.0;         // unfloored
  std::int64_t m_p = 0;
};

namespace detail {

// Neumaier-compensated sum, so results are insensitive to summation order.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      c_ += (sum_ - t) + v;
    } else {
      c_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

}  // namespace detail

inline EmpiricalEstimates empirical_estimators(std::span<const double> x, std::span<const double> y, int nu) {
  if (x.size() != y.size()) throw std::invalid_argument("empirical_estimators: x and y differ in length");
  if (x.size() < 2) throw std::invalid_argument("empirical_estimators: need at least two pairs");
  detail::CompensatedSum sxy;
  detail::CompensatedSum sxx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy.add(x[i] * y[i]);
    sxx.add(x[i] * x[i]);
  }
  if (!(sxx.value() > 0.0)) throw std::domain_error("empirical_estimators: sum of x^2 is zero");
  EmpiricalEstimates e;
  e.m_p = static_cast<std::int64_t>(x.size());
  e.t_hat = sxy.value() / sxx.value();
  detail::CompensatedSum szz;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - e.t_hat * x[i];
    szz.add(r * r);
  }
  e.sigma_z2_hat = szz.value() / static_cast<double>(e.m_p);
  e.tau_hat = e.t_hat * e.t_hat;
  e.n_hat = 0.5 * (e.sigma_z2_hat - nu);
  return e;
}

struct EstimatorSet {
  double tau = 0.0;        // point value fed in (true or estimated)
  double nbar = 0.0;
  double tau_wc = 0.0;     // tau'
  double tau_bc = 0.0;     // tau''
  double nbar_wc = 0.0;    // n'
  double n_ex_bc = 0.0;
  double n_b_wc = 0.0;     // n_B'
  double xi_tot_wc = 0.0;
  double xi_ch_wc = 0.0;
  double sigma_z2 = 0.0;
  double m_p = 0.0;
  double w = 0.0;
  std::vector<std::string> warnings;
};

/// tau', tau'' and n' from a point estimate and sample size m_p.
inline EstimatorSet worst_case_estimators(double tau, double nbar, double sigma_x2, double sigma_z2, double m_p,
                                          double w, double tau_floor = 1e-12) {
  if (!(m_p >= 1.0)) throw std::domain_error("worst_case_estimators: m_p must be >= 1");
  if (!(sigma_x2 > 0.0)) throw std::domain_error("worst_case_estimators: sigma_x^2 must be positive");
  EstimatorSet e;
  e.tau = tau;
  e.nbar = nbar;
  e.sigma_z2 = sigma_z2;
  e.m_p = m_p;
  e.w = w;
  const double margin = 2.0 * w * std::sqrt((2.0 * tau * tau + tau * sigma_z2 / sigma_x2) / m_p);
  e.tau_wc = tau - margin;
  e.tau_bc = tau + margin;
  e.nbar_wc = nbar + w * sigma_z2 / std::sqrt(2.0 * m_p);
  if (e.tau_wc < tau_floor) {
    e.tau_wc = tau_floor;
    e.warnings.emplace_back("tau_wc_floored");
  }
  if (e.nbar_wc < 0.0) {
    e.nbar_wc = 0.0;
    e.warnings.emplace_back("nbar_wc_floored");
  }
  return e;
}

/// Completes an estimator set with the best-case setup noise and the
/// worst-case background it implies.
inline void setup_and_background_bounds(EstimatorSet& e, const SetupConfig& cfg, double eta_eff) {
  if (!(e.tau_bc > 0.0)) throw std::domain_error("setup_and_background_bounds: tau'' must be positive");
  if (!(eta_eff > 0.0)) throw std::domain_error("setup_and_background_bounds: eta_eff must be positive");
  e.n_ex_bc = setup_noise(cfg, cfg.lo_kind == LoKind::transmitted ? e.tau_bc : e.tau_wc);
  e.n_b_wc = (e.nbar_wc - e.n_ex_bc) / eta_eff;
  if (e.n_b_wc < 0.0) {
    e.n_b_wc = 0.0;
    e.warnings.emplace_back("n_b_wc_floored");
  }
  e.xi_tot_wc = excess_from_photons(e.nbar_wc, e.tau_wc);
  e.xi_ch_wc = excess_from_photons(eta_eff * e.n_b_wc, e.tau_wc);
}

enum class AepPrefactor { standard, improved };

inline double aep_prefactor(int d, AepPrefactor kind) {
  const double s = std::sqrt(static_cast<double>(d));
  return kind == AepPrefactor::standard ? std::log2(2.0 * s + 1.0) : std::log2(s + 2.0);
}

inline double delta_aep(int d, double p_ec, double eps_s, AepPrefactor kind = AepPrefactor::standard) {
  if (d < 2) throw std::domain_error("delta_aep: d must be >= 2");
  if (!(eps_s > 0.0 && eps_s < 1.0) || !(p_ec > 0.0 && p_ec <= 1.0)) {
    throw std::domain_error("delta_aep: probabilities out of range");
  }
  // log2(18 / (p_ec^2 eps_s^4)) assembled in logs to survive eps_s ~ 1e-43.
  const double arg = std::log2(18.0) - 2.0 * std::log2(p_ec) - 4.0 * std::log2(eps_s);
  return 4.0 * aep_prefactor(d, kind) * std::sqrt(arg);
}

inline double theta_term(double p_ec, double eps_s, double eps_h) {
  return std::log2(p_ec * (1.0 - eps_s * eps_s / 3.0)) + 2.0 * std::log2(std::sqrt(2.0) * eps_h);
}

inline double total_epsilon(const ProtocolParams& p) {
  return 2.0 * p.p_ec * p.eps_pe + p.eps_cor + p.eps_s + p.eps_h;
}

/// Composable rate in bits per use, with an optional post-selected fraction
/// p_delta and privacy-amplification penalty phi.
inline double composable_rate(double r_pe, const ProtocolParams& p, double p_delta = 1.0, double phi = 0.0,
                              AepPrefactor kind = AepPrefactor::standard) {
  const double n_eff = static_cast<double>(p.key_signals()) * p_delta;
  if (!(n_eff >= 1.0)) throw std::domain_error("composable_rate: n * p_delta must be >= 1");
  const double delta = delta_aep(p.d, p.p_ec, p.eps_s, kind);
  const double theta = theta_term(p.p_ec, p.eps_s, p.eps_h);
  return n_eff * p.p_ec / static_cast<double>(p.total) *
         (r_pe - delta / std::sqrt(n_eff) + (theta - phi) / n_eff);
}

struct GeneralAttackTerms {
  double n = 0.0;         // key-generation signals after the energy test, times p_delta
  double m_et = 0.0;
  double n_t = 0.0;       // mean input photons
  double c_et = 0.0;
  double d_et = 0.0;
  double vartheta = 0.0;
  double k_n = 0.0;
  double phi = 0.0;
  double eps_prime = 0.0;
};

/// Energy-test extension to coherent attacks. c_et defaults to 3 sqrt(n_T + 1).
inline GeneralAttackTerms general_attack_extension(const ProtocolParams& p, Detection det, double n_t, double eps,
                                                   std::optional<double> c_et = std::nullopt, double p_delta = 1.0) {
  if (det != Detection::heterodyne) {
    throw std::invalid_argument("general_attack_extension: coherent-attack security needs heterodyne detection");
  }
  if (!(p.f_et > 0.0)) throw std::invalid_argument("general_attack_extension: f_et must be positive");
  GeneralAttackTerms g;
  g.n = static_cast<double>(p.key_signals()) * p_delta;
  g.m_et = p.f_et * g.n;
  g.n_t = n_t;
  g.c_et = c_et.value_or(3.0 * std::sqrt(n_t + 1.0));
  g.d_et = n_t + g.c_et / std::sqrt(g.m_et);
  g.vartheta = std::log(8.0 / eps) / (2.0 * g.n);
  const double denom = 1.0 - 2.0 * std::sqrt(g.vartheta / p.f_et);
  if (!(denom > 0.0)) {
    throw std::domain_error("general_attack_extension: block too small for the energy-test fraction");
  }
  const double sv = std::sqrt(g.vartheta);
  g.k_n = std::max(1.0, 2.0 * g.n * g.d_et * (1.0 + 2.0 * sv + 2.0 * g.vartheta) / denom);
  g.phi = 2.0 * static_cast<double>(special::ceil_log2_binomial_plus4_choose4(g.k_n));
  g.eps_prime = std::pow(g.k_n, 4) * eps / 50.0;
  return g;
}

inline double composable_rate_general(double r_pe, const ProtocolParams& p, const GeneralAttackTerms& g,
                                      double p_delta = 1.0, AepPrefactor kind = AepPrefactor::standard) {
  return composable_rate(r_pe, p, p_delta, g.phi, kind);
}

struct FadingEstimatorSet {
  double tau_min = 0.0;
  double tau_max = 0.0;
  double f_th = 0.0;
  double delta_tau = 0.0;
  int bins = 0;
  double p_delta = 0.0;
  std::vector<double> p_k;
  std::vector<double> tau_k;  // lower edge of each bin
  double n_wc = 0.0;
  double n_ex_wc = 0.0;
  double n_star = 0.0;
  double tau_lb = 0.0;
  double n_ub = 0.0;
  double n_ex_bc = 0.0;
  double n_b_ub = 0.0;
  double m_delta = 0.0;
  std::vector<std::string> warnings;
};

/// Worst-case estimators for a fading link evaluated at its maximum distance.
inline FadingEstimatorSet mobile_worst_case(const ProtocolParams& p, const FadingModel& f, const SetupConfig& cfg,
                                            double n_b, double eta_eff, double f_th, int bins, double w,
                                            double min_p_delta = 1e-6) {
  if (!(f_th > 0.0 && f_th < 1.0)) throw std::invalid_argument("mobile_worst_case: f_th must lie in (0, 1)");
  if (bins < 1) throw std::invalid_argument("mobile_worst_case: need at least one bin");
  FadingEstimatorSet s;
  s.f_th = f_th;
  s.bins = bins;
  s.tau_max = f.eta;
  s.tau_min = f_th * f.eta;
  s.delta_tau = (s.tau_max - s.tau_min) / bins;
  s.p_delta = fading_probability(s.tau_min, s.tau_max, f);
  if (!(s.p_delta >= min_p_delta)) {
    throw std::domain_error("mobile_worst_case: post-selection probability " + std::to_string(s.p_delta) +
                            " below the configured minimum");
  }
  const int nu = cfg.nu_det;
  const double sigma_x2 = cfg.modulation;
  const double th_el = theta_el(cfg);
  const double th_ph = theta_ph(cfg);
  s.n_ex_wc = cfg.lo_kind == LoKind::transmitted ? setup_noise(cfg, s.tau_min) : setup_noise(cfg, 1.0);
  s.n_wc = eta_eff * n_b + s.n_ex_wc;

  s.p_k.reserve(static_cast<std::size_t>(bins));
  s.tau_k.reserve(static_cast<std::size_t>(bins));
  double weighted = 0.0;
  for (int k = 0; k < bins; ++k) {
    const double lo = s.tau_min + k * s.delta_tau;
    const double hi = k + 1 == bins ? s.tau_max : lo + s.delta_tau;
    const double pk = fading_probability(lo, hi, f);
    s.tau_k.push_back(lo);
    s.p_k.push_back(pk);
    const double n_k = eta_eff * n_b + setup_noise(cfg, lo);
    weighted += pk * n_k / lo;
  }
  s.n_star = s.tau_min / s.p_delta * weighted;

  s.m_delta = nu * static_cast<double>(p.pe) * s.p_delta;
  const double sigma_wc = 2.0 * s.n_wc + nu;
  s.tau_lb = s.tau_min - 2.0 * w * std::sqrt((2.0 * s.tau_min * s.tau_min + s.tau_min * sigma_wc / sigma_x2) / s.m_delta);
  if (s.tau_lb < 1e-12) {
    s.tau_lb = 1e-12;
    s.warnings.emplace_back("tau_lb_floored");
  }
  s.n_ub = s.n_wc + w * sigma_wc / std::sqrt(2.0 * s.m_delta);
  s.n_ex_bc = cfg.lo_kind == LoKind::transmitted ? th_el + cfg.n_tlo_phase + cfg.n_other
                                                 : th_el + th_ph * s.tau_min + cfg.n_other;
  s.n_b_ub = (s.n_ub - s.n_ex_bc) / eta_eff;
  if (s.n_b_ub < 0.0) {
    s.n_b_ub = 0.0;
    s.warnings.emplace_back("n_b_ub_floored");
  }
  return s;
}

struct MicrowaveEstimates {
  double tau_wc = 0.0;
  double n_th_wc = 0.0;  // n_th'
  double n_th_bc = 0.0;  // n_th'', floored at 0
  std::vector<std::string> warnings;
};

inline MicrowaveEstimates microwave_estimators(double tau, double n_th, double sigma_x2, double m, int nu, double w) {
  if (!(m >= 1.0)) throw std::domain_error("microwave_estimators: m must be >= 1");
  MicrowaveEstimates e;
  const double sz2 = 2.0 * n_th + nu;
  const double mp = nu * m;
  e.tau_wc = tau - 2.0 * w * std::sqrt((2.0 * tau * tau + tau * sz2 / sigma_x2) / mp);
  if (e.tau_wc < 1e-12) {
    e.tau_wc = 1e-12;
    e.warnings.emplace_back("tau_wc_floored");
  }
  const double margin = w * sz2 / std::sqrt(2.0 * mp);
  e.n_th_wc = n_th + margin;
  e.n_th_bc = n_th - margin;
  if (e.n_th_bc < 0.0) {
    e.n_th_bc = 0.0;
    e.warnings.emplace_back("n_th_bc_floored");
  }
  return e;
}

}  // namespace cvqkd
