// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo protocol data: Gaussian-modulated pairs through a thermal-loss
// channel, optional pointing-error fading with pilot binning, the de-fading
// map, and an estimator-coverage experiment.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvqkd/channel.hpp"
#include "cvqkd/finite_size.hpp"
#include "cvqkd/format.hpp"
#include "cvqkd/parallel.hpp"
#include "cvqkd/random.hpp"

namespace cvqkd {

/// Post-selection lattice: bin k covers [tau_min + k delta, tau_min + (k+1) delta).
struct Lattice {
  double tau_min = 0.0;
  double delta_tau = 0.0;
  int bins = 1;

  double lower(int k) const { return tau_min + k * delta_tau; }

  /// Bin of a transmissivity, or -1 below the threshold. Values at or above
  /// the top edge land in the last bin.
  int bin_of(double tau) const {
    if (tau < tau_min) return -1;
    if (delta_tau <= 0.0) return 0;
    const auto k = static_cast<int>(std::floor((tau - tau_min) / delta_tau));
    return std::min(k, bins - 1);
  }
};

struct SimBlock {
  // One entry per disclosed pair; heterodyne pulses yield two pairs.
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> tau_sample;
  std::vector<std::int64_t> pulse;
  std::vector<std::uint8_t> pilot;
  std::vector<int> bin;
  std::uint64_t seed = 0;
  int nu = 2;
  double sigma_x2 = 0.0;
  double tau = 0.0;   // fixed transmissivity, or tau_min after de-fading
  double nbar = 0.0;  // fixed-channel noise (unused for fading blocks)
  bool fading = false;
  bool idealized_pilots = true;

  std::size_t size() const { return x.size(); }

  void resize(std::size_t n) {
    x.resize(n);
    y.resize(n);
    tau_sample.resize(n);
    pulse.resize(n);
    pilot.resize(n);
    bin.resize(n);
  }
};

/// Pairs (x, y = sqrt(tau) x + z) for `count` pulses; z ~ N(0, 2 nbar + nu).
inline SimBlock simulate_block(double tau, double nbar, int nu, double sigma_x2, std::int64_t count,
                               std::uint64_t seed, int jobs = 1) {
  if (count < 1) throw std::invalid_argument("simulate_block: count must be >= 1");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("simulate_block: tau must lie in (0, 1]");
  if (!(nbar >= 0.0) || !(sigma_x2 >= 0.0)) throw std::invalid_argument("simulate_block: negative variance");
  if (nu != 1 && nu != 2) throw std::invalid_argument("simulate_block: nu must be 1 or 2");
  SimBlock b;
  b.seed = seed;
  b.nu = nu;
  b.sigma_x2 = sigma_x2;
  b.tau = tau;
  b.nbar = nbar;
  b.resize(static_cast<std::size_t>(count * nu));
  const double sx = std::sqrt(sigma_x2);
  const double sz = std::sqrt(2.0 * nbar + nu);
  const double st = std::sqrt(tau);
  parallel_chunks(count, jobs, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      const auto g = rng::normals(seed, rng::stream_signal, static_cast<std::uint64_t>(i));
      for (int q = 0; q < nu; ++q) {
        const auto j = static_cast<std::size_t>(i * nu + q);
        b.x[j] = sx * g[2 * q];
        b.y[j] = st * b.x[j] + sz * g[2 * q + 1];
        b.tau_sample[j] = tau;
        b.pulse[j] = i;
        b.pilot[j] = 0;
        b.bin[j] = 0;
      }
    }
  });
  return b;
}

struct FadingSimConfig {
  FadingModel fading;
  std::function<double(double)> nbar_of_tau;  // total noise at a given transmissivity
  int nu = 2;
  double sigma_x2 = 9.0;
  std::int64_t count = 0;
  std::uint64_t seed = 0;
  double pilot_fraction = 0.0;
  Lattice lattice;
  double pilot_noise_sd = 0.0;  // 0 = idealized bin assignment
  int jobs = 1;
};

/// Fading pulses: r ~ Weibull(sigma_P), tau = tau(r), then a thermal-loss pair.
inline SimBlock simulate_fading_block(const FadingSimConfig& cfg) {
  if (cfg.count < 1) throw std::invalid_argument("simulate_fading_block: count must be >= 1");
  if (cfg.nu != 1 && cfg.nu != 2) throw std::invalid_argument("simulate_fading_block: nu must be 1 or 2");
  if (!cfg.nbar_of_tau) throw std::invalid_argument("simulate_fading_block: missing noise model");
  if (!(cfg.pilot_fraction >= 0.0 && cfg.pilot_fraction < 1.0)) {
    throw std::invalid_argument("simulate_fading_block: pilot fraction must lie in [0, 1)");
  }
  cfg.fading.validate();
  SimBlock b;
  b.seed = cfg.seed;
  b.nu = cfg.nu;
  b.sigma_x2 = cfg.sigma_x2;
  b.tau = cfg.fading.eta;
  b.fading = true;
  b.idealized_pilots = cfg.pilot_noise_sd == 0.0;
  b.resize(static_cast<std::size_t>(cfg.count * cfg.nu));
  const double sx = std::sqrt(cfg.sigma_x2);
  parallel_chunks(cfg.count, cfg.jobs, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      const auto idx = static_cast<std::uint64_t>(i);
      const auto u = rng::uniforms(cfg.seed, rng::stream_fading, idx);
      const double r = cfg.fading.sigma_p > 0.0 ? weibull_deflection_sample(u[0], cfg.fading.sigma_p) : 0.0;
      // Deep-tail deflections underflow; keep tau positive for the noise model.
      const double tau = std::max(pointing_tau_approx(r, cfg.fading), std::numeric_limits<double>::min());
      const bool is_pilot = u[1] < cfg.pilot_fraction;
      double tau_seen = tau;
      if (cfg.pilot_noise_sd > 0.0) tau_seen += cfg.pilot_noise_sd * rng::box_muller(u[2], u[3]).first;
      const int bin = cfg.lattice.bin_of(tau_seen);
      const double sz = std::sqrt(2.0 * cfg.nbar_of_tau(tau) + cfg.nu);
      const double st = std::sqrt(tau);
      const auto g = rng::normals(cfg.seed, rng::stream_signal, idx);
      for (int q = 0; q < cfg.nu; ++q) {
        const auto j = static_cast<std::size_t>(i * cfg.nu + q);
        b.x[j] = sx * g[2 * q];
        b.y[j] = st * b.x[j] + sz * g[2 * q + 1];
        b.tau_sample[j] = tau;
        b.pulse[j] = i;
        b.pilot[j] = is_pilot ? 1 : 0;
        b.bin[j] = bin;
      }
    }
  });
  return b;
}

/// Collapses post-selected signal pairs onto the single transmissivity
/// tau_min: y~ = sqrt(tau_min/tau_k) y + sqrt(1 - tau_min/tau_k) xi, xi ~ N(0, nu).
/// Pilots and pairs below threshold are dropped.
inline SimBlock defade_block(const SimBlock& in, const Lattice& lattice, std::uint64_t seed) {
  SimBlock out;
  out.seed = seed;
  out.nu = in.nu;
  out.sigma_x2 = in.sigma_x2;
  out.tau = lattice.tau_min;
  out.fading = in.fading;
  out.idealized_pilots = in.idealized_pilots;
  std::size_t kept = 0;
  for (std::size_t j = 0; j < in.size(); ++j) {
    if (in.pilot[j] == 0 && in.bin[j] >= 0) ++kept;
  }
  out.x.reserve(kept);
  out.y.reserve(kept);
  out.tau_sample.reserve(kept);
  out.pulse.reserve(kept);
  out.pilot.reserve(kept);
  out.bin.reserve(kept);
  const double sq_nu = std::sqrt(static_cast<double>(in.nu));
  for (std::size_t j = 0; j < in.size(); ++j) {
    if (in.pilot[j] != 0 || in.bin[j] < 0) continue;
    const double tau_k = lattice.lower(in.bin[j]);
    if (tau_k < lattice.tau_min * (1.0 - 1e-12)) {
      throw std::domain_error("defade_block: bin transmissivity below tau_min");
    }
    const double ratio = std::min(1.0, lattice.tau_min / tau_k);
    // One normal per pair: word selects the quadrature within the pulse.
    const auto g = rng::normals(seed, rng::stream_defade, static_cast<std::uint64_t>(in.pulse[j]));
    const int q = static_cast<int>(j % static_cast<std::size_t>(in.nu));
    const double xi = sq_nu * g[q];
    out.x.push_back(in.x[j]);
    out.y.push_back(std::sqrt(ratio) * in.y[j] + std::sqrt(1.0 - ratio) * xi);
    out.tau_sample.push_back(in.tau_sample[j]);
    out.pulse.push_back(in.pulse[j]);
    out.pilot.push_back(0);
    out.bin.push_back(in.bin[j]);
  }
  return out;
}

/// Writes the block as CSV: index,pilot_flag,x,y,tau_sample,bin.
inline void write_block_csv(std::ostream& os, const SimBlock& b) {
  os << "index,pilot_flag,x,y,tau_sample,bin\n";
  for (std::size_t j = 0; j < b.size(); ++j) {
    os << format_int(static_cast<std::int64_t>(j)) << ',' << int{b.pilot[j]} << ',' << format_double(b.x[j]) << ','
       << format_double(b.y[j]) << ',' << format_double(b.tau_sample[j]) << ',' << b.bin[j] << '\n';
  }
}

struct CoverageScenario {
  double tau = 0.3;
  double nbar = 0.05;
  int nu = 1;
  double sigma_x2 = 9.0;
  std::int64_t m_p = 100'000;  // pairs per round
};

struct CoverageReport {
  int rounds = 0;
  double eps_pe = 0.0;
  double w = 0.0;
  int tau_failures = 0;    // tau' > tau
  int nbar_failures = 0;   // n' < n
  double tau_failure_rate = 0.0;
  double nbar_failure_rate = 0.0;
  double binomial_3sigma_upper = 0.0;  // eps_pe + 3 sqrt(eps_pe (1 - eps_pe) / rounds)
  double median_tau_margin = 0.0;      // median of tau_hat - tau'
};

/// Repeats simulate -> estimate -> bound and counts one-sided bound failures.
/// `w_override` replaces the confidence parameter derived from eps_pe.
inline CoverageReport estimator_coverage_experiment(const CoverageScenario& sc, int rounds, double eps_pe,
                                                    std::uint64_t seed, int jobs = 1,
                                                    std::optional<double> w_override = std::nullopt) {
  if (rounds < 100) throw std::invalid_argument("estimator_coverage_experiment: need at least 100 rounds");
  if (sc.m_p % sc.nu != 0) throw std::invalid_argument("estimator_coverage_experiment: m_p must be a multiple of nu");
  CoverageReport rep;
  rep.rounds = rounds;
  rep.eps_pe = eps_pe;
  rep.w = w_override.value_or(confidence_w(eps_pe));
  std::vector<std::uint8_t> tau_fail(static_cast<std::size_t>(rounds));
  std::vector<std::uint8_t> n_fail(static_cast<std::size_t>(rounds));
  std::vector<double> margin(static_cast<std::size_t>(rounds));
  parallel_chunks(rounds, jobs, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t k = begin; k < end; ++k) {
      const auto block = simulate_block(sc.tau, sc.nbar, sc.nu, sc.sigma_x2, sc.m_p / sc.nu,
                                        rng::derive_seed(seed, static_cast<std::uint64_t>(k)));
      const auto est = empirical_estimators(block.x, block.y, sc.nu);
      const auto wc = worst_case_estimators(est.tau_hat, est.n_hat, sc.sigma_x2, est.sigma_z2_hat,
                                            static_cast<double>(est.m_p), rep.w);
      const auto i = static_cast<std::size_t>(k);
      tau_fail[i] = wc.tau_wc > sc.tau ? 1 : 0;
      n_fail[i] = wc.nbar_wc < sc.nbar ? 1 : 0;
      margin[i] = est.tau_hat - wc.tau_wc;
    }
  });
  for (int k = 0; k < rounds; ++k) {
    rep.tau_failures += tau_fail[static_cast<std::size_t>(k)];
    rep.nbar_failures += n_fail[static_cast<std::size_t>(k)];
  }
  rep.tau_failure_rate = static_cast<double>(rep.tau_failures) / rounds;
  rep.nbar_failure_rate = static_cast<double>(rep.nbar_failures) / rounds;
  rep.binomial_3sigma_upper = eps_pe + 3.0 * std::sqrt(eps_pe * (1.0 - eps_pe) / rounds);
  std::nth_element(margin.begin(), margin.begin() + rounds / 2, margin.end());
  rep.median_tau_margin = margin[static_cast<std::size_t>(rounds / 2)];
  return rep;
}

}  // namespace cvqkd
