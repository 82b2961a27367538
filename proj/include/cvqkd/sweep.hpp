// SPDX-License-Identifier: Apache-2.0
//
// Batch drivers behind the CLI: rate points and sweeps, simulator runs and
// estimator coverage experiments, each producing a ResultTable.

#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvqkd/parallel.hpp"
#include "cvqkd/pipeline.hpp"
#include "cvqkd/report.hpp"
#include "cvqkd/scenario.hpp"
#include "cvqkd/simulator.hpp"

namespace cvqkd {

inline std::vector<std::string> rate_columns(const std::string& abscissa) {
  return {"index",         "point",         abscissa,          "curve",      "trust",
          "security",      "attack",        "eta_ch",          "tau",        "nbar",
          "n_ex",          "xi_tot",        "mutual_information", "holevo",     "rate_asymptotic", "rate_pe",
          "rate_composable_raw", "rate_composable", "epsilon", "tau_est",    "nbar_est",
          "n_b_est",       "p_delta",       "key_signals",     "plob",       "status",
          "warnings",      "scenario_hash", "seed",            "version"};
}

inline std::string failure_code(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::domain_error&) {
    return "failed:domain";
  } catch (const std::invalid_argument&) {
    return "failed:invalid-input";
  } catch (const std::runtime_error&) {
    return "failed:numerical";
  } catch (...) {
    return "failed:error";
  }
}

inline std::string failure_message(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

inline bool row_ok(const ResultTable& t, std::size_t row) {
  const auto* s = std::get_if<std::string>(&t.rows[row][t.column("status")]);
  return s != nullptr && *s == "ok";
}

inline std::size_t failed_rows(const ResultTable& t) {
  if (t.command != "rate" && t.command != "sweep") return 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) n += row_ok(t, i) ? 0 : 1;
  return n;
}

/// Evaluates every curve at every abscissa; rows are ordered by abscissa,
/// then by curve order in the scenario, whatever the completion order.
inline ResultTable run_points(const Scenario& sc, const std::vector<double>& xs, const std::string& command,
                              int jobs, bool clamp, std::uint64_t seed) {
  if (sc.curves.empty()) throw ConfigError(command + ": scenario defines no curve");
  const auto ncurves = static_cast<std::int64_t>(sc.curves.size());
  const auto tasks = static_cast<std::int64_t>(xs.size()) * ncurves;
  std::vector<PointResult> results(static_cast<std::size_t>(tasks));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(tasks));
  parallel_chunks(tasks, jobs, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t k = begin; k < end; ++k) {
      const auto i = static_cast<std::size_t>(k);
      const double x = xs[static_cast<std::size_t>(k / ncurves)];
      const auto& curve = sc.curves[static_cast<std::size_t>(k % ncurves)];
      try {
        results[i] = evaluate_point(x, sc.link, sc.params_for(curve), curve);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  });

  ResultTable t;
  t.command = command;
  t.seed = seed;
  t.columns = rate_columns(config::sweep_variable(sc.link.family));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::int64_t k = 0; k < tasks; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const auto& curve = sc.curves[static_cast<std::size_t>(k % ncurves)];
    PointResult r = results[i];
    std::string status = "ok";
    std::string warnings;
    if (errors[i]) {
      r = PointResult{};
      r.curve = curve;
      status = failure_code(errors[i]);
      warnings = failure_message(errors[i]);
    } else {
      for (const auto& w : r.warnings) warnings += (warnings.empty() ? "" : ";") + w;
      if (!std::isfinite(r.rate_composable) || !std::isfinite(r.rate_asymptotic)) status = "failed:non-finite";
    }
    const double raw = r.rate_composable;
    const double shown = clamp && std::isfinite(raw) ? std::max(raw, 0.0) : raw;
    t.rows.push_back({Cell{k}, Cell{static_cast<std::int64_t>(k / ncurves)}, Cell{xs[static_cast<std::size_t>(k / ncurves)]},
                      Cell{curve.label()}, Cell{std::string(to_string(curve.trust))},
                      Cell{std::string(to_string(curve.security))}, Cell{std::string(to_string(curve.attack))},
                      Cell{r.eta_ch}, Cell{r.tau}, Cell{r.nbar}, Cell{r.n_ex}, Cell{2.0 * r.nbar / r.tau}, Cell{r.mutual_information},
                      Cell{r.holevo}, Cell{r.rate_asymptotic}, Cell{r.rate_pe}, Cell{raw}, Cell{shown},
                      Cell{r.epsilon}, Cell{r.tau_est}, Cell{r.nbar_est}, Cell{r.n_b_est},
                      Cell{errors[i] ? nan : r.p_delta}, Cell{r.key_signals}, Cell{r.plob}, Cell{status},
                      Cell{warnings}, Cell{sc.hash_hex()}, Cell{static_cast<std::int64_t>(seed)},
                      Cell{std::string(library_version)}});
  }
  return t;
}

inline ResultTable run_sweep(const Scenario& sc, int jobs, bool clamp, std::uint64_t seed) {
  if (!sc.sweep.present) throw ConfigError("sweep: scenario has no [sweep] section");
  return run_points(sc, sc.sweep.abscissae(), "sweep", jobs, clamp, seed);
}

inline ResultTable run_rate(const Scenario& sc, double at, int jobs, bool clamp, std::uint64_t seed) {
  return run_points(sc, {at}, "rate", jobs, clamp, seed);
}

struct SimulationRun {
  ResultTable table;
  SimBlock block;  // raw block, or the de-faded one when de-fading ran
};

namespace detail {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  double se_var = 0.0;
  std::size_t n = 0;
};

inline Moments residual_moments(const SimBlock& b, double gain) {
  Moments m;
  m.n = b.size();
  if (m.n < 2) return m;
  double s = 0.0;
  for (std::size_t j = 0; j < m.n; ++j) s += b.y[j] - gain * b.x[j];
  m.mean = s / static_cast<double>(m.n);
  double s2 = 0.0;
  double s4 = 0.0;
  for (std::size_t j = 0; j < m.n; ++j) {
    const double d = b.y[j] - gain * b.x[j] - m.mean;
    s2 += d * d;
    s4 += d * d * d * d;
  }
  const auto n = static_cast<double>(m.n);
  m.var = s2 / (n - 1.0);
  const double m4 = s4 / n;
  m.se_var = std::sqrt(std::max(0.0, m4 - m.var * m.var) / n);
  return m;
}

/// Least-squares slope of y on x with its standard error.
inline std::pair<double, double> regression_slope(const SimBlock& b) {
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    sxx += b.x[j] * b.x[j];
    sxy += b.x[j] * b.y[j];
  }
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const double r = b.y[j] - slope * b.x[j];
    rss += r * r;
  }
  const double se = std::sqrt(rss / (static_cast<double>(b.size()) - 1.0) / sxx);
  return {slope, se};
}

}  // namespace detail

struct FadingSimulation {
  FadingSimConfig config;
  FadingEstimatorSet worst_case;
};

/// Simulator and worst-case settings for the scenario's [simulate] distance.
inline FadingSimulation fading_simulation(const Scenario& sc, std::uint64_t seed, int jobs) {
  const auto& sm = sc.simulate;
  const auto& link = sc.link;
  FadingSimulation out;
  const auto fading = make_fading_model(link.beam, sm.z, link.aperture, link.eta_eff, link.angular_error, link.eta_atm);
  out.worst_case = mobile_worst_case(sc.protocol, fading, link.setup, link.n_b, link.eta_eff, link.f_th, link.bins,
                                     confidence_w(sc.protocol.eps_pe), link.min_p_delta);
  const auto& s = out.worst_case;
  auto& cfg = out.config;
  cfg.fading = fading;
  const auto setup = link.setup;
  const double background = link.eta_eff * link.n_b;
  cfg.nbar_of_tau = [setup, background](double tau) { return background + setup_noise(setup, tau); };
  cfg.nu = nu_det(link.detection);
  cfg.sigma_x2 = sc.protocol.mu - 1.0;
  cfg.count = sm.pulses;
  cfg.seed = seed;
  cfg.pilot_fraction = sm.pilot_fraction;
  cfg.pilot_noise_sd = sm.pilot_noise;
  cfg.lattice = Lattice{s.tau_min, s.delta_tau, s.bins};
  cfg.jobs = jobs;
  return out;
}

/// Simulator run described by the scenario's [simulate] section.
inline SimulationRun run_simulation(const Scenario& sc, std::uint64_t seed, int jobs) {
  if (!sc.simulate.present) throw ConfigError("simulate: scenario has no [simulate] section");
  const auto& sm = sc.simulate;
  const int nu = nu_det(sc.link.detection);
  const double sigma_x2 = sc.protocol.mu - 1.0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  SimulationRun run;
  auto& t = run.table;
  t.command = "simulate";
  t.seed = seed;
  t.columns = {"statistic", "value", "expected", "std_error", "scenario_hash", "seed", "version"};
  auto add = [&](const std::string& name, double value, double expected, double se) {
    t.rows.push_back({Cell{name}, Cell{value}, Cell{expected}, Cell{se}, Cell{sc.hash_hex()},
                      Cell{static_cast<std::int64_t>(seed)}, Cell{std::string(library_version)}});
  };

  if (!sm.fading) {
    run.block = simulate_block(sm.tau, sm.nbar, nu, sigma_x2, sm.pulses, seed, jobs);
    const auto est = empirical_estimators(run.block.x, run.block.y, nu);
    const auto res = detail::residual_moments(run.block, std::sqrt(sm.tau));
    const double sz2 = 2.0 * sm.nbar + nu;
    add("pairs", static_cast<double>(run.block.size()), static_cast<double>(sm.pulses * nu), 0.0);
    add("tau_hat", est.tau_hat, sm.tau, nan);
    add("nbar_hat", est.n_hat, sm.nbar, nan);
    add("noise_variance", res.var, sz2, res.se_var);
    add("mutual_information_model", mutual_information(ChannelPoint::from_totals(sm.tau, 1.0, 0.0, sm.nbar,
                                                                                   sc.link.detection, sc.protocol.mu)),
        nan, nan);
    return run;
  }

  const auto [cfg, s] = fading_simulation(sc, seed, jobs);
  const auto raw = simulate_fading_block(cfg);

  std::int64_t signal_pulses = 0;
  std::int64_t selected = 0;
  for (std::size_t j = 0; j < raw.size(); j += static_cast<std::size_t>(nu)) {
    if (raw.pilot[j] != 0) continue;
    ++signal_pulses;
    if (raw.bin[j] >= 0) ++selected;
  }
  const double frac = static_cast<double>(selected) / static_cast<double>(std::max<std::int64_t>(signal_pulses, 1));
  add("pairs", static_cast<double>(raw.size()), static_cast<double>(sm.pulses * nu), 0.0);
  add("eta", cfg.fading.eta, nan, nan);
  add("tau_min", s.tau_min, nan, nan);
  add("post_selected_fraction", frac, s.p_delta,
      std::sqrt(s.p_delta * (1.0 - s.p_delta) / static_cast<double>(std::max<std::int64_t>(signal_pulses, 1))));
  add("n_wc", s.n_wc, nan, nan);
  if (!sm.defade) {
    run.block = raw;
    return run;
  }
  run.block = defade_block(raw, cfg.lattice, rng::derive_seed(seed, 1));
  const auto res = detail::residual_moments(run.block, std::sqrt(s.tau_min));
  const auto [slope, slope_se] = detail::regression_slope(run.block);
  add("defaded_pairs", static_cast<double>(run.block.size()), nan, nan);
  add("defaded_noise_variance", res.var, 2.0 * s.n_star + nu, res.se_var);
  add("defaded_slope", slope, std::sqrt(s.tau_min), slope_se);
  add("n_star", s.n_star, nan, nan);
  return run;
}

inline ResultTable run_coverage(const Scenario& sc, std::uint64_t seed, int jobs) {
  if (!sc.coverage.present) throw ConfigError("coverage: scenario has no [coverage] section");
  const auto& cv = sc.coverage;
  CoverageScenario c;
  c.tau = cv.tau;
  c.nbar = cv.nbar;
  c.nu = nu_det(sc.link.detection);
  c.sigma_x2 = sc.protocol.mu - 1.0;
  c.m_p = cv.m_p;
  const auto rep = estimator_coverage_experiment(c, cv.rounds, cv.eps_pe, seed, jobs);
  ResultTable t;
  t.command = "coverage";
  t.seed = seed;
  t.columns = {"rounds",           "eps_pe",           "w",           "tau_failures", "nbar_failures",
               "tau_failure_rate", "nbar_failure_rate", "binomial_3sigma_upper", "median_tau_margin",
               "scenario_hash",    "seed",             "version"};
  t.rows.push_back({Cell{static_cast<std::int64_t>(rep.rounds)}, Cell{rep.eps_pe}, Cell{rep.w},
                    Cell{static_cast<std::int64_t>(rep.tau_failures)}, Cell{static_cast<std::int64_t>(rep.nbar_failures)},
                    Cell{rep.tau_failure_rate}, Cell{rep.nbar_failure_rate}, Cell{rep.binomial_3sigma_upper},
                    Cell{rep.median_tau_margin}, Cell{sc.hash_hex()}, Cell{static_cast<std::int64_t>(seed)},
                    Cell{std::string(library_version)}});
  return t;
}

}  // namespace cvqkd
