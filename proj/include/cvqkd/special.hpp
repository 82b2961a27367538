// SPDX-License-Identifier: Apache-2.0
//
// Special functions needed by the rate engine: inverse (complementary) error
// function, exponentially scaled modified Bessel functions, and the
// binomial logarithm used by the coherent-attack privacy-amplification term.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cvqkd::special {

namespace detail {

// Rational/polynomial initial guess for erfinv(1 - q) (M. Giles, 2010),
// written in terms of q so small q loses nothing to cancellation.
inline double erfc_inv_guess(double q) {
  const double w = -std::log(q * (2.0 - q));
  const double x = 1.0 - q;
  double p;
  if (w < 5.0) {
    const double v = w - 2.5;
    p = 2.81022636e-08;
    p = 3.43273939e-07 + p * v;
    p = -3.5233877e-06 + p * v;
    p = -4.39150654e-06 + p * v;
    p = 0.00021858087 + p * v;
    p = -0.00125372503 + p * v;
    p = -0.00417768164 + p * v;
    p = 0.246640727 + p * v;
    p = 1.50140941 + p * v;
  } else {
    const double v = std::sqrt(w) - 3.0;
    p = -0.000200214257;
    p = 0.000100950558 + p * v;
    p = 0.00134934322 + p * v;
    p = -0.00367342844 + p * v;
    p = 0.00573950773 + p * v;
    p = -0.0076224613 + p * v;
    p = 0.00943887047 + p * v;
    p = 1.00167406 + p * v;
    p = 2.83297682 + p * v;
  }
  return p * x;
}

// Deep tail: solve erfc(x) ~ exp(-x^2)/(x sqrt(pi)) by fixed point.
inline double erfc_inv_tail_guess(double q) {
  const double log_q = std::log(q);
  double x = std::sqrt(-log_q);
  for (int i = 0; i < 4; ++i) {
    x = std::sqrt(-log_q - std::log(x * std::sqrt(std::numbers::pi)));
  }
  return x;
}

}  // namespace detail

/// Inverse of the complementary error function on (0, 2).
///
/// A rational initial guess is refined with Newton steps on erfc. The
/// correction is evaluated in log space so arguments down to ~1e-300 keep
/// full relative accuracy.
inline double erfc_inv(double q) {
  if (!(q > 0.0 && q < 2.0)) {
    throw std::domain_error("erfc_inv: argument must lie in (0, 2)");
  }
  if (q > 1.0) return -erfc_inv(2.0 - q);
  if (q == 1.0) return 0.0;

  double x = q < 1e-10 ? detail::erfc_inv_tail_guess(q) : detail::erfc_inv_guess(q);
  const double half_sqrt_pi = 0.5 * std::sqrt(std::numbers::pi);
  // Two Newton steps reach machine precision from the guess; the tail guess
  // occasionally needs a third.
  for (int i = 0; i < 3; ++i) {
    const double ratio = std::erfc(x) / q - 1.0;
    const double step = ratio * half_sqrt_pi * std::exp(std::log(q) + x * x);
    x += step;
    if (std::abs(step) <= 1e-16 * std::abs(x)) break;
  }
  return x;
}

/// Inverse error function on (-1, 1).
inline double erf_inv(double p) {
  if (!(p > -1.0 && p < 1.0)) {
    throw std::domain_error("erf_inv: argument must lie in (-1, 1)");
  }
  if (p < 0.0) return -erf_inv(-p);
  return erfc_inv(1.0 - p);
}

/// exp(-y) I_n(y) for integer order n >= 0 and y >= 0.
///
/// Uses std::cyl_bessel_i below y = 500 and the Hankel asymptotic series
/// above (the unscaled function overflows near y = 710).
inline double scaled_bessel_i(int n, double y) {
  if (n < 0 || y < 0.0) {
    throw std::domain_error("scaled_bessel_i: requires n >= 0 and y >= 0");
  }
  if (y <= 500.0) {
    return std::cyl_bessel_i(static_cast<double>(n), y) * std::exp(-y);
  }
  const double mu = 4.0 * n * n;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 12; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(mu - odd * odd) / (k * 8.0 * y);
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * y);
}

/// Lambda_n(x) = exp(-2x) I_n(2x), the pointing-loss shape function.
inline double lambda_n(int n, double x) { return scaled_bessel_i(n, 2.0 * x); }

/// log2 of the generalised binomial C(k + 4, 4) for real k >= 0.
inline double log2_binomial_plus4_choose4(double k) {
  if (!(k >= 0.0)) throw std::domain_error("log2_binomial_plus4_choose4: k must be >= 0");
  return std::log2(k + 1.0) + std::log2(k + 2.0) + std::log2(k + 3.0) +
         std::log2(k + 4.0) - std::log2(24.0);
}

/// ceil(log2 C(k + 4, 4)).
///
/// Integral k small enough for exact 128-bit arithmetic takes the exact
/// integer route so the ceiling never suffers from rounding at powers of two.
inline std::int64_t ceil_log2_binomial_plus4_choose4(double k) {
  if (!(k >= 0.0)) throw std::domain_error("ceil_log2_binomial_plus4_choose4: k must be >= 0");
  if (k == std::floor(k) && k <= 1e9) {
    const auto kk = static_cast<unsigned __int128>(k);
    const unsigned __int128 c = (kk + 1) * (kk + 2) * (kk + 3) * (kk + 4) / 24;
    // ceil(log2 c) == bit width of (c - 1) for c >= 1.
    unsigned __int128 v = c - 1;
    std::int64_t width = 0;
    while (v != 0) {
      v >>= 1;
      ++width;
    }
    return width;
  }
  return static_cast<std::int64_t>(std::ceil(log2_binomial_plus4_choose4(k)));
}

}  // namespace cvqkd::special
