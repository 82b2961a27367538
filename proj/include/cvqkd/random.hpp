// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random numbers (Philox4x64-10, Salmon et al. 2011). Every
// draw is a pure function of (seed, stream, index, word), so any slice of a
// simulation can be regenerated independently and in parallel.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace cvqkd::rng {

using Counter = std::array<std::uint64_t, 4>;
using Key = std::array<std::uint64_t, 2>;

namespace detail {

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace detail

/// One Philox4x64-10 block.
inline Counter philox4x64(Counter ctr, Key key) {
  constexpr std::uint64_t m0 = 0xD2E7470EE14C6C93ULL;
  constexpr std::uint64_t m1 = 0xCA5A826395121157ULL;
  constexpr std::uint64_t w0 = 0x9E3779B97F4A7C15ULL;
  constexpr std::uint64_t w1 = 0xBB67AE8584CAA73BULL;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += w0;
      key[1] += w1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    detail::mulhilo(m0, ctr[0], hi0, lo0);
    detail::mulhilo(m1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// Maps 64 random bits to a double strictly inside (0, 1).
inline double to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1p-52;
}

/// Four uniforms for (seed, stream) at position (index, word).
inline std::array<double, 4> uniforms(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                                      std::uint64_t word = 0) {
  const Counter out = philox4x64({index, word, 0, 0}, {seed, stream});
  return {to_unit(out[0]), to_unit(out[1]), to_unit(out[2]), to_unit(out[3])};
}

/// Two independent standard normals from two uniforms (Box-Muller).
inline std::pair<double, double> box_muller(double u1, double u2) {
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

/// Four standard normals for (seed, stream) at position (index, word).
inline std::array<double, 4> normals(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                                     std::uint64_t word = 0) {
  const auto u = uniforms(seed, stream, index, word);
  const auto [a, b] = box_muller(u[0], u[1]);
  const auto [c, d] = box_muller(u[2], u[3]);
  return {a, b, c, d};
}

/// Derives an independent child seed (splitmix64 finaliser).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t child) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (child + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stream tags keep the different consumers of one seed apart.
inline constexpr std::uint64_t stream_signal = 1;
inline constexpr std::uint64_t stream_fading = 2;
inline constexpr std::uint64_t stream_defade = 3;

}  // namespace cvqkd::rng
