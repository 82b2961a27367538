// SPDX-License-Identifier: Apache-2.0
//
// Physical constants (SI, CODATA 2018 exact values where defined).

#pragma once

#include <numbers>

namespace cvqkd::constants {

inline constexpr double planck = 6.62607015e-34;          // J s
inline constexpr double speed_of_light = 299792458.0;     // m / s
inline constexpr double boltzmann = 1.380649e-23;         // J / K
inline constexpr double pi = std::numbers::pi;

// Tolerance below 1 within which a symplectic eigenvalue is treated as pure.
inline constexpr double purity_tolerance = 1e-9;

}  // namespace cvqkd::constants
