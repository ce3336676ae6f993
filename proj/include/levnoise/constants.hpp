#pragma once

#include <numbers>

// SI-exact values. These are the only place physical constants are defined.
namespace levnoise::constants {

inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double c = 2.99792458e8;        // m/s
inline constexpr double k_B = 1.380649e-23;      // J/K
inline constexpr double g = 9.80665;             // m/s^2
inline constexpr double torr_to_pa = 133.322368;  // Pa per Torr
inline constexpr double year_s = 3.15576e7;       // Julian year, s
inline constexpr double pi = std::numbers::pi;

}  // namespace levnoise::constants
