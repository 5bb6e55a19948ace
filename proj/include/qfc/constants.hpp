#pragma once

#include <numbers>

namespace qfc::constants {

inline constexpr double pi = std::numbers::pi;

// c is exact in SI; eps0 is the CODATA 2018 value.
inline constexpr double speed_of_light = 299'792'458.0;         // m/s
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m

inline constexpr double nm = 1e-9;
inline constexpr double pm_per_V = 1e-12;

}  // namespace qfc::constants
