// constants.hpp - SI vacuum constants
#pragma once

#include <cmath>
#include <numbers>

namespace dvm::constants {

inline constexpr double eps0 = 8.8541878128e-12;  // F/m
inline constexpr double mu0 = 1.25663706212e-6;   // H/m
inline const double c0 = 1.0 / std::sqrt(eps0 * mu0);
inline constexpr double pi = std::numbers::pi;

}  // namespace dvm::constants
