#pragma once

// CODATA 2018 exact/recommended values. Shown here to full double precision;
// documentation quotes them to 6 significant figures:
//   hbar = 1.05457e-34 J s, k_B = 1.38065e-23 J/K, u = 1.66054e-27 kg.

#include <numbers>

namespace ioncool::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double k_boltzmann = 1.380649e-23;    // J / K
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double speed_of_light = 299792458.0;  // m / s

// 25Mg+ (ion mass: neutral isotope mass minus one electron mass).
inline constexpr double mg25_mass_amu = 24.98583696 - 5.48579909065e-4;
inline constexpr double mg25_wavelength = 279.6e-9;           // m, S1/2 -> P3/2
inline constexpr double mg25_linewidth = two_pi * 41.4e6;     // rad/s
inline constexpr double mg25_hyperfine_splitting = 1.789e9;   // Hz

}  // namespace ioncool::constants
