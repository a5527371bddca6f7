#pragma once

#include <cmath>

// Physical constants (SI) and the derived quantities the toolkit leans on.
// Internal convention: every frequency-like quantity is angular (rad/s)
// unless the name says otherwise; interfaces speak ordinary MHz.

namespace spinbath::constants {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

inline constexpr double mu0 = 1.25663706212e-6;        // vacuum permeability, T m/A
inline constexpr double mu_bohr = 9.2740100783e-24;    // Bohr magneton, J/T
inline constexpr double hbar = 1.054571817e-34;        // reduced Planck, J s

// Electron g-factor used for bath/probe spins (free-electron value).
inline constexpr double g_electron = 2.0023;

// Electron gyromagnetic ratio, rad/(s T).  ~ (2pi) 28.024 GHz/T.
inline constexpr double gamma_e = g_electron * mu_bohr / hbar;

// Nuclear gyromagnetic ratios, rad/(s T).
inline constexpr double gamma_n14 = 1.9337792e7;
inline constexpr double gamma_h1 = 2.6752218744e8;

// Carbon site density of diamond; defines the ppm unit for defect densities.
inline constexpr double carbon_site_density = 1.76e29;  // m^-3
inline constexpr double per_ppm = carbon_site_density * 1e-6;  // m^-3 per ppm

inline constexpr double mhz_to_angular = two_pi * 1e6;   // MHz -> rad/s
inline constexpr double gauss_to_tesla = 1e-4;

// Dipolar coupling prefactor J0 = mu0 gamma_e^2 hbar / (4 pi), rad/s m^3.
// C(theta) = J0 (3 cos^2 theta - 1)/r^3; numerically (2pi) 52 MHz nm^3.
inline constexpr double dipolar_j0 =
    mu0 * gamma_e * gamma_e * hbar / (4.0 * pi);

// Dephasing-rate-per-density constant: 1/Ts* = K Ps n_s with n_s in ppm and
// the rate in 1/s.  K = 2pi mu0 muB^2 gA gs |sigma| / (9 sqrt(3) hbar) scaled
// by the site density; gA = gs = 2 and |sigma| = 1/2 for spin-1/2 baths.
inline double dephasing_rate_per_ppm(double g_probe = 2.0, double g_bath = 2.0,
                                     double sigma = 0.5,
                                     double site_density = carbon_site_density) {
    const double c = two_pi * mu0 * mu_bohr * mu_bohr * g_probe * g_bath * sigma /
                     (9.0 * std::sqrt(3.0) * hbar);
    return c * site_density * 1e-6;  // 1/s per ppm
}

}  // namespace spinbath::constants
