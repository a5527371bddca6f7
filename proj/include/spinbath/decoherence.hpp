#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinbath/constants.hpp"
#include "spinbath/flipflop.hpp"

// Central-spin coherence under Ramsey/echo/DEER sequences driven by a
// Lorentzian-spectrum bath, plus the density <-> dephasing-rate relation.

namespace spinbath {

enum class SequenceKind { Ramsey, Echo, Deer };

struct NoiseModel {
    double b1_rms_sq = 0.0;      // <B1^2>, tesla^2
    double tau_c = 1.0;          // s
    double larmor_omega = 0.0;   // rad/s
    double gyro_e = constants::gamma_e;  // rad/(s T)
};

struct PulseSequence {
    SequenceKind kind = SequenceKind::Ramsey;
    std::string recoupled_species;   // DEER only
    double recoupled_mhz = 0.0;
    double inversion_probability = 1.0;  // P_s
    double total_time = 0.0;             // s
};

// |F(omega)|^2 for the free-evolution filter of each sequence.  The DEER
// probe itself evolves under an echo, so Deer maps onto the echo filter.
inline double filter_function(SequenceKind kind, double omega, double total_time) {
    if (total_time <= 0.0) throw std::invalid_argument("filter_function: T must be > 0");
    const double t = total_time;
    if (kind == SequenceKind::Ramsey) {
        if (omega == 0.0) return t * t;
        const double s = std::sin(0.5 * omega * t);
        return 4.0 * s * s / (omega * omega);
    }
    if (omega == 0.0) return 0.0;
    const double s = std::sin(0.25 * omega * t);
    const double s2 = s * s;
    return 16.0 * s2 * s2 / (omega * omega);
}

// Double Lorentzian noise spectrum centered at +-omega_L.
inline double noise_spectrum(const NoiseModel& n, double omega) {
    const double g2b2 = n.gyro_e * n.gyro_e * n.b1_rms_sq;
    const double a = (omega - n.larmor_omega) * n.tau_c;
    const double b = (omega + n.larmor_omega) * n.tau_c;
    return g2b2 * n.tau_c / (1.0 + a * a) + g2b2 * n.tau_c / (1.0 + b * b);
}

struct ChiResult {
    double value = 0.0;
    double achieved_rel_error = 0.0;
    bool converged = true;
};

// chi = (1/2) integral S(w) |F(w)|^2 dw / (2 pi) over the whole axis,
// evaluated as (1/pi) * integral over [0, inf) by symmetry.  The finite part
// is integrated adaptively; beyond the edge the oscillation-averaged filter
// (sin^2 -> 1/2, sin^4 -> 3/8) makes the tail smooth.
inline ChiResult chi_numeric(const NoiseModel& noise, SequenceKind kind, double total_time,
                             double rel_tol = 1e-6) {
    if (total_time <= 0.0) throw std::invalid_argument("chi_numeric: T must be > 0");
    if (noise.b1_rms_sq == 0.0) return {0.0, 0.0, true};

    using quad = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double inv_2pi = 1.0 / constants::two_pi;

    const double w_edge = std::max({60.0 / noise.tau_c, noise.larmor_omega + 60.0 / noise.tau_c,
                                    400.0 * constants::pi / total_time});
    double err1 = 0.0, err2 = 0.0;
    const double core = quad::integrate(
        [&](double w) { return noise_spectrum(noise, w) * filter_function(kind, w, total_time); },
        0.0, w_edge, 15, 1e-10, &err1);
    const double avg_coeff = (kind == SequenceKind::Ramsey) ? 2.0 : 6.0;
    const double tail = quad::integrate(
        [&](double w) { return noise_spectrum(noise, w) * avg_coeff / (w * w); }, w_edge,
        std::numeric_limits<double>::infinity(), 15, 1e-10, &err2);

    ChiResult res;
    res.value = inv_2pi * (core + tail);
    const double denom = std::abs(res.value) > 0.0 ? std::abs(res.value) : 1.0;
    res.achieved_rel_error = inv_2pi * (err1 + err2) / denom;
    res.converged = res.achieved_rel_error <= 10.0 * rel_tol;
    return res;
}

// Closed forms at omega_L = 0.
inline double chi_closed_ramsey(const NoiseModel& n, double total_time) {
    const double g2b2 = n.gyro_e * n.gyro_e * n.b1_rms_sq;
    const double x = total_time / n.tau_c;
    return g2b2 * n.tau_c * n.tau_c * (x - 1.0 + std::exp(-x));
}

inline double chi_closed_echo(const NoiseModel& n, double total_time) {
    const double g2b2 = n.gyro_e * n.gyro_e * n.b1_rms_sq;
    const double x = total_time / n.tau_c;
    return g2b2 * n.tau_c * n.tau_c * (x - 3.0 - std::exp(-x) + 4.0 * std::exp(-0.5 * x));
}

// T2* = sqrt(2) / (gamma_e sqrt(<B1^2>)).
inline double t2_star(double b1_rms_sq, double gyro_e = constants::gamma_e) {
    if (b1_rms_sq < 0.0) throw std::invalid_argument("t2_star: negative noise variance");
    if (b1_rms_sq == 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(2.0) / (gyro_e * std::sqrt(b1_rms_sq));
}

// T2 = (12 tau_c / (gamma_e^2 <B1^2>))^(1/3).
inline double t2_echo(double b1_rms_sq, double tau_c, double gyro_e = constants::gamma_e) {
    if (b1_rms_sq < 0.0 || tau_c <= 0.0) throw std::invalid_argument("t2_echo: bad arguments");
    if (b1_rms_sq == 0.0) return std::numeric_limits<double>::infinity();
    return std::cbrt(12.0 * tau_c / (gyro_e * gyro_e * b1_rms_sq));
}

// 1/Ts* = K Ps n_s, rate in 1/us, density in ppm.  K is recomputed from
// physical constants, not hard-coded.
inline double density_to_dephasing(double n_ppm, double p_s) {
    if (n_ppm < 0.0) throw std::invalid_argument("density_to_dephasing: negative density");
    if (p_s < 0.0 || p_s > 1.0) throw std::invalid_argument("density_to_dephasing: P_s not in [0,1]");
    return constants::dephasing_rate_per_ppm() * 1e-6 * p_s * n_ppm;
}

inline double dephasing_to_density(double rate_per_us, double p_s) {
    if (p_s <= 0.0) throw std::invalid_argument("dephasing_to_density: P_s must be > 0");
    return rate_per_us / (constants::dephasing_rate_per_ppm() * 1e-6 * p_s);
}

// S(T) = c0 + (c/2) exp(-T (1/T2 + 1/Ts*)) cos(d_omega T + phi0).
inline double deer_signal(double t, double ts_star, double t2, double c0, double c,
                          double d_omega, double phi0) {
    if (ts_star <= 0.0 || t2 <= 0.0) throw std::invalid_argument("deer_signal: times must be > 0");
    return c0 + 0.5 * c * std::exp(-t * (1.0 / t2 + 1.0 / ts_star)) *
                    std::cos(d_omega * t + phi0);
}

// Density mappings for the two noise measures.
//
// The static dephasing width is Lorentzian and linear in the total density;
// the full flip amplitude (2 |sigma| = 1) sets the width used for T2*, so
// gamma_e * B_width = 2 K n_tot.  The fluctuating variance entering the echo
// formula is additive across spins, <B1^2> = (2K/gamma_e)^2 * (n_tot / 1 ppm),
// normalized so width and rms coincide at 1 ppm.
inline double b1_sq_dephasing(double n_tot_ppm, double gyro_e = constants::gamma_e) {
    const double k2 = 2.0 * constants::dephasing_rate_per_ppm();  // 1/s per ppm
    const double gb = k2 * n_tot_ppm;
    return (gb / gyro_e) * (gb / gyro_e);
}

inline double b1_sq_variance(double n_tot_ppm, double gyro_e = constants::gamma_e) {
    const double k2 = 2.0 * constants::dephasing_rate_per_ppm();
    return (k2 / gyro_e) * (k2 / gyro_e) * n_tot_ppm;
}

struct SpeciesDephasing {
    std::string name;
    double density_ppm = 0.0;
    double ts_star_s = 0.0;
    double tau_c_s = 0.0;
};

struct CoherencePrediction {
    double t2_star_s = 0.0;
    double t2_s = 0.0;
    double tau_c_eff_s = 0.0;
    std::vector<SpeciesDephasing> species;
    std::vector<double> deer_times_s;      // sampled DEER envelope, first species
    std::vector<double> deer_contrast;
};

struct ScenarioPrediction {
    CoherencePrediction before;
    CoherencePrediction after;
    double frac_delta_t2_star = 0.0;  // |T2*_a - T2*_b| / T2*_b
    double frac_delta_t2 = 0.0;
};

namespace detail {

inline CoherencePrediction predict_single(const BathComposition& bath, const MagneticField& field,
                                          int mc_samples, std::uint64_t seed) {
    CoherencePrediction out;
    const double n_tot = bath.total_ppm();
    out.t2_star_s = t2_star(b1_sq_dephasing(n_tot));

    // Per-species correlation times; the composite tau_c is the integral
    // timescale of the additive-variance autocorrelation, i.e. the
    // density-weighted mean of per-species times.  One seed for every call
    // keeps the geometry statistic shared so ratios are sampling-noise free.
    double tau_acc = 0.0;
    for (const auto& e : bath.entries) {
        BathComposition single;
        single.entries = {e};
        single.gamma_d = bath.gamma_d;
        single.lattice_density = bath.lattice_density;
        const auto tc = bath_correlation_time(single, field, mc_samples, seed);
        SpeciesDephasing sd;
        sd.name = e.model.name;
        sd.density_ppm = e.density_ppm;
        sd.ts_star_s = e.density_ppm > 0.0
                           ? 1.0 / (constants::dephasing_rate_per_ppm() * e.density_ppm)
                           : std::numeric_limits<double>::infinity();
        sd.tau_c_s = tc.tau_c_s;
        out.species.push_back(sd);
        tau_acc += e.density_ppm * tc.tau_c_s;
    }
    out.tau_c_eff_s = n_tot > 0.0 ? tau_acc / n_tot : std::numeric_limits<double>::infinity();
    out.t2_s = t2_echo(b1_sq_variance(n_tot), out.tau_c_eff_s);

    if (!out.species.empty()) {
        const double rate = 1.0 / out.t2_s + 1.0 / out.species.front().ts_star_s;
        const double t_max = 3.0 / rate;
        for (int k = 0; k < 64; ++k) {
            const double t = t_max * k / 63.0;
            out.deer_times_s.push_back(t);
            out.deer_contrast.push_back(std::exp(-t * rate));
        }
    }
    return out;
}

}  // namespace detail

inline ScenarioPrediction predict_scenario(const BathComposition& before,
                                           const BathComposition& after,
                                           const MagneticField& field, int mc_samples = 20000,
                                           std::uint64_t seed = 1) {
    ScenarioPrediction sp;
    sp.before = detail::predict_single(before, field, mc_samples, seed);
    sp.after = detail::predict_single(after, field, mc_samples, seed);
    sp.frac_delta_t2_star =
        std::abs(sp.after.t2_star_s - sp.before.t2_star_s) / sp.before.t2_star_s;
    sp.frac_delta_t2 = std::abs(sp.after.t2_s - sp.before.t2_s) / sp.before.t2_s;
    return sp;
}

}  // namespace spinbath
