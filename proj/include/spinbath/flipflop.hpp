#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "spinbath/constants.hpp"
#include "spinbath/spectra.hpp"
#include "spinbath/spin_model.hpp"

// Flip-flop suppression factors and the bath correlation time.
//
// A flip-flop channel pairs two single-electron-flip transition lines; the
// detuning between their frequencies is bridged by the dephasing linewidth
// Gamma_d.  Channels are weighted by the product of line intensities.

namespace spinbath {

struct BathEntry {
    DefectSpinModel model;
    double density_ppm = 0.0;
};

struct BathComposition {
    std::vector<BathEntry> entries;
    double gamma_d = constants::mhz_to_angular;  // rad/s
    double lattice_density = constants::carbon_site_density;  // m^-3

    double total_ppm() const {
        double t = 0.0;
        for (const auto& e : entries) t += e.density_ppm;
        return t;
    }
};

// Lorentzian bridge Gamma_d^2 / (Gamma_d^2 + delta^2), arguments angular.
inline double detuning_bridge(double delta, double gamma_d) {
    return gamma_d * gamma_d / (gamma_d * gamma_d + delta * delta);
}

// R_ff = C_perp^2 Gamma_d / (Gamma_d^2 + delta^2); all angular, result 1/s.
inline double pair_flipflop_rate(double c_perp, double delta, double gamma_d) {
    if (gamma_d <= 0.0) throw std::invalid_argument("pair_flipflop_rate: gamma_d must be > 0");
    return c_perp * c_perp * gamma_d / (gamma_d * gamma_d + delta * delta);
}

// Channel-averaged bridge factor over two line lists:
//   sum_ab I_a I_b Gd^2/(Gd^2 + delta_ab^2) / sum_ab I_a I_b.
inline double channel_average(const std::vector<TransitionLine>& a,
                              const std::vector<TransitionLine>& b, double gamma_d) {
    double num = 0.0, den = 0.0;
    for (const auto& la : a) {
        for (const auto& lb : b) {
            const double w = la.intensity * lb.intensity;
            const double delta =
                (la.frequency_mhz - lb.frequency_mhz) * constants::mhz_to_angular;
            num += w * detuning_bridge(delta, gamma_d);
            den += w;
        }
    }
    if (den <= 0.0) throw std::invalid_argument("channel_average: no weighted channels");
    return num / den;
}

// Suppression factor from exact diagonalization: all pairs of electron-flip
// lines of the species, cross-JT pairs included.
inline double alpha_exact(const DefectSpinModel& model, const MagneticField& field,
                          double gamma_d) {
    if (gamma_d <= 0.0) throw std::invalid_argument("alpha_exact: gamma_d must be > 0");
    const auto lines = electron_flip_lines(transition_lines(model, field));
    if (lines.empty())
        throw std::invalid_argument("alpha_exact: species has no allowed transitions");
    return channel_average(lines, lines, gamma_d);
}

// Suppression factor from the peak structure of the spectrum: cluster the
// lines into peaks and sum the squared peak intensities.
inline double alpha_peaks(const std::vector<TransitionLine>& lines, double /*gamma_d*/,
                          double cluster_tolerance_mhz) {
    if (cluster_tolerance_mhz <= 0.0)
        throw std::invalid_argument("alpha_peaks: cluster_tolerance must be > 0");
    if (lines.empty()) throw std::invalid_argument("alpha_peaks: empty line list");
    double total = 0.0;
    for (const auto& l : lines) total += l.intensity;
    const auto peaks = cluster_peaks(lines, cluster_tolerance_mhz);
    double acc = 0.0;
    for (const auto& p : peaks) {
        const double q = p.intensity / total;
        acc += q * q;
    }
    return acc;
}

// Hand-derived Jahn-Teller estimate for P1: 3/9 (1/16 + 9/16) + 1/9 (2 * 1/4 * 3/4).
// Neglects state mixing, so it exceeds the exact-diagonalization value.
inline double alpha_closed_form_jt() {
    return (3.0 / 9.0) * (1.0 / 16.0 + 9.0 / 16.0) + (1.0 / 9.0) * (2.0 * 0.25 * 0.75);
}

struct CorrelationTime {
    double tau_c_s = 0.0;
    double std_err_s = 0.0;
    bool infinite = false;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace detail

// Monte-Carlo bath correlation time.
//
// Realizations place same- and cross-species partners by Poisson sampling
// around a probe bath spin and sum pair flip-flop rates; the hyperfine/JT
// channel structure enters through the exact channel-averaged bridge factor
// per species pair (the sublevel-marginalized expected rate).  Sampling is
// sharded by (seed, shard) so the result does not depend on how work is
// split.  The estimator is the median over shards of per-shard means of the
// per-realization correlation times, which stays finite against the
// heavy-tailed 1/r^3 coupling distribution.
inline CorrelationTime bath_correlation_time(const BathComposition& bath,
                                             const MagneticField& field, int sample_count,
                                             std::uint64_t seed) {
    if (sample_count < 1000)
        throw std::invalid_argument("bath_correlation_time: sample_count must be >= 1000");
    const double n_tot_ppm = bath.total_ppm();
    if (n_tot_ppm <= 0.0) return {std::numeric_limits<double>::infinity(), 0.0, true};
    for (const auto& e : bath.entries)
        if (e.density_ppm < 0.0)
            throw std::invalid_argument("bath_correlation_time: negative density");

    const size_t ns = bath.entries.size();
    std::vector<double> fraction(ns);
    for (size_t s = 0; s < ns; ++s) fraction[s] = bath.entries[s].density_ppm / n_tot_ppm;

    // per-species electron-flip line lists and pairwise channel averages
    std::vector<std::vector<TransitionLine>> lines(ns);
    for (size_t s = 0; s < ns; ++s)
        lines[s] = electron_flip_lines(transition_lines(bath.entries[s].model, field));
    std::vector<std::vector<double>> bridge(ns, std::vector<double>(ns, 0.0));
    for (size_t a = 0; a < ns; ++a)
        for (size_t b = 0; b < ns; ++b)
            bridge[a][b] = channel_average(lines[a], lines[b], bath.gamma_d);

    const double density = n_tot_ppm * bath.lattice_density * 1e-6;  // m^-3
    const double r_nn = std::cbrt(3.0 / (4.0 * constants::pi * density));
    const double radius = 8.0 * r_nn;                 // 1/r^6 tail < 0.3%
    const double mean_partners = 512.0;               // density * (4/3) pi radius^3

    constexpr int n_shards = 64;
    const int per_shard = (sample_count + n_shards - 1) / n_shards;
    std::vector<double> shard_mean;
    shard_mean.reserve(n_shards);

    int remaining = sample_count;
    for (int shard = 0; shard < n_shards && remaining > 0; ++shard) {
        const int count = std::min(per_shard, remaining);
        remaining -= count;
        std::mt19937_64 rng(detail::splitmix64(seed ^ (0x5851f42d4c957f2dull * (shard + 1))));
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        std::poisson_distribution<int> pois(mean_partners);

        double acc = 0.0;
        for (int k = 0; k < count; ++k) {
            // probe species
            double u = uni(rng);
            size_t probe = ns - 1;
            for (size_t s = 0; s < ns; ++s) {
                if (u < fraction[s]) {
                    probe = s;
                    break;
                }
                u -= fraction[s];
            }
            const int partners = pois(rng);
            double rate = 0.0;
            for (int p = 0; p < partners; ++p) {
                double v = uni(rng);
                size_t sp = ns - 1;
                for (size_t s = 0; s < ns; ++s) {
                    if (v < fraction[s]) {
                        sp = s;
                        break;
                    }
                    v -= fraction[s];
                }
                const double r = radius * std::cbrt(uni(rng));
                const double cos_t = 2.0 * uni(rng) - 1.0;
                const double c = constants::dipolar_j0 * (3.0 * cos_t * cos_t - 1.0) / (r * r * r);
                const double c_perp = 0.25 * c;
                rate += (c_perp * c_perp / bath.gamma_d) * bridge[probe][sp];
            }
            acc += rate > 0.0 ? 1.0 / rate : 0.0;  // partners==0 never happens in practice
        }
        shard_mean.push_back(acc / count);
    }

    std::vector<double> sorted = shard_mean;
    std::sort(sorted.begin(), sorted.end());
    const size_t nb = sorted.size();
    const double median = (nb % 2 == 1) ? sorted[nb / 2]
                                        : 0.5 * (sorted[nb / 2 - 1] + sorted[nb / 2]);
    double var = 0.0, mean = 0.0;
    for (double m : shard_mean) mean += m;
    mean /= static_cast<double>(nb);
    for (double m : shard_mean) var += (m - mean) * (m - mean);
    var /= static_cast<double>(nb > 1 ? nb - 1 : 1);
    // normal-approximation standard error of the sample median
    const double se = 1.2533 * std::sqrt(var / static_cast<double>(nb));

    return {median, se, false};
}

}  // namespace spinbath
