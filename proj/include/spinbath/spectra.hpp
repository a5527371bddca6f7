#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinbath/constants.hpp"
#include "spinbath/spin_model.hpp"

// Allowed-transition line lists and Lorentzian-broadened spectra.

namespace spinbath {

struct TransitionLine {
    double frequency_mhz = 0.0;   // ordinary frequency
    double intensity = 0.0;       // normalized per species
    int level_i = 0;
    int level_j = 0;
    int jt_index = 0;
    std::string species_name;
    int delta_ms = 0;             // dominant-label electron flip count
};

struct Spectrum {
    std::vector<double> freq_mhz;   // strictly ascending grid
    std::vector<double> amplitude;
    double gamma_d = 0.0;           // rad/s
};

namespace detail {

// Deterministic lab x-axis perpendicular to the field direction.
inline Vector3 drive_axis(const Vector3& bdir) {
    const Vector3 seed = std::abs(bdir.x()) < 0.9 ? Vector3(1.0, 0.0, 0.0)
                                                  : Vector3(0.0, 1.0, 0.0);
    return bdir.cross(seed).normalized();
}

}  // namespace detail

// Lines between all eigenstate pairs with intensity proportional to
// population(initial) x |<f|Sx|i>|^2, weighted by the Jahn-Teller population
// and normalized to unit total per species.  Populations are fully mixed.
// Lines below 1e-6 of the strongest are pruned (and the list renormalized).
inline std::vector<TransitionLine> transition_lines(const std::vector<EigenSystem>& blocks,
                                                    const DefectSpinModel& model,
                                                    const MagneticField& field,
                                                    double prune_rel = 1e-6) {
    if (blocks.empty()) throw std::invalid_argument("transition_lines: no eigen blocks");

    const Vector3 xlab = detail::drive_axis(field.direction);
    const auto sv = detail::embedded_vector_op(model, 0);
    const Matrix sx_lab = xlab.x() * sv[0] + xlab.y() * sv[1] + xlab.z() * sv[2];

    std::vector<TransitionLine> lines;
    for (const auto& sys : blocks) {
        const auto& jt = model.jt_orientations.at(static_cast<size_t>(sys.jt_index));
        const Eigen::Index dim = sys.energies.size();
        const double pop = jt.population / static_cast<double>(dim);
        const Matrix m = sys.states.adjoint() * sx_lab * sys.states;

        // dominant electron label per eigenstate
        std::vector<double> ms(static_cast<size_t>(dim));
        for (Eigen::Index k = 0; k < dim; ++k) {
            Eigen::Index imax = 0;
            sys.states.col(k).cwiseAbs().maxCoeff(&imax);
            ms[static_cast<size_t>(k)] = sys.basis_labels[static_cast<size_t>(imax)][0];
        }

        for (Eigen::Index i = 0; i < dim; ++i) {
            for (Eigen::Index j = i + 1; j < dim; ++j) {
                const double w = sys.energies(j) - sys.energies(i);
                const double inten = pop * std::norm(m(j, i));
                if (w <= 0.0 || inten <= 0.0) continue;
                TransitionLine line;
                line.frequency_mhz = w / constants::mhz_to_angular;
                line.intensity = inten;
                line.level_i = static_cast<int>(i);
                line.level_j = static_cast<int>(j);
                line.jt_index = sys.jt_index;
                line.species_name = model.name;
                line.delta_ms = static_cast<int>(std::lround(
                    std::abs(ms[static_cast<size_t>(j)] - ms[static_cast<size_t>(i)])));
                lines.push_back(std::move(line));
            }
        }
    }
    if (lines.empty()) return lines;

    double total = 0.0, peak = 0.0;
    for (const auto& l : lines) {
        total += l.intensity;
        peak = std::max(peak, l.intensity);
    }
    for (auto& l : lines) l.intensity /= total;
    peak /= total;

    std::vector<TransitionLine> kept;
    kept.reserve(lines.size());
    double kept_total = 0.0;
    for (auto& l : lines) {
        if (l.intensity >= prune_rel * peak) {
            kept_total += l.intensity;
            kept.push_back(std::move(l));
        }
    }
    for (auto& l : kept) l.intensity /= kept_total;
    std::sort(kept.begin(), kept.end(), [](const TransitionLine& a, const TransitionLine& b) {
        return a.frequency_mhz < b.frequency_mhz;
    });
    return kept;
}

inline std::vector<TransitionLine> transition_lines(const DefectSpinModel& model,
                                                    const MagneticField& field,
                                                    double prune_rel = 1e-6) {
    return transition_lines(diagonalize_all(model, field), model, field, prune_rel);
}

// Subset with a single electron flip between the dominant labels; this is
// the channel set for the flip-flop analysis.
inline std::vector<TransitionLine> electron_flip_lines(std::vector<TransitionLine> lines) {
    std::erase_if(lines, [](const TransitionLine& l) { return l.delta_ms != 1; });
    double total = 0.0;
    for (const auto& l : lines) total += l.intensity;
    if (total > 0.0)
        for (auto& l : lines) l.intensity /= total;
    return lines;
}

// amplitude(f) = sum over lines of intensity * unit-peak Lorentzian with
// HWHM = gamma_d / 2pi (in MHz).
inline Spectrum synthesize_spectrum(const std::vector<TransitionLine>& lines,
                                    const std::vector<double>& grid_mhz, double gamma_d) {
    if (grid_mhz.empty()) throw std::invalid_argument("synthesize_spectrum: empty grid");
    if (gamma_d <= 0.0) throw std::invalid_argument("synthesize_spectrum: gamma_d must be > 0");
    for (size_t k = 1; k < grid_mhz.size(); ++k)
        if (grid_mhz[k] <= grid_mhz[k - 1])
            throw std::invalid_argument("synthesize_spectrum: grid must be strictly ascending");

    const double hwhm = gamma_d / constants::mhz_to_angular;
    Spectrum spec;
    spec.freq_mhz = grid_mhz;
    spec.gamma_d = gamma_d;
    spec.amplitude.assign(grid_mhz.size(), 0.0);
    for (const auto& line : lines) {
        for (size_t k = 0; k < grid_mhz.size(); ++k) {
            const double x = (grid_mhz[k] - line.frequency_mhz) / hwhm;
            spec.amplitude[k] += line.intensity / (1.0 + x * x);
        }
    }
    return spec;
}

struct PeakCluster {
    double center_mhz = 0.0;   // intensity-weighted
    double intensity = 0.0;    // summed
    std::vector<size_t> members;
};

// Single-linkage clustering of lines by frequency.
inline std::vector<PeakCluster> cluster_peaks(const std::vector<TransitionLine>& lines,
                                              double tolerance_mhz) {
    if (tolerance_mhz <= 0.0) throw std::invalid_argument("cluster_peaks: tolerance must be > 0");
    std::vector<size_t> order(lines.size());
    for (size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return lines[a].frequency_mhz < lines[b].frequency_mhz;
    });

    std::vector<PeakCluster> peaks;
    for (size_t k : order) {
        if (!peaks.empty()) {
            const auto& prev = lines[peaks.back().members.back()];
            if (lines[k].frequency_mhz - prev.frequency_mhz <= tolerance_mhz) {
                peaks.back().members.push_back(k);
                continue;
            }
        }
        peaks.push_back(PeakCluster{});
        peaks.back().members.push_back(k);
    }
    for (auto& p : peaks) {
        double wsum = 0.0, fsum = 0.0;
        for (size_t k : p.members) {
            wsum += lines[k].intensity;
            fsum += lines[k].intensity * lines[k].frequency_mhz;
        }
        p.intensity = wsum;
        p.center_mhz = wsum > 0.0 ? fsum / wsum : lines[p.members.front()].frequency_mhz;
    }
    return peaks;
}

}  // namespace spinbath
