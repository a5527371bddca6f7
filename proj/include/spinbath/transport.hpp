#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinbath/constants.hpp"

// Photo-induced charge generation, radial carrier diffusion, and capture by
// two-charge-state defects.  Geometry is 1-D radially symmetric; densities
// are m^-3 internally and ppm at the interfaces.
//
// Each trap species has two charge states: state1 is state0 with one
// electron removed.  Photoionization state0 -> state1 emits a conduction
// electron; photo-recombination state1 -> state0 pumps a valence electron
// and emits a hole; direct capture runs both ways.

namespace spinbath::transport {

struct PhotoRate {
    double coeff = 0.0;     // (m^2/W)/s, or (m^2/W)^2/s when two_photon
    bool two_photon = false;

    double at(double intensity) const {
        return two_photon ? coeff * intensity * intensity : coeff * intensity;
    }
};

struct TrapSpecies {
    std::string name;
    double total_ppm = 0.0;
    double init_state0_ppm = 0.0;
    int state0_charge = 0;      // elementary charges; state1 carries charge+1
    PhotoRate ionize;           // state0 -> state1 + e-
    PhotoRate recombine;        // state1 -> state0 + h+
    double capture_e = 0.0;     // m^3/s, state1 + e -> state0
    double capture_h = 0.0;     // m^3/s, state0 + h -> state1
};

struct ChargeRateSet {
    std::vector<TrapSpecies> traps;
    double diffusion_n = 0.0;  // m^2/s
    double diffusion_p = 0.0;
};

struct BeamProfile {
    double diameter = 0.0;  // 1/e^2 intensity diameter, m
    double power = 0.0;     // W

    double intensity(double r) const {
        if (power <= 0.0) return 0.0;
        const double w = 0.5 * diameter;
        const double i0 = 2.0 * power / (constants::pi * w * w);
        return i0 * std::exp(-2.0 * r * r / (w * w));
    }
};

enum class OuterBoundary { Neumann, Absorbing };

struct TransportState {
    std::vector<double> r;   // node radii, r[0] = 0
    double dr = 0.0;
    OuterBoundary outer = OuterBoundary::Neumann;
    std::vector<double> n;   // electrons, m^-3
    std::vector<double> p;   // holes
    std::vector<std::vector<double>> state0;  // [trap][node]
    std::vector<std::vector<double>> state1;
    double time = 0.0;
    double clipped_mass = 0.0;  // integrated density clipped to zero, m^-3 m^2

    size_t nodes() const { return r.size(); }

    // Node-centered finite-volume cell measure; matches the diffusion
    // stencil so pure diffusion conserves the integral exactly.
    double cell_measure(size_t i) const {
        if (i == 0) return constants::pi * 0.25 * dr * dr;
        return constants::two_pi * r[i] * dr;
    }

    // 2 pi integral f r dr with the finite-volume cell measures.
    double integrate(const std::vector<double>& f) const {
        double acc = 0.0;
        for (size_t i = 0; i < f.size(); ++i) acc += f[i] * cell_measure(i);
        return acc;
    }
};

inline TransportState make_state(int nodes, double r_max, const ChargeRateSet& rates,
                                 OuterBoundary outer) {
    if (nodes < 8) throw std::invalid_argument("make_state: need at least 8 nodes");
    if (r_max <= 0.0) throw std::invalid_argument("make_state: r_max must be > 0");
    TransportState st;
    st.dr = r_max / (nodes - 1);
    st.outer = outer;
    st.r.resize(static_cast<size_t>(nodes));
    for (int i = 0; i < nodes; ++i) st.r[static_cast<size_t>(i)] = i * st.dr;
    st.n.assign(st.r.size(), 0.0);
    st.p.assign(st.r.size(), 0.0);
    for (const auto& t : rates.traps) {
        if (t.init_state0_ppm < 0.0 || t.init_state0_ppm > t.total_ppm)
            throw std::invalid_argument("make_state: trap initial state out of range: " + t.name);
        st.state0.emplace_back(st.r.size(), t.init_state0_ppm * constants::per_ppm);
        st.state1.emplace_back(st.r.size(),
                               (t.total_ppm - t.init_state0_ppm) * constants::per_ppm);
    }
    return st;
}

namespace detail {

// Conservative finite-volume cylindrical diffusion, explicit Euler.
inline void diffuse(std::vector<double>& f, double d, double dt, double dr,
                    OuterBoundary outer) {
    if (d <= 0.0) return;
    const size_t n = f.size();
    static thread_local std::vector<double> lap;
    lap.assign(n, 0.0);
    lap[0] = 4.0 * (f[1] - f[0]) / (dr * dr);
    for (size_t i = 1; i + 1 < n; ++i) {
        const double rp = (i + 0.5) * dr;
        const double rm = (i - 0.5) * dr;
        lap[i] = (rp * (f[i + 1] - f[i]) - rm * (f[i] - f[i - 1])) / (i * dr * dr * dr);
    }
    {
        const size_t i = n - 1;
        const double rm = (i - 0.5) * dr;
        // Neumann: no flux through the outer face
        lap[i] = -rm * (f[i] - f[i - 1]) / (i * dr * dr * dr);
    }
    for (size_t i = 0; i < n; ++i) f[i] += dt * d * lap[i];
    if (outer == OuterBoundary::Absorbing) f[n - 1] = 0.0;
}

struct LocalDerivative {
    double dn = 0.0;
    double dp = 0.0;
    std::vector<double> dstate0;
};

inline LocalDerivative local_rhs(const ChargeRateSet& rates, const std::vector<double>& ion,
                                 const std::vector<double>& rec, double n, double p,
                                 const std::vector<double>& s0, const std::vector<double>& s1) {
    LocalDerivative d;
    d.dstate0.resize(rates.traps.size());
    for (size_t t = 0; t < rates.traps.size(); ++t) {
        const auto& tr = rates.traps[t];
        const double gen_e = ion[t] * s0[t];
        const double gen_h = rec[t] * s1[t];
        const double cap_e = tr.capture_e * n * s1[t];
        const double cap_h = tr.capture_h * p * s0[t];
        d.dn += gen_e - cap_e;
        d.dp += gen_h - cap_h;
        d.dstate0[t] = -gen_e + gen_h + cap_e - cap_h;
    }
    return d;
}

}  // namespace detail

// One explicit step: finite-volume diffusion for n and p followed by an
// RK4 update of the local charge-state system at every node.  Negative
// densities are clipped to zero and the clipped mass accumulated.
inline void step(TransportState& st, const ChargeRateSet& rates,
                 const std::vector<BeamProfile>& beams, double dt) {
    const double dmax = std::max(rates.diffusion_n, rates.diffusion_p);
    if (dmax > 0.0 && dt > 0.4 * st.dr * st.dr / dmax)
        throw std::invalid_argument("step: dt violates the diffusion stability bound");

    detail::diffuse(st.n, rates.diffusion_n, dt, st.dr, st.outer);
    detail::diffuse(st.p, rates.diffusion_p, dt, st.dr, st.outer);

    const size_t ntr = rates.traps.size();
    std::vector<double> ion(ntr), rec(ntr), s0(ntr), s1(ntr), k0(ntr), acc0(ntr);
    for (size_t i = 0; i < st.nodes(); ++i) {
        double intensity = 0.0;
        for (const auto& b : beams) intensity += b.intensity(st.r[i]);
        for (size_t t = 0; t < ntr; ++t) {
            ion[t] = rates.traps[t].ionize.at(intensity);
            rec[t] = rates.traps[t].recombine.at(intensity);
        }

        const double n0 = st.n[i], p0 = st.p[i];
        for (size_t t = 0; t < ntr; ++t) {
            s0[t] = st.state0[t][i];
            s1[t] = st.state1[t][i];
        }

        // classic RK4 on (n, p, state0...); state1 follows from conservation
        double an = 0.0, ap = 0.0;
        std::fill(acc0.begin(), acc0.end(), 0.0);
        double cn = n0, cp = p0;
        std::vector<double> c0 = s0, c1 = s1;
        const double wts[4] = {1.0, 2.0, 2.0, 1.0};
        const double pos[4] = {0.0, 0.5, 0.5, 1.0};
        detail::LocalDerivative d;
        for (int stage = 0; stage < 4; ++stage) {
            if (stage > 0) {
                cn = n0 + pos[stage] * dt * d.dn;
                cp = p0 + pos[stage] * dt * d.dp;
                for (size_t t = 0; t < ntr; ++t) {
                    c0[t] = s0[t] + pos[stage] * dt * d.dstate0[t];
                    c1[t] = s1[t] - pos[stage] * dt * d.dstate0[t];
                }
            }
            d = detail::local_rhs(rates, ion, rec, cn, cp, c0, c1);
            an += wts[stage] * d.dn;
            ap += wts[stage] * d.dp;
            for (size_t t = 0; t < ntr; ++t) acc0[t] += wts[stage] * d.dstate0[t];
        }
        st.n[i] = n0 + dt / 6.0 * an;
        st.p[i] = p0 + dt / 6.0 * ap;
        for (size_t t = 0; t < ntr; ++t) {
            const double delta = dt / 6.0 * acc0[t];
            st.state0[t][i] = s0[t] + delta;
            st.state1[t][i] = s1[t] - delta;
        }

        auto clip = [&](double& v) {
            if (v < 0.0) {
                st.clipped_mass += -v * st.cell_measure(i);
                v = 0.0;
            }
        };
        clip(st.n[i]);
        clip(st.p[i]);
        for (size_t t = 0; t < ntr; ++t) {
            clip(st.state0[t][i]);
            clip(st.state1[t][i]);
        }
        if (!std::isfinite(st.n[i]) || !std::isfinite(st.p[i]))
            throw std::runtime_error("step: non-finite carrier density at t=" +
                                     std::to_string(st.time) + " node=" + std::to_string(i));
    }
    st.time += dt;
}

// n[Ns0] = n[Ns] gn n / (gn n + gp p + kN).  A zero denominator means no
// charge dynamics at all; the caller should keep the current state.
struct SteadyStateResult {
    double ns0_ppm = 0.0;
    bool no_dynamics = false;
};

inline SteadyStateResult steady_state_ns0(double total_ns_ppm, double n, double p,
                                          double gamma_n, double gamma_p, double k_ionize) {
    if (total_ns_ppm < 0.0) throw std::invalid_argument("steady_state_ns0: negative density");
    const double num = gamma_n * n;
    const double den = num + gamma_p * p + k_ionize;
    if (den <= 0.0) return {total_ns_ppm, true};
    return {total_ns_ppm * num / den, false};
}

struct IlluminationPhase {
    double duration = 0.0;   // s
    double pump_scale = 0.0;
    double readout_scale = 0.0;
};

struct PumpProbeConfig {
    int nodes = 256;
    double r_max = 100e-6;
    OuterBoundary boundary = OuterBoundary::Neumann;
    double dt = 5e-8;
    ChargeRateSet rates;
    BeamProfile pump;
    BeamProfile readout;
    std::vector<IlluminationPhase> phases;
    std::vector<double> snapshot_times;  // s, ascending
};

// Runs the illumination schedule and returns copies of the state at the
// requested times (and always the final state).
inline std::vector<TransportState> run_pump_probe(const PumpProbeConfig& cfg) {
    TransportState st = make_state(cfg.nodes, cfg.r_max, cfg.rates, cfg.boundary);
    std::vector<TransportState> snaps;
    auto want = cfg.snapshot_times;
    std::sort(want.begin(), want.end());
    size_t next = 0;
    while (next < want.size() && want[next] <= 0.0) {
        snaps.push_back(st);
        ++next;
    }
    for (const auto& phase : cfg.phases) {
        std::vector<BeamProfile> beams;
        if (phase.pump_scale > 0.0)
            beams.push_back(BeamProfile{cfg.pump.diameter, cfg.pump.power * phase.pump_scale});
        if (phase.readout_scale > 0.0)
            beams.push_back(
                BeamProfile{cfg.readout.diameter, cfg.readout.power * phase.readout_scale});
        const double t_end = st.time + phase.duration;
        while (st.time < t_end - 1e-15) {
            const double dt = std::min(cfg.dt, t_end - st.time);
            step(st, cfg.rates, beams, dt);
            while (next < want.size() && st.time >= want[next] - 1e-15) {
                snaps.push_back(st);
                ++next;
            }
        }
    }
    snaps.push_back(st);
    return snaps;
}

}  // namespace spinbath::transport
