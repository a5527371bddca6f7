#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinbath/constants.hpp"

// Nonlinear least squares (damped Gauss-Newton with a trust-region style
// lambda schedule) and the two fit models used throughout: the modulated
// exponential decay and the multi-Lorentzian spectrum.

namespace spinbath::fitting {

struct DecayTrace {
    std::vector<double> times;   // s, ascending
    std::vector<double> values;
    double d_omega = 0.0;        // rad/s, programmed modulation
    std::string metadata;
};

struct FitResult {
    std::vector<std::string> names;
    Eigen::VectorXd params;
    Eigen::VectorXd std_errors;
    double residual_norm = 0.0;   // sqrt(sum r^2)
    double gradient_norm = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<std::string> flags;

    double by_name(const std::string& n) const {
        for (size_t k = 0; k < names.size(); ++k)
            if (names[k] == n) return params[static_cast<Eigen::Index>(k)];
        throw std::invalid_argument("FitResult: no parameter named " + n);
    }
};

// residuals r = model - data and the analytic Jacobian d r / d p
using ResidualFn =
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)>;

struct LmOptions {
    int max_iterations = 200;
    double gradient_tol = 1e-10;   // on J^T r, scaled
    double step_tol = 1e-14;
    double lambda0 = 1e-3;
};

// Accepted iterations never increase the cost; lambda grows until a step is
// accepted or the step size underflows.
inline FitResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd p,
                                     const LmOptions& opt = {}) {
    FitResult out;
    const Eigen::Index np = p.size();
    Eigen::VectorXd r;
    Eigen::MatrixXd j;
    fn(p, r, j);
    double cost = r.squaredNorm();
    double lambda = opt.lambda0;

    int it = 0;
    bool converged = false;
    for (; it < opt.max_iterations; ++it) {
        const Eigen::VectorXd g = j.transpose() * r;
        out.gradient_norm = g.cwiseAbs().maxCoeff();
        if (out.gradient_norm < opt.gradient_tol * std::max(1.0, std::sqrt(cost))) {
            converged = true;
            break;
        }
        const Eigen::MatrixXd jtj = j.transpose() * j;
        bool accepted = false;
        for (int tries = 0; tries < 40; ++tries) {
            Eigen::MatrixXd a = jtj;
            for (Eigen::Index k = 0; k < np; ++k)
                a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
            const Eigen::VectorXd delta = a.ldlt().solve(-g);
            if (!delta.allFinite()) {
                lambda *= 4.0;
                continue;
            }
            if (delta.norm() < opt.step_tol * (p.norm() + opt.step_tol)) {
                converged = true;
                break;
            }
            Eigen::VectorXd r_new;
            Eigen::MatrixXd j_new;
            const Eigen::VectorXd p_new = p + delta;
            fn(p_new, r_new, j_new);
            const double cost_new = r_new.squaredNorm();
            if (std::isfinite(cost_new) && cost_new <= cost) {
                p = p_new;
                r = std::move(r_new);
                j = std::move(j_new);
                cost = cost_new;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if (converged) break;
        if (!accepted) break;  // stalled: no downhill step at any damping
    }

    out.params = p;
    out.residual_norm = std::sqrt(cost);
    out.iterations = it;
    out.converged = converged;
    if (!converged) out.flags.push_back("non_convergence");

    // standard errors from the residual covariance
    const Eigen::Index n = r.size();
    out.std_errors = Eigen::VectorXd::Zero(np);
    if (n > np) {
        const double s2 = cost / static_cast<double>(n - np);
        const Eigen::MatrixXd jtj = j.transpose() * j;
        const Eigen::MatrixXd cov = jtj.completeOrthogonalDecomposition().pseudoInverse() * s2;
        for (Eigen::Index k = 0; k < np; ++k)
            out.std_errors[k] = cov(k, k) > 0.0 ? std::sqrt(cov(k, k)) : 0.0;
    }
    return out;
}

// Finite-difference Jacobian used to cross-check the analytic ones in tests.
inline Eigen::MatrixXd numeric_jacobian(const ResidualFn& fn, const Eigen::VectorXd& p) {
    Eigen::VectorXd r0;
    Eigen::MatrixXd j0;
    fn(p, r0, j0);
    Eigen::MatrixXd jn(r0.size(), p.size());
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        const double h = 1e-7 * std::max(1.0, std::abs(p[k]));
        Eigen::VectorXd pp = p, pm = p;
        pp[k] += h;
        pm[k] -= h;
        Eigen::VectorXd rp, rm;
        Eigen::MatrixXd jd;
        fn(pp, rp, jd);
        fn(pm, rm, jd);
        jn.col(k) = (rp - rm) / (2.0 * h);
    }
    return jn;
}

// ---------------------------------------------------------------------------
// Decay model  S(t) = c0 + (c/2) exp(-rate t) cos(d_omega t + phi0)
// params: c0, c, rate, d_omega, phi0  (d_omega optionally pinned)

inline ResidualFn decay_residuals(const DecayTrace& trace, bool pin_domega) {
    return [&trace, pin_domega](const Eigen::VectorXd& p, Eigen::VectorXd& r,
                                Eigen::MatrixXd& j) {
        const Eigen::Index n = static_cast<Eigen::Index>(trace.times.size());
        const Eigen::Index np = pin_domega ? 4 : 5;
        r.resize(n);
        j.resize(n, np);
        const double c0 = p[0], c = p[1], rate = p[2];
        const double dw = pin_domega ? trace.d_omega : p[3];
        const double phi = pin_domega ? p[3] : p[4];
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t = trace.times[static_cast<size_t>(i)];
            const double e = std::exp(-rate * t);
            const double arg = dw * t + phi;
            const double cs = std::cos(arg), sn = std::sin(arg);
            r[i] = c0 + 0.5 * c * e * cs - trace.values[static_cast<size_t>(i)];
            j(i, 0) = 1.0;
            j(i, 1) = 0.5 * e * cs;
            j(i, 2) = -0.5 * c * t * e * cs;
            if (pin_domega) {
                j(i, 3) = -0.5 * c * e * sn;
            } else {
                j(i, 3) = -0.5 * c * t * e * sn;
                j(i, 4) = -0.5 * c * e * sn;
            }
        }
    };
}

// Deterministic seeding: rate from a log-envelope regression, phase from the
// first sample (both cosine branches tried, cheaper one kept).
inline FitResult fit_decay(const DecayTrace& trace, bool pin_domega = true) {
    const size_t n = trace.times.size();
    if (n < 8 || trace.values.size() != n)
        throw std::invalid_argument("fit_decay: need >= 8 samples with matching arrays");
    for (size_t k = 1; k < n; ++k)
        if (trace.times[k] <= trace.times[k - 1])
            throw std::invalid_argument("fit_decay: times must be ascending");

    double mean = 0.0;
    for (double v : trace.values) mean += v;
    mean /= static_cast<double>(n);

    double env_max = 0.0;
    for (double v : trace.values) env_max = std::max(env_max, std::abs(v - mean));
    double vscale = 0.0;
    for (double v : trace.values) vscale = std::max(vscale, std::abs(v));

    if (env_max < 1e-12 * std::max(1.0, vscale)) {
        // constant trace: zero contrast, rate meaningless
        FitResult out;
        out.names = pin_domega ? std::vector<std::string>{"c0", "c", "rate", "phi0"}
                               : std::vector<std::string>{"c0", "c", "rate", "d_omega", "phi0"};
        out.params = Eigen::VectorXd::Zero(pin_domega ? 4 : 5);
        out.params[0] = mean;
        out.std_errors = Eigen::VectorXd::Zero(out.params.size());
        out.converged = true;
        out.flags = {"zero_contrast", "rate_unidentifiable"};
        return out;
    }

    // log-envelope regression on samples with usable contrast
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (size_t k = 0; k < n; ++k) {
        const double e = std::abs(trace.values[k] - mean);
        if (e > 0.15 * env_max) {
            const double x = trace.times[k], y = std::log(e);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++m;
        }
    }
    const double span = trace.times.back() - trace.times.front();
    double rate0 = 1.0 / std::max(span, 1e-30);
    if (m >= 2) {
        const double denom = m * sxx - sx * sx;
        if (denom > 0.0) {
            const double slope = (m * sxy - sx * sy) / denom;
            if (slope < 0.0) rate0 = -slope;
        }
    }

    const double c_init = 2.0 * env_max;
    const double cosarg =
        std::clamp((trace.values[0] - mean) / (0.5 * c_init), -1.0, 1.0);
    const double phi_a = std::acos(cosarg);

    const auto fn = decay_residuals(trace, pin_domega);
    FitResult best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const double phi0 : {phi_a, -phi_a}) {
        Eigen::VectorXd p(pin_domega ? 4 : 5);
        if (pin_domega) {
            p << mean, c_init, rate0, phi0;
        } else {
            p << mean, c_init, rate0, trace.d_omega, phi0;
        }
        FitResult res = levenberg_marquardt(fn, p);
        if (res.residual_norm < best_cost) {
            best_cost = res.residual_norm;
            best = std::move(res);
        }
    }
    best.names = pin_domega ? std::vector<std::string>{"c0", "c", "rate", "phi0"}
                            : std::vector<std::string>{"c0", "c", "rate", "d_omega", "phi0"};
    const double c_fit = std::abs(best.by_name("c"));
    if (c_fit < 1e-10 * std::max(1.0, vscale)) best.flags.push_back("rate_unidentifiable");
    return best;
}

// ---------------------------------------------------------------------------
// Multi-Lorentzian model  A(f) = b + sum_k h_k / (1 + ((f-c_k)/w_k)^2)
// params: b, then (center, hwhm, height) per peak

struct SpectrumData {
    std::vector<double> freq;
    std::vector<double> amp;
};

inline ResidualFn lorentzian_residuals(const SpectrumData& data, int n_peaks) {
    return [&data, n_peaks](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
        const Eigen::Index n = static_cast<Eigen::Index>(data.freq.size());
        r.resize(n);
        j.setZero(n, 1 + 3 * n_peaks);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double f = data.freq[static_cast<size_t>(i)];
            double model = p[0];
            j(i, 0) = 1.0;
            for (int k = 0; k < n_peaks; ++k) {
                const double c = p[1 + 3 * k];
                const double w = p[2 + 3 * k];
                const double h = p[3 + 3 * k];
                const double x = (f - c) / w;
                const double den = 1.0 + x * x;
                const double lor = 1.0 / den;
                model += h * lor;
                const double dl_dx = -2.0 * x * lor * lor;
                j(i, 1 + 3 * k) = h * dl_dx * (-1.0 / w);
                j(i, 2 + 3 * k) = h * dl_dx * (-x / w);
                j(i, 3 + 3 * k) = lor;
            }
            r[i] = model - data.amp[static_cast<size_t>(i)];
        }
    };
}

struct PeakGuess {
    double center = 0.0;
    double hwhm = 0.0;    // <= 0 means auto
    double height = 0.0;  // <= 0 means auto
};

// Auto guesses: local maxima above 3x the robust baseline noise.
inline std::vector<PeakGuess> auto_peak_guesses(const SpectrumData& data, int n_peaks) {
    const size_t n = data.freq.size();
    std::vector<double> sorted = data.amp;
    std::sort(sorted.begin(), sorted.end());
    const double baseline = sorted[n / 2];
    std::vector<double> dev(n);
    for (size_t k = 0; k < n; ++k) dev[k] = std::abs(data.amp[k] - baseline);
    std::sort(dev.begin(), dev.end());
    const double noise = std::max(1.4826 * dev[n / 2], 1e-14);

    std::vector<std::pair<double, size_t>> cand;  // height, index
    for (size_t k = 1; k + 1 < n; ++k) {
        if (data.amp[k] >= data.amp[k - 1] && data.amp[k] > data.amp[k + 1] &&
            data.amp[k] > baseline + 3.0 * noise)
            cand.emplace_back(data.amp[k], k);
    }
    std::sort(cand.rbegin(), cand.rend());

    const double df = (data.freq.back() - data.freq.front()) /
                      static_cast<double>(std::max<size_t>(n - 1, 1));
    std::vector<PeakGuess> out;
    for (const auto& [h, idx] : cand) {
        if (static_cast<int>(out.size()) >= n_peaks) break;
        out.push_back(PeakGuess{data.freq[idx], 5.0 * df, h - baseline});
    }
    // flat spectra: park remaining guesses mid-grid with zero height
    while (static_cast<int>(out.size()) < n_peaks) {
        out.push_back(PeakGuess{0.5 * (data.freq.front() + data.freq.back()),
                                0.1 * (data.freq.back() - data.freq.front()), 0.0});
    }
    return out;
}

inline FitResult fit_lorentzians(const SpectrumData& data, int n_peaks,
                                 std::vector<PeakGuess> init = {}) {
    if (n_peaks < 1) throw std::invalid_argument("fit_lorentzians: n_peaks must be >= 1");
    if (data.freq.size() != data.amp.size() || data.freq.size() < static_cast<size_t>(1 + 3 * n_peaks) + 1)
        throw std::invalid_argument("fit_lorentzians: grid too short for the model");
    if (init.empty()) init = auto_peak_guesses(data, n_peaks);
    if (static_cast<int>(init.size()) != n_peaks)
        throw std::invalid_argument("fit_lorentzians: need one guess per peak");
    for (const auto& g : init)
        if (g.center < data.freq.front() || g.center > data.freq.back())
            throw std::invalid_argument("fit_lorentzians: initial center outside the grid");

    std::vector<double> sorted = data.amp;
    std::sort(sorted.begin(), sorted.end());
    const double baseline = sorted[sorted.size() / 2];
    const double df = (data.freq.back() - data.freq.front()) /
                      static_cast<double>(data.freq.size() - 1);

    Eigen::VectorXd p(1 + 3 * n_peaks);
    p[0] = baseline;
    for (int k = 0; k < n_peaks; ++k) {
        const auto& g = init[static_cast<size_t>(k)];
        p[1 + 3 * k] = g.center;
        p[2 + 3 * k] = g.hwhm > 0.0 ? g.hwhm : 5.0 * df;
        p[3 + 3 * k] = g.height;
    }

    FitResult res = levenberg_marquardt(lorentzian_residuals(data, n_peaks), p);

    // report peaks sorted by center
    std::vector<int> order(static_cast<size_t>(n_peaks));
    for (int k = 0; k < n_peaks; ++k) order[static_cast<size_t>(k)] = k;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return res.params[1 + 3 * a] < res.params[1 + 3 * b];
    });
    Eigen::VectorXd ps = res.params, es = res.std_errors;
    for (int k = 0; k < n_peaks; ++k) {
        for (int c = 0; c < 3; ++c) {
            ps[1 + 3 * k + c] = res.params[1 + 3 * order[static_cast<size_t>(k)] + c];
            es[1 + 3 * k + c] = res.std_errors[1 + 3 * order[static_cast<size_t>(k)] + c];
        }
        // canonical sign: widths positive
        ps[2 + 3 * k] = std::abs(ps[2 + 3 * k]);
    }
    res.params = std::move(ps);
    res.std_errors = std::move(es);

    res.names = {"baseline"};
    for (int k = 0; k < n_peaks; ++k) {
        const std::string s = std::to_string(k);
        res.names.push_back("center_" + s);
        res.names.push_back("hwhm_" + s);
        res.names.push_back("height_" + s);
    }
    for (int k = 0; k + 1 < n_peaks; ++k) {
        const double gap = res.params[1 + 3 * (k + 1)] - res.params[1 + 3 * k];
        const double w = std::max(res.params[2 + 3 * k], res.params[2 + 3 * (k + 1)]);
        if (gap < 0.1 * w) res.flags.push_back("peak_collapse");
    }
    for (int k = 0; k < n_peaks; ++k) {
        const double h = std::abs(res.params[3 + 3 * k]);
        const double se = res.std_errors[3 + 3 * k];
        if (h < std::max(3.0 * se, 1e-12)) res.flags.push_back("peak_unidentifiable");
    }
    return res;
}

// ---------------------------------------------------------------------------

struct DensityEstimate {
    double ppm = 0.0;
    bool below_reference = false;  // fitted rate did not exceed 1/T2_ref
};

// n_s = (rate - 1/T2_ref) / (K P_s); rates in 1/s, T2_ref in s.
inline DensityEstimate extract_density(double rate_per_s, double t2_reference_s, double p_s) {
    if (t2_reference_s <= 0.0)
        throw std::invalid_argument("extract_density: reference T2 must be > 0");
    if (p_s <= 0.0) throw std::invalid_argument("extract_density: P_s must be > 0");
    const double excess = rate_per_s - 1.0 / t2_reference_s;
    if (excess <= 0.0) return {0.0, true};
    return {excess / (constants::dephasing_rate_per_ppm() * p_s), false};
}

}  // namespace spinbath::fitting
