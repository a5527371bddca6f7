#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinbath/decoherence.hpp"
#include "spinbath/fitting.hpp"

// Pixel-grouped photon-count frames: grouping, per-group decay fits, and the
// density / coherence-time maps built from them.  Synthetic frames with
// Poisson statistics stand in for camera data.

namespace spinbath::frames {

struct PixelFrameSet {
    int nt = 0;
    int rows = 0;
    int cols = 0;
    double exposure_s = 0.0;
    std::vector<double> times_s;           // size nt
    std::vector<std::uint32_t> counts;     // nt * rows * cols, frame-major
    double d_omega = 0.0;                  // rad/s, programmed modulation

    std::uint32_t at(int t, int r, int c) const {
        return counts[static_cast<size_t>((t * rows + r) * cols + c)];
    }
    std::uint32_t& at(int t, int r, int c) {
        return counts[static_cast<size_t>((t * rows + r) * cols + c)];
    }
};

struct PixelGrouping {
    int group_rows = 1;  // tile height
    int group_cols = 1;
};

struct GroupedTraces {
    int rows = 0;  // group grid
    int cols = 0;
    std::vector<fitting::DecayTrace> traces;  // row-major over groups
};

// Sums counts per rectangular tile per time index; integer arithmetic, so
// total counts are preserved exactly.
inline GroupedTraces group_pixels(const PixelFrameSet& f, const PixelGrouping& g) {
    if (g.group_rows < 1 || g.group_cols < 1 || g.group_rows > f.rows || g.group_cols > f.cols)
        throw std::invalid_argument("group_pixels: grouping does not tile the frame");
    GroupedTraces out;
    out.rows = (f.rows + g.group_rows - 1) / g.group_rows;
    out.cols = (f.cols + g.group_cols - 1) / g.group_cols;
    out.traces.resize(static_cast<size_t>(out.rows * out.cols));
    for (auto& tr : out.traces) {
        tr.times = f.times_s;
        tr.values.assign(static_cast<size_t>(f.nt), 0.0);
        tr.d_omega = f.d_omega;
    }
    for (int t = 0; t < f.nt; ++t) {
        for (int r = 0; r < f.rows; ++r) {
            for (int c = 0; c < f.cols; ++c) {
                const int gi = (r / g.group_rows) * out.cols + (c / g.group_cols);
                std::uint64_t cur = static_cast<std::uint64_t>(
                    out.traces[static_cast<size_t>(gi)].values[static_cast<size_t>(t)]);
                cur += f.at(t, r, c);
                out.traces[static_cast<size_t>(gi)].values[static_cast<size_t>(t)] =
                    static_cast<double>(cur);
            }
        }
    }
    return out;
}

struct MapSet {
    int rows = 0;
    int cols = 0;
    std::vector<double> density_ppm;
    std::vector<double> t2_star_s;
    std::vector<double> t2_s;
    std::vector<double> contrast;
    std::vector<std::uint8_t> mask;  // 1 = valid
};

// Per-group fits of Ramsey, echo and DEER framesets; a failing cell is
// masked, never fatal.  The DEER rate is referenced against the per-group
// echo time to extract the recoupled density.
inline MapSet build_maps(const PixelFrameSet& ramsey, const PixelFrameSet& echo,
                         const PixelFrameSet& deer, const PixelGrouping& grouping,
                         double p_s = 1.0) {
    if (ramsey.rows != echo.rows || echo.rows != deer.rows || ramsey.cols != echo.cols ||
        echo.cols != deer.cols)
        throw std::invalid_argument("build_maps: frame dimensions disagree");

    const auto gr = group_pixels(ramsey, grouping);
    const auto ge = group_pixels(echo, grouping);
    const auto gd = group_pixels(deer, grouping);

    MapSet maps;
    maps.rows = gr.rows;
    maps.cols = gr.cols;
    const size_t n = gr.traces.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    maps.density_ppm.assign(n, nan);
    maps.t2_star_s.assign(n, nan);
    maps.t2_s.assign(n, nan);
    maps.contrast.assign(n, nan);
    maps.mask.assign(n, 0);

    for (size_t k = 0; k < n; ++k) {
        try {
            const auto fr = fitting::fit_decay(gr.traces[k]);
            const auto fe = fitting::fit_decay(ge.traces[k]);
            const auto fd = fitting::fit_decay(gd.traces[k]);
            auto bad = [](const fitting::FitResult& f) {
                for (const auto& fl : f.flags)
                    if (fl == "rate_unidentifiable" || fl == "zero_contrast") return true;
                return !f.converged;
            };
            if (bad(fr) || bad(fe) || bad(fd)) continue;
            const double rr = fr.by_name("rate");
            const double re = fe.by_name("rate");
            const double rd = fd.by_name("rate");
            if (rr <= 0.0 || re <= 0.0) continue;
            maps.t2_star_s[k] = 1.0 / rr;
            maps.t2_s[k] = 1.0 / re;
            maps.contrast[k] = std::abs(fd.by_name("c"));
            maps.density_ppm[k] = fitting::extract_density(rd, 1.0 / re, p_s).ppm;
            maps.mask[k] = 1;
        } catch (const std::exception&) {
            // cell stays masked
        }
    }
    return maps;
}

// ---------------------------------------------------------------------------
// Synthetic frames

struct SyntheticScene {
    int rows = 16;
    int cols = 16;
    std::vector<double> density_ppm;   // per pixel, recoupled species
    std::vector<double> extra_rate;    // per pixel additional 1/s on DEER+Ramsey
    double t2_s = 10e-6;               // echo time, uniform
    double p_s = 1.0;
    double mean_counts = 2000.0;
    double c0 = 0.5;
    double contrast = 0.4;
    double d_omega = constants::two_pi * 1e6;
    double phi0 = 0.0;
};

enum class FrameKind { Ramsey, Echo, Deer };

inline PixelFrameSet synthesize_frames(const SyntheticScene& sc, FrameKind kind,
                                       const std::vector<double>& times_s, std::uint64_t seed) {
    if (sc.density_ppm.size() != static_cast<size_t>(sc.rows * sc.cols))
        throw std::invalid_argument("synthesize_frames: density map size mismatch");
    PixelFrameSet f;
    f.nt = static_cast<int>(times_s.size());
    f.rows = sc.rows;
    f.cols = sc.cols;
    f.times_s = times_s;
    f.exposure_s = 1e-3;
    f.d_omega = sc.d_omega;
    f.counts.assign(static_cast<size_t>(f.nt) * sc.rows * sc.cols, 0);

    std::mt19937_64 rng(seed);
    for (int r = 0; r < sc.rows; ++r) {
        for (int c = 0; c < sc.cols; ++c) {
            const size_t px = static_cast<size_t>(r * sc.cols + c);
            const double ts_rate =
                constants::dephasing_rate_per_ppm() * sc.p_s * sc.density_ppm[px];
            const double extra = sc.extra_rate.empty() ? 0.0 : sc.extra_rate[px];
            double rate = 0.0;
            switch (kind) {
                case FrameKind::Ramsey:
                    rate = ts_rate + 1.0 / sc.t2_s + extra;
                    break;
                case FrameKind::Echo:
                    rate = 1.0 / sc.t2_s;
                    break;
                case FrameKind::Deer:
                    rate = ts_rate + 1.0 / sc.t2_s + extra;
                    break;
            }
            for (int t = 0; t < f.nt; ++t) {
                const double s = sc.c0 + 0.5 * sc.contrast *
                                             std::exp(-times_s[static_cast<size_t>(t)] * rate) *
                                             std::cos(sc.d_omega * times_s[static_cast<size_t>(t)] +
                                                      sc.phi0);
                std::poisson_distribution<std::uint32_t> pois(std::max(sc.mean_counts * s, 0.0));
                f.at(t, r, c) = pois(rng);
            }
        }
    }
    return f;
}

// ---------------------------------------------------------------------------
// Columnar text I/O with a self-describing header.

inline void write_frames(const PixelFrameSet& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_frames: cannot open " + path);
    os << "# spinbath-frames 1\n";
    os << "# nt " << f.nt << " rows " << f.rows << " cols " << f.cols << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9e", f.exposure_s);
    os << "# exposure_s " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.9e", f.d_omega);
    os << "# d_omega " << buf << "\n";
    os << "# times_s";
    for (double t : f.times_s) {
        std::snprintf(buf, sizeof buf, " %.9e", t);
        os << buf;
    }
    os << "\n";
    for (int t = 0; t < f.nt; ++t) {
        os << "# frame " << t << "\n";
        for (int r = 0; r < f.rows; ++r) {
            for (int c = 0; c < f.cols; ++c) {
                if (c) os << ' ';
                os << f.at(t, r, c);
            }
            os << "\n";
        }
    }
}

inline PixelFrameSet read_frames(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_frames: cannot open " + path);
    PixelFrameSet f;
    std::string line;
    if (!std::getline(is, line) || line.rfind("# spinbath-frames", 0) != 0)
        throw std::runtime_error("read_frames: bad magic in " + path);
    while (std::getline(is, line)) {
        if (line.rfind("# nt", 0) == 0) {
            std::istringstream ss(line.substr(1));
            std::string tag;
            ss >> tag >> f.nt >> tag >> f.rows >> tag >> f.cols;
        } else if (line.rfind("# exposure_s", 0) == 0) {
            f.exposure_s = std::stod(line.substr(13));
        } else if (line.rfind("# d_omega", 0) == 0) {
            f.d_omega = std::stod(line.substr(10));
        } else if (line.rfind("# times_s", 0) == 0) {
            std::istringstream ss(line.substr(9));
            double t;
            while (ss >> t) f.times_s.push_back(t);
        } else if (line.rfind("# frame", 0) == 0) {
            break;
        }
    }
    if (f.nt <= 0 || f.rows <= 0 || f.cols <= 0 ||
        f.times_s.size() != static_cast<size_t>(f.nt))
        throw std::runtime_error("read_frames: inconsistent header in " + path);
    f.counts.reserve(static_cast<size_t>(f.nt) * f.rows * f.cols);
    // first "# frame" line already consumed
    for (int t = 0; t < f.nt; ++t) {
        for (int r = 0; r < f.rows; ++r) {
            if (!std::getline(is, line))
                throw std::runtime_error("read_frames: truncated data in " + path);
            std::istringstream ss(line);
            std::uint32_t v;
            int got = 0;
            while (ss >> v) {
                f.counts.push_back(v);
                ++got;
            }
            if (got != f.cols) throw std::runtime_error("read_frames: bad row width in " + path);
        }
        if (t + 1 < f.nt && std::getline(is, line) && line.rfind("# frame", 0) != 0)
            throw std::runtime_error("read_frames: missing frame separator in " + path);
    }
    return f;
}

}  // namespace spinbath::frames
