#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinbath/flipflop.hpp"
#include "spinbath/presets.hpp"
#include "spinbath/transport.hpp"

// Scenario configuration: one JSON document per batch run.  Validation is
// fail-fast with JSON-pointer style locations; the canonical serialization
// is hashed into every output header.

namespace spinbath::scenario {

using nlohmann::json;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct SpectrumRange {
    double fmin_mhz = 500.0;
    double fmax_mhz = 800.0;
    int points = 1501;
};

struct Scenario {
    std::string name = "scenario";
    std::uint64_t seed = 1;
    MagneticField field;
    double gamma_d = constants::mhz_to_angular;  // rad/s
    std::map<std::string, DefectSpinModel> species;
    BathComposition bath_before;
    BathComposition bath_after;
    SpectrumRange spectrum;
    double cluster_tolerance_mhz = 2.0;
    int mc_samples = 20000;
    std::optional<transport::PumpProbeConfig> transport_config;
    std::uint64_t hash = 0;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

inline double need_number(const json& j, const std::string& where, const std::string& key) {
    if (!j.contains(key) || !j[key].is_number()) fail(where + "." + key, "expected a number");
    return j[key].get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    return j[key].get<double>();
}

inline Vector3 parse_vec3(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) fail(where, "expected an array of 3 numbers");
    return Vector3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline DefectSpinModel parse_species(const json& j, const std::string& where) {
    if (j.contains("preset")) {
        DefectSpinModel m = presets::by_name(j["preset"].get<std::string>());
        if (j.contains("rename")) m.name = j["rename"].get<std::string>();
        if (j.contains("g_factor")) m.g_factor = j["g_factor"].get<double>();
        return m;
    }
    DefectSpinModel m;
    if (!j.contains("name")) fail(where, "custom species needs a name");
    m.name = j["name"].get<std::string>();
    m.electron_spin = need_number(j, where, "electron_spin");
    if (!(m.electron_spin == 0.5 || m.electron_spin == 1.0 || m.electron_spin == 1.5))
        fail(where + ".electron_spin", "must be 0.5, 1 or 1.5");
    m.g_factor = number_or(j, "g_factor", constants::g_electron);
    if (j.contains("zfs_mhz")) {
        const auto& z = j["zfs_mhz"];
        if (!z.is_array() || z.size() != 3) fail(where + ".zfs_mhz", "expected a 3x3 array");
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                m.zfs_tensor(r, c) = z[r][c].get<double>() * constants::mhz_to_angular;
        const Matrix3 sym = 0.5 * (m.zfs_tensor + m.zfs_tensor.transpose());
        if ((m.zfs_tensor - sym).cwiseAbs().maxCoeff() >
            1e-9 * std::max(1.0, m.zfs_tensor.cwiseAbs().maxCoeff()))
            fail(where + ".zfs_mhz", "tensor must be symmetric");
        m.zfs_tensor = presets::traceless(sym);
    }
    if (j.contains("nuclei")) {
        int idx = 0;
        for (const auto& nj : j["nuclei"]) {
            const std::string nw = where + ".nuclei[" + std::to_string(idx++) + "]";
            NuclearCoupling nc;
            nc.isotope_label = nj.value("isotope", "?");
            nc.spin_i = need_number(nj, nw, "spin");
            if (!(nc.spin_i == 0.5 || nc.spin_i == 1.0 || nc.spin_i == 1.5))
                fail(nw + ".spin", "must be 0.5, 1 or 1.5");
            nc.a_zz = need_number(nj, nw, "azz_mhz") * constants::mhz_to_angular;
            nc.a_xx = need_number(nj, nw, "axx_mhz") * constants::mhz_to_angular;
            nc.a_yy = number_or(nj, "ayy_mhz", nj["axx_mhz"].get<double>()) *
                      constants::mhz_to_angular;
            nc.gyromagnetic_ratio = need_number(nj, nw, "gamma_per_t");
            if (nj.contains("axis")) nc.principal_axis = parse_vec3(nj["axis"], nw + ".axis").normalized();
            m.nuclear_couplings.push_back(nc);
        }
    }
    if (j.contains("orientations")) {
        if (j["orientations"].is_string()) {
            if (j["orientations"].get<std::string>() != "four_111")
                fail(where + ".orientations", "unknown orientation set");
            m.jt_orientations = presets::four_111_orientations();
        } else {
            double total = 0.0;
            int idx = 0;
            for (const auto& oj : j["orientations"]) {
                const std::string ow = where + ".orientations[" + std::to_string(idx++) + "]";
                JahnTellerOrientation o;
                o.axis = parse_vec3(oj["axis"], ow + ".axis").normalized();
                o.population = need_number(oj, ow, "population");
                if (o.population < 0.0) fail(ow + ".population", "must be >= 0");
                total += o.population;
                m.jt_orientations.push_back(o);
            }
            if (std::abs(total - 1.0) > 1e-9)
                fail(where + ".orientations", "populations must sum to 1");
        }
    } else {
        m.jt_orientations = {{Vector3(0.0, 0.0, 1.0), 1.0}};
    }
    if (m.dimension() > 64) fail(where, "composite Hilbert space exceeds 64");
    return m;
}

inline BathComposition parse_bath(const json& j, const std::string& where,
                                  const std::map<std::string, DefectSpinModel>& species,
                                  double gamma_d) {
    BathComposition bath;
    bath.gamma_d = gamma_d;
    int idx = 0;
    for (const auto& bj : j) {
        const std::string bw = where + "[" + std::to_string(idx++) + "]";
        const std::string name = bj.value("species", "");
        auto it = species.find(name);
        if (it == species.end()) fail(bw + ".species", "unknown species '" + name + "'");
        const double ppm = need_number(bj, bw, "ppm");
        if (ppm < 0.0) fail(bw + ".ppm", "density must be >= 0");
        bath.entries.push_back({it->second, ppm});
    }
    return bath;
}

inline transport::PumpProbeConfig parse_transport(const json& j, const std::string& where) {
    transport::PumpProbeConfig cfg;
    cfg.nodes = static_cast<int>(number_or(j, "nodes", 256));
    if (cfg.nodes < 8) fail(where + ".nodes", "must be >= 8");
    cfg.r_max = need_number(j, where, "r_max_um") * 1e-6;
    if (cfg.r_max <= 0.0) fail(where + ".r_max_um", "must be > 0");
    const std::string b = j.value("boundary", "neumann");
    if (b == "neumann")
        cfg.boundary = transport::OuterBoundary::Neumann;
    else if (b == "absorbing")
        cfg.boundary = transport::OuterBoundary::Absorbing;
    else
        fail(where + ".boundary", "must be 'neumann' or 'absorbing'");
    cfg.dt = need_number(j, where, "dt_s");
    cfg.rates.diffusion_n = number_or(j, "diffusion_n_m2_s", 0.0);
    cfg.rates.diffusion_p = number_or(j, "diffusion_p_m2_s", 0.0);
    const double dr = cfg.r_max / (cfg.nodes - 1);
    const double dmax = std::max(cfg.rates.diffusion_n, cfg.rates.diffusion_p);
    if (dmax > 0.0 && cfg.dt > 0.4 * dr * dr / dmax)
        fail(where + ".dt_s", "violates the diffusion stability bound 0.4 dr^2 / D");

    auto parse_beam = [&](const char* key) {
        transport::BeamProfile beam;
        if (j.contains(key)) {
            beam.diameter = need_number(j[key], where + "." + key, "diameter_um") * 1e-6;
            beam.power = need_number(j[key], where + "." + key, "power_w");
            if (beam.diameter <= 0.0) fail(where + "." + key + ".diameter_um", "must be > 0");
            if (beam.power < 0.0) fail(where + "." + key + ".power_w", "must be >= 0");
        }
        return beam;
    };
    cfg.pump = parse_beam("pump");
    cfg.readout = parse_beam("readout");

    if (!j.contains("traps") || !j["traps"].is_array() || j["traps"].empty())
        fail(where + ".traps", "at least one trap species required");
    int idx = 0;
    for (const auto& tj : j["traps"]) {
        const std::string tw = where + ".traps[" + std::to_string(idx++) + "]";
        transport::TrapSpecies t;
        t.name = tj.value("name", "trap" + std::to_string(idx));
        t.total_ppm = need_number(tj, tw, "total_ppm");
        t.init_state0_ppm = need_number(tj, tw, "init_state0_ppm");
        if (t.total_ppm < 0.0) fail(tw + ".total_ppm", "must be >= 0");
        if (t.init_state0_ppm < 0.0 || t.init_state0_ppm > t.total_ppm)
            fail(tw + ".init_state0_ppm", "must lie in [0, total_ppm]");
        t.state0_charge = static_cast<int>(number_or(tj, "state0_charge", 0));
        auto parse_photo = [&](const char* key) {
            transport::PhotoRate pr;
            if (tj.contains(key)) {
                pr.coeff = need_number(tj[key], tw + "." + key, "coeff");
                pr.two_photon = tj[key].value("two_photon", false);
                if (pr.coeff < 0.0) fail(tw + "." + key + ".coeff", "must be >= 0");
            }
            return pr;
        };
        t.ionize = parse_photo("ionize");
        t.recombine = parse_photo("recombine");
        t.capture_e = number_or(tj, "capture_e", 0.0);
        t.capture_h = number_or(tj, "capture_h", 0.0);
        if (t.capture_e < 0.0 || t.capture_h < 0.0)
            fail(tw, "capture coefficients must be >= 0");
        cfg.rates.traps.push_back(t);
    }

    if (j.contains("phases")) {
        int pidx = 0;
        for (const auto& pj : j["phases"]) {
            const std::string pw = where + ".phases[" + std::to_string(pidx++) + "]";
            transport::IlluminationPhase ph;
            ph.duration = need_number(pj, pw, "duration_ms") * 1e-3;
            if (ph.duration <= 0.0) fail(pw + ".duration_ms", "must be > 0");
            ph.pump_scale = number_or(pj, "pump", 0.0);
            ph.readout_scale = number_or(pj, "readout", 0.0);
            cfg.phases.push_back(ph);
        }
    }
    if (j.contains("snapshots_ms"))
        for (const auto& sj : j["snapshots_ms"]) cfg.snapshot_times.push_back(sj.get<double>() * 1e-3);
    return cfg;
}

}  // namespace detail

inline Scenario parse_scenario(const json& j) {
    Scenario sc;
    sc.hash = detail::fnv1a(j.dump());
    sc.name = j.value("name", "scenario");
    if (j.contains("seed")) sc.seed = j["seed"].get<std::uint64_t>();

    if (!j.contains("field")) detail::fail("$.field", "required");
    const double gauss = detail::need_number(j["field"], "$.field", "gauss");
    if (gauss < 0.0) detail::fail("$.field.gauss", "must be >= 0");
    const Vector3 dir = detail::parse_vec3(j["field"]["direction"], "$.field.direction");
    if (dir.norm() <= 0.0) detail::fail("$.field.direction", "must be nonzero");
    sc.field = MagneticField::from_gauss(gauss, dir);

    const double gd_mhz = detail::number_or(j, "gamma_d_mhz", 1.0);
    if (gd_mhz <= 0.0) detail::fail("$.gamma_d_mhz", "must be > 0");
    sc.gamma_d = gd_mhz * constants::mhz_to_angular;

    if (j.contains("species")) {
        int idx = 0;
        for (const auto& sj : j["species"]) {
            auto m = detail::parse_species(sj, "$.species[" + std::to_string(idx++) + "]");
            if (sc.species.count(m.name))
                detail::fail("$.species", "duplicate species name '" + m.name + "'");
            sc.species.emplace(m.name, std::move(m));
        }
    }

    if (j.contains("bath_before"))
        sc.bath_before = detail::parse_bath(j["bath_before"], "$.bath_before", sc.species, sc.gamma_d);
    if (j.contains("bath_after"))
        sc.bath_after = detail::parse_bath(j["bath_after"], "$.bath_after", sc.species, sc.gamma_d);

    if (j.contains("spectrum")) {
        sc.spectrum.fmin_mhz = detail::need_number(j["spectrum"], "$.spectrum", "fmin_mhz");
        sc.spectrum.fmax_mhz = detail::need_number(j["spectrum"], "$.spectrum", "fmax_mhz");
        sc.spectrum.points = static_cast<int>(detail::number_or(j["spectrum"], "points", 1501));
        if (sc.spectrum.fmax_mhz <= sc.spectrum.fmin_mhz)
            detail::fail("$.spectrum", "fmax_mhz must exceed fmin_mhz");
        if (sc.spectrum.points < 2) detail::fail("$.spectrum.points", "must be >= 2");
    }
    if (j.contains("alpha"))
        sc.cluster_tolerance_mhz =
            detail::number_or(j["alpha"], "cluster_tolerance_mhz", sc.cluster_tolerance_mhz);
    if (sc.cluster_tolerance_mhz <= 0.0)
        detail::fail("$.alpha.cluster_tolerance_mhz", "must be > 0");
    if (j.contains("coherence")) {
        sc.mc_samples = static_cast<int>(
            detail::number_or(j["coherence"], "mc_samples", sc.mc_samples));
        if (sc.mc_samples < 1000) detail::fail("$.coherence.mc_samples", "must be >= 1000");
    }
    if (j.contains("transport"))
        sc.transport_config = detail::parse_transport(j["transport"], "$.transport");
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open scenario file: " + path);
    json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw ConfigError("JSON parse failure in " + path + ": " + e.what());
    }
    return parse_scenario(j);
}

}  // namespace spinbath::scenario
