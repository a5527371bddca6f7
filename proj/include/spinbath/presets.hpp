#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinbath/constants.hpp"
#include "spinbath/spin_model.hpp"

// Built-in defect species for CVD diamond.  Hyperfine and zero-field values
// are stored as angular frequencies; tensors given in GHz/MHz in the source
// material are converted here once.

namespace spinbath::presets {

inline std::vector<JahnTellerOrientation> four_111_orientations() {
    const double s = 1.0 / std::sqrt(3.0);
    return {
        {Vector3(s, s, s), 0.25},
        {Vector3(s, -s, -s), 0.25},
        {Vector3(-s, s, -s), 0.25},
        {Vector3(-s, -s, s), 0.25},
    };
}

inline NuclearCoupling axial_coupling(const std::string& isotope, double spin_i,
                                      double azz_mhz, double aperp_mhz, double gamma_n) {
    NuclearCoupling nc;
    nc.isotope_label = isotope;
    nc.spin_i = spin_i;
    nc.a_zz = azz_mhz * constants::mhz_to_angular;
    nc.a_xx = aperp_mhz * constants::mhz_to_angular;
    nc.a_yy = aperp_mhz * constants::mhz_to_angular;
    nc.principal_axis = Vector3(0.0, 0.0, 1.0);
    nc.gyromagnetic_ratio = gamma_n;
    return nc;
}

// Traceless copy of a ZFS tensor; the isotropic part only shifts all levels.
inline Matrix3 traceless(const Matrix3& d) {
    return d - Matrix3::Identity() * (d.trace() / 3.0);
}

// P1 (neutral substitutional nitrogen): S = 1/2 with a strong 14N coupling;
// the hyperfine axis follows the Jahn-Teller distortion.
inline DefectSpinModel p1() {
    DefectSpinModel m;
    m.name = "P1";
    m.electron_spin = 0.5;
    m.nuclear_couplings = {axial_coupling("14N", 1.0, 114.0, -82.0, constants::gamma_n14)};
    m.jt_orientations = four_111_orientations();
    return m;
}

// NVH-: S = 1/2 with one 1H coupling along the molecular C3v axis.  The weak
// 14N coupling (~2 MHz) is omitted here; see nvh_full() for the variant that
// carries it.
inline DefectSpinModel nvh_minus() {
    DefectSpinModel m;
    m.name = "NVH-";
    m.electron_spin = 0.5;
    m.nuclear_couplings = {axial_coupling("1H", 0.5, -13.69, -9.05, constants::gamma_h1)};
    m.jt_orientations = four_111_orientations();
    return m;
}

// NVH- with both the 1H and the 14N couplings resolved.
inline DefectSpinModel nvh_full() {
    DefectSpinModel m = nvh_minus();
    m.name = "NVH-full";
    m.nuclear_couplings.push_back(
        axial_coupling("14N", 1.0, 2.1, -2.2, constants::gamma_n14));
    return m;
}

// H1 center: placeholder parameters (unverified); a spin-1/2 with a single
// moderate 1H coupling.  Kept out of quantitative checks.
inline DefectSpinModel h1() {
    DefectSpinModel m;
    m.name = "H1";
    m.electron_spin = 0.5;
    m.nuclear_couplings = {axial_coupling("1H", 0.5, -11.0, -7.0, constants::gamma_h1)};
    m.jt_orientations = four_111_orientations();
    return m;
}

// VH0: S = 1/2 with a weak 1H coupling.  The tensor magnitude is calibrated
// so the flip-flop suppression factor at Gamma_d = (2pi) 1 MHz reproduces the
// reference value 0.973.
inline DefectSpinModel vh0() {
    DefectSpinModel m;
    m.name = "VH0";
    m.electron_spin = 0.5;
    m.nuclear_couplings = {axial_coupling("1H", 0.5, -0.32, -0.19, constants::gamma_h1)};
    m.jt_orientations = four_111_orientations();
    return m;
}

// NVH0: S = 1 with the ab-initio ZFS tensor, local z along the C3v axis.
inline DefectSpinModel nvh0() {
    DefectSpinModel m;
    m.name = "NVH0";
    m.electron_spin = 1.0;
    Matrix3 d = Matrix3::Zero();
    d(0, 0) = -0.76e3;
    d(1, 1) = -0.76e3;
    d(2, 2) = 1.53e3;  // MHz
    m.zfs_tensor = traceless(d) * constants::mhz_to_angular;
    m.jt_orientations = four_111_orientations();
    return m;
}

// VH2_0: S = 1 with the ab-initio ZFS tensor in the cubic axes (single
// orientation; the two hydrogens lie in the xz plane).
inline DefectSpinModel vh2_0() {
    DefectSpinModel m;
    m.name = "VH2_0";
    m.electron_spin = 1.0;
    Matrix3 d = Matrix3::Zero();
    d(0, 0) = -0.40e3;
    d(1, 1) = 0.79e3;
    d(2, 2) = -0.40e3;
    d(0, 2) = 2.21e3;
    d(2, 0) = 2.21e3;  // MHz
    m.zfs_tensor = traceless(d) * constants::mhz_to_angular;
    m.jt_orientations = {{Vector3(0.0, 0.0, 1.0), 1.0}};
    return m;
}

// Bare spin-1/2 with no nuclear structure (also stands in for the g = 2
// vacancy-like X2 component).
inline DefectSpinModel free_electron() {
    DefectSpinModel m;
    m.name = "free_electron";
    m.electron_spin = 0.5;
    m.jt_orientations = {{Vector3(0.0, 0.0, 1.0), 1.0}};
    return m;
}

inline DefectSpinModel by_name(const std::string& name) {
    if (name == "P1") return p1();
    if (name == "NVH-") return nvh_minus();
    if (name == "NVH-full") return nvh_full();
    if (name == "H1") return h1();
    if (name == "VH0") return vh0();
    if (name == "NVH0") return nvh0();
    if (name == "VH2_0") return vh2_0();
    if (name == "free_electron") return free_electron();
    throw std::invalid_argument("unknown species preset: " + name);
}

inline std::vector<std::string> names() {
    return {"P1", "NVH-", "NVH-full", "H1", "VH0", "NVH0", "VH2_0", "free_electron"};
}

}  // namespace spinbath::presets
