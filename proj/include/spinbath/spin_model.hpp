#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinbath/constants.hpp"

// Static spin Hamiltonians of single defect species: electron Zeeman +
// zero-field splitting + hyperfine + nuclear Zeeman, built per Jahn-Teller
// orientation and diagonalized exactly.  All matrix elements are angular
// frequencies (rad/s).

namespace spinbath {

using Matrix = Eigen::MatrixXcd;
using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

struct NuclearCoupling {
    std::string isotope_label;
    double spin_i = 0.5;                  // 1/2, 1 or 3/2
    double a_zz = 0.0;                    // hyperfine principal values, rad/s
    double a_xx = 0.0;
    double a_yy = 0.0;
    Vector3 principal_axis{0.0, 0.0, 1.0};  // in the defect local frame
    double gyromagnetic_ratio = 0.0;      // rad/(s T)
};

struct JahnTellerOrientation {
    Vector3 axis{0.0, 0.0, 1.0};  // local z direction in the crystal frame
    double population = 1.0;
};

struct DefectSpinModel {
    std::string name;
    double electron_spin = 0.5;
    double g_factor = constants::g_electron;
    Matrix3 zfs_tensor = Matrix3::Zero();  // rad/s, defect local frame
    std::vector<NuclearCoupling> nuclear_couplings;
    std::vector<JahnTellerOrientation> jt_orientations;

    int electron_dim() const { return static_cast<int>(std::lround(2.0 * electron_spin + 1.0)); }

    int nuclear_dim() const {
        int d = 1;
        for (const auto& nc : nuclear_couplings)
            d *= static_cast<int>(std::lround(2.0 * nc.spin_i + 1.0));
        return d;
    }

    int dimension() const { return electron_dim() * nuclear_dim(); }
};

struct MagneticField {
    double magnitude = 0.0;  // tesla
    Vector3 direction{0.0, 0.0, 1.0};

    static MagneticField from_gauss(double gauss, const Vector3& dir) {
        return MagneticField{gauss * constants::gauss_to_tesla, dir.normalized()};
    }

    Vector3 vector() const { return magnitude * direction; }
};

// One diagonalized Jahn-Teller block.
struct EigenSystem {
    Eigen::VectorXd energies;              // ascending, rad/s
    Matrix states;                         // columns are eigenvectors
    std::vector<std::vector<double>> basis_labels;  // (m_S, m_I1, ...) per basis index
    int jt_index = 0;
};

namespace detail {

// Angular-momentum matrices for spin j in the |j,m> basis, m descending.
inline void spin_matrices(double j, Matrix& jx, Matrix& jy, Matrix& jz) {
    const int dim = static_cast<int>(std::lround(2.0 * j + 1.0));
    jx = Matrix::Zero(dim, dim);
    jy = Matrix::Zero(dim, dim);
    jz = Matrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) jz(k, k) = j - k;
    for (int k = 1; k < dim; ++k) {
        const double m = j - k;
        const double c = std::sqrt(j * (j + 1.0) - m * (m + 1.0));  // <m+1|J+|m>
        jx(k - 1, k) = 0.5 * c;
        jx(k, k - 1) = 0.5 * c;
        jy(k - 1, k) = std::complex<double>(0.0, -0.5 * c);
        jy(k, k - 1) = std::complex<double>(0.0, 0.5 * c);
    }
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Minimal rotation taking z-hat onto `axis` (Rodrigues).
inline Matrix3 rotation_z_to(const Vector3& axis) {
    Vector3 a = axis.normalized();
    const Vector3 z(0.0, 0.0, 1.0);
    const double c = z.dot(a);
    if (c > 1.0 - 1e-14) return Matrix3::Identity();
    if (c < -1.0 + 1e-14) {
        Matrix3 r = Matrix3::Identity();
        r(1, 1) = -1.0;
        r(2, 2) = -1.0;
        return r;
    }
    const Vector3 v = z.cross(a);
    Matrix3 vx;
    vx << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return Matrix3::Identity() + vx + vx * vx * ((1.0 - c) / v.squaredNorm());
}

// Embeds a three-component single-particle operator into the product space.
// part 0 is the electron, part k>=1 the k-th nucleus.
inline std::array<Matrix, 3> embedded_vector_op(const DefectSpinModel& model, int part) {
    std::vector<int> dims;
    dims.push_back(model.electron_dim());
    for (const auto& nc : model.nuclear_couplings)
        dims.push_back(static_cast<int>(std::lround(2.0 * nc.spin_i + 1.0)));

    const double j = (part == 0) ? model.electron_spin
                                 : model.nuclear_couplings[static_cast<size_t>(part - 1)].spin_i;
    Matrix jx, jy, jz;
    spin_matrices(j, jx, jy, jz);
    const std::array<const Matrix*, 3> comps{&jx, &jy, &jz};

    std::array<Matrix, 3> out;
    for (int c = 0; c < 3; ++c) {
        Matrix acc = Matrix::Identity(1, 1);
        for (size_t p = 0; p < dims.size(); ++p) {
            if (static_cast<int>(p) == part)
                acc = kron(acc, *comps[static_cast<size_t>(c)]);
            else
                acc = kron(acc, Matrix::Identity(dims[p], dims[p]));
        }
        out[static_cast<size_t>(c)] = std::move(acc);
    }
    return out;
}

inline std::vector<std::vector<double>> product_basis_labels(const DefectSpinModel& model) {
    std::vector<double> js;
    js.push_back(model.electron_spin);
    for (const auto& nc : model.nuclear_couplings) js.push_back(nc.spin_i);

    std::vector<std::vector<double>> labels(static_cast<size_t>(model.dimension()));
    for (size_t idx = 0; idx < labels.size(); ++idx) {
        size_t rem = idx;
        std::vector<double> lab(js.size());
        for (size_t p = js.size(); p-- > 0;) {
            const int d = static_cast<int>(std::lround(2.0 * js[p] + 1.0));
            const int k = static_cast<int>(rem % static_cast<size_t>(d));
            rem /= static_cast<size_t>(d);
            lab[p] = js[p] - k;
        }
        labels[idx] = std::move(lab);
    }
    return labels;
}

}  // namespace detail

// H = g muB B.S/hbar + S.D.S + sum_k S.A_k.I_k - sum_k gamma_nk B.I_k,
// with D and A_k rotated from the defect local frame into the crystal frame
// by the chosen Jahn-Teller orientation.
inline Matrix build_hamiltonian(const DefectSpinModel& model, const MagneticField& field,
                                int jt_index) {
    if (jt_index < 0 || jt_index >= static_cast<int>(model.jt_orientations.size()))
        throw std::invalid_argument("build_hamiltonian: jt_index out of range");
    if (model.dimension() > 64)
        throw std::invalid_argument("build_hamiltonian: Hilbert space dimension exceeds 64");
    if (field.magnitude < 0.0)
        throw std::invalid_argument("build_hamiltonian: negative field magnitude");
    if (std::abs(field.direction.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("build_hamiltonian: field direction must be unit norm");
    const auto& jt = model.jt_orientations[static_cast<size_t>(jt_index)];
    if (std::abs(jt.axis.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("build_hamiltonian: non-unit Jahn-Teller axis");

    const Matrix3 rot = detail::rotation_z_to(jt.axis);
    const Vector3 b = field.vector();
    const auto sv = detail::embedded_vector_op(model, 0);

    const double gamma = model.g_factor * constants::mu_bohr / constants::hbar;
    Matrix h = gamma * (b.x() * sv[0] + b.y() * sv[1] + b.z() * sv[2]);

    if (model.zfs_tensor.cwiseAbs().maxCoeff() > 0.0) {
        const Matrix3 d = rot * model.zfs_tensor * rot.transpose();
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 3; ++c)
                if (d(a, c) != 0.0) h += d(a, c) * (sv[static_cast<size_t>(a)] * sv[static_cast<size_t>(c)]);
    }

    for (size_t k = 0; k < model.nuclear_couplings.size(); ++k) {
        const auto& nc = model.nuclear_couplings[k];
        if (std::abs(nc.principal_axis.norm() - 1.0) > 1e-9)
            throw std::invalid_argument("build_hamiltonian: non-unit hyperfine principal axis");
        const auto iv = detail::embedded_vector_op(model, static_cast<int>(k) + 1);

        // Hyperfine principal frame: local z along principal_axis, then the
        // whole local frame is carried into the crystal frame by the JT rotation.
        Matrix3 ap = Matrix3::Zero();
        ap(0, 0) = nc.a_xx;
        ap(1, 1) = nc.a_yy;
        ap(2, 2) = nc.a_zz;
        const Matrix3 local = detail::rotation_z_to(nc.principal_axis);
        const Matrix3 a = rot * local * ap * local.transpose() * rot.transpose();
        for (int x = 0; x < 3; ++x)
            for (int y = 0; y < 3; ++y)
                if (a(x, y) != 0.0) h += a(x, y) * (sv[static_cast<size_t>(x)] * iv[static_cast<size_t>(y)]);

        h -= nc.gyromagnetic_ratio * (b.x() * iv[0] + b.y() * iv[1] + b.z() * iv[2]);
    }

    // enforce exact Hermiticity against accumulated roundoff
    h = 0.5 * (h + Matrix(h.adjoint()));
    return h;
}

// Exact diagonalization of one JT block.  Degenerate levels are ordered by
// the dominant product-basis index; eigenvector phases are fixed so the
// largest-magnitude component is real positive.
inline EigenSystem diagonalize(const Matrix& h, const DefectSpinModel& model, int jt_index) {
    const double scale = std::max(h.cwiseAbs().maxCoeff(), 1.0);
    if ((h - Matrix(h.adjoint())).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw std::invalid_argument("diagonalize: matrix is not Hermitian within tolerance");

    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("diagonalize: eigensolver failed");

    EigenSystem sys;
    sys.jt_index = jt_index;
    sys.energies = solver.eigenvalues();
    sys.states = solver.eigenvectors();
    sys.basis_labels = detail::product_basis_labels(model);

    const Eigen::Index dim = sys.energies.size();
    std::vector<Eigen::Index> order(static_cast<size_t>(dim));
    std::iota(order.begin(), order.end(), 0);
    auto dominant = [&](Eigen::Index col) {
        Eigen::Index idx = 0;
        sys.states.col(col).cwiseAbs().maxCoeff(&idx);
        return idx;
    };
    const double spread = std::max(sys.energies(dim - 1) - sys.energies(0), 1.0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (std::abs(sys.energies(a) - sys.energies(b)) > 1e-12 * spread)
            return sys.energies(a) < sys.energies(b);
        return dominant(a) < dominant(b);
    });

    Eigen::VectorXd e(dim);
    Matrix v(dim, dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
        e(k) = sys.energies(order[static_cast<size_t>(k)]);
        v.col(k) = sys.states.col(order[static_cast<size_t>(k)]);
        Eigen::Index imax = 0;
        v.col(k).cwiseAbs().maxCoeff(&imax);
        const std::complex<double> lead = v(imax, k);
        if (std::abs(lead) > 0.0) v.col(k) *= std::conj(lead) / std::abs(lead);
    }
    sys.energies = std::move(e);
    sys.states = std::move(v);
    return sys;
}

inline std::vector<EigenSystem> diagonalize_all(const DefectSpinModel& model,
                                                const MagneticField& field) {
    std::vector<EigenSystem> out;
    out.reserve(model.jt_orientations.size());
    for (int k = 0; k < static_cast<int>(model.jt_orientations.size()); ++k)
        out.push_back(diagonalize(build_hamiltonian(model, field, k), model, k));
    return out;
}

}  // namespace spinbath
