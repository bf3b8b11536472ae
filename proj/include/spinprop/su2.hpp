// su2.hpp — spin-j irreducible representations of SU(2) and the elementary
// unitaries built from them (Hermitian exponentials, axis rotations, dipole
// Hamiltonians and their exact eigensystems).
//
// Conventions: hbar = 1, basis ordered by descending magnetic number
// m = j, j-1, ..., -j, so J3 = diag(j, ..., -j). Ladder action
// J+|m> = C_m |m+1> with C_m = sqrt((j-m)(j+m+1)).

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "spinprop/numerics.hpp"

namespace spinprop {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline double max_norm(const Matrix& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline double hermiticity_defect(const Matrix& a) {
    return max_norm(a - a.adjoint());
}

inline double unitarity_defect(const Matrix& u) {
    return max_norm(u.adjoint() * u - Matrix::Identity(u.rows(), u.cols()));
}

inline bool is_half_integer_spin(double j) {
    if (!(j >= 0.0) || !std::isfinite(j)) return false;
    const double twice = 2.0 * j;
    return std::abs(twice - std::round(twice)) < 1e-9;
}

// C_m = sqrt((j-m)(j+m+1)); satisfies C_m = C_{-m-1}.
inline double ladder_coefficient(double j, double m) {
    return std::sqrt((j - m) * (j + m + 1.0));
}

// A spin-j representation: the generator triple plus a cached eigensystem of
// J2 used to evaluate e^{-i theta J2} without re-diagonalizing.
struct SpinRep {
    double j = 0.0;
    int dim = 1;
    Matrix J1, J2, J3;

    Eigen::VectorXd j2_values;
    Matrix j2_vectors;

    // m value of basis row k (descending order).
    double m_at(int row) const { return j - row; }
};

inline SpinRep build_generators(double j) {
    if (!is_half_integer_spin(j))
        throw std::invalid_argument("build_generators: j must be a non-negative half-integer");
    SpinRep rep;
    rep.j = j;
    rep.dim = static_cast<int>(std::lround(2.0 * j)) + 1;
    const int d = rep.dim;

    Matrix jplus = Matrix::Zero(d, d);
    rep.J3 = Matrix::Zero(d, d);
    for (int k = 0; k < d; ++k) {
        const double m = j - k;
        rep.J3(k, k) = Complex(m, 0.0);
        if (k >= 1) jplus(k - 1, k) = Complex(ladder_coefficient(j, m), 0.0);
    }
    const Matrix jminus = jplus.adjoint();
    rep.J1 = 0.5 * (jplus + jminus);
    rep.J2 = Complex(0.0, -0.5) * (jplus - jminus);

    Eigen::SelfAdjointEigenSolver<Matrix> es(rep.J2);
    rep.j2_values = es.eigenvalues();
    rep.j2_vectors = es.eigenvectors();
    return rep;
}

// exp(-i s H) for Hermitian H, via spectral decomposition. Every result is
// unitary to round-off; the zero-argument cases return the identity exactly.
inline Matrix hermitian_exp(const Matrix& h, double s) {
    if (h.rows() != h.cols())
        throw std::invalid_argument("hermitian_exp: matrix must be square");
    const double scale = std::max(1.0, max_norm(h));
    if (hermiticity_defect(h) > 1e-10 * scale)
        throw std::invalid_argument("hermitian_exp: matrix is not Hermitian");
    if (s == 0.0 || max_norm(h) == 0.0) return Matrix::Identity(h.rows(), h.cols());
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
    Vector phases(h.rows());
    for (int k = 0; k < h.rows(); ++k)
        phases[k] = std::polar(1.0, -s * es.eigenvalues()[k]);
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// e^{-i s J3}: diagonal, evaluated in closed form.
inline Matrix exp_j3(const SpinRep& rep, double s) {
    Vector d(rep.dim);
    for (int k = 0; k < rep.dim; ++k) d[k] = std::polar(1.0, -s * rep.m_at(k));
    return Matrix(d.asDiagonal());
}

// e^{-i theta J2} via the cached eigensystem of J2.
inline Matrix exp_j2(const SpinRep& rep, double theta) {
    if (theta == 0.0) return Matrix::Identity(rep.dim, rep.dim);
    Vector phases(rep.dim);
    for (int k = 0; k < rep.dim; ++k) phases[k] = std::polar(1.0, -theta * rep.j2_values[k]);
    return rep.j2_vectors * phases.asDiagonal() * rep.j2_vectors.adjoint();
}

// W(theta, phi) = e^{-i phi J3} e^{-i theta J2} e^{i phi J3}; conjugates J3
// into the field direction, W J3 W^dag = n.J. Defined for all real angles;
// the (theta, phi) patch excluding the negative z-axis is where its columns
// form the single-valued eigenbasis.
inline Matrix rotation_w(const SpinRep& rep, double theta, double phi) {
    if (!std::isfinite(theta) || !std::isfinite(phi))
        throw std::invalid_argument("rotation_w: angles must be finite");
    return exp_j3(rep, phi) * exp_j2(rep, theta) * exp_j3(rep, -phi);
}

struct Spherical {
    double r = 0.0;
    double theta = 0.0;
    double phi = 0.0;
};

// H[R] = r (sin t cos p J1 + sin t sin p J2 + cos t J3).
inline Matrix dipole_hamiltonian(const SpinRep& rep, const Spherical& field) {
    if (!(field.r > 0.0))
        throw std::domain_error("dipole_hamiltonian: field magnitude must be positive");
    const double st = std::sin(field.theta), ct = std::cos(field.theta);
    const double sp = std::sin(field.phi), cp = std::cos(field.phi);
    return field.r * (st * cp * rep.J1 + st * sp * rep.J2 + ct * rep.J3);
}

struct EigenPair {
    double value = 0.0;  // n * r
    double n = 0.0;      // the eigenlevel in -j..j
    Vector vector;
};

// Eigensystem of H[R]: values n r for n = -j..j (ascending), eigenvectors the
// corresponding columns of W(theta, phi). The phase convention is fixed by W
// rather than by a generic solver.
inline std::vector<EigenPair> eigensystem(const SpinRep& rep, const Spherical& field) {
    if (!(field.r > 0.0))
        throw std::domain_error("eigensystem: field magnitude must be positive");
    const Matrix w = rotation_w(rep, field.theta, field.phi);
    std::vector<EigenPair> pairs;
    pairs.reserve(rep.dim);
    for (int k = 0; k < rep.dim; ++k) {
        const double n = -rep.j + k;
        const int col = static_cast<int>(std::lround(rep.j - n));
        pairs.push_back({n * field.r, n, w.col(col)});
    }
    return pairs;
}

}  // namespace spinprop
