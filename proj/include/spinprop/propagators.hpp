// propagators.hpp — phases, the adiabatic propagator, quantum canonical
// (gauge) transformations of Hamiltonians, the transformed Hamiltonians
// H1/H2/H3/Hbar2, and the exact evolution operators for the two solvable
// families:
//
//   sigma constant           (r = r*):             U = U0 W0 U' W0^dag,
//                                                  U' = exp[-i ell (cos s0 J1 - sin s0 J2)]
//   sigma affine in ell      (r = r* + nu0 omega): U = U0 W0 B2(ell) B3(ell) B2(0)^dag W0^dag,
//                                                  B2 = e^{+i sigma J3}, B3 = exp[-i ell (J1 + nu0 J3)]
//
// plus the large-omega approximation (the affine machinery at nu0 = 0) and a
// least-squares solvability classifier that decides which family applies.

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spinprop/field_curve.hpp"
#include "spinprop/kinematics.hpp"
#include "spinprop/su2.hpp"

namespace spinprop {

enum class Method { adiabatic, lemma1, lemma2, oracle, large_omega };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::adiabatic: return "adiabatic";
        case Method::lemma1: return "lemma1";
        case Method::lemma2: return "lemma2";
        case Method::oracle: return "oracle";
        case Method::large_omega: return "large_omega";
    }
    return "unknown";
}

struct PropagatorMeta {
    long steps = 0;
    double residual = std::numeric_limits<double>::quiet_NaN();
    double nu0 = std::numeric_limits<double>::quiet_NaN();
    double max_abs_nu = std::numeric_limits<double>::quiet_NaN();
    double unitarity_defect = std::numeric_limits<double>::quiet_NaN();
    std::string note;
};

struct Propagator {
    Matrix U;
    Method method = Method::oracle;
    PropagatorMeta meta;
};

using MatrixSampler = std::function<Matrix(double)>;

// H(t) = R(t).J assembled from a field curve.
inline MatrixSampler dipole_sampler(const SpinRep& rep, const FieldCurve& curve) {
    return [rep, curve](double t) { return dipole_hamiltonian(rep, curve.field(t)); };
}

// --- phases and the adiabatic propagator -----------------------------------

inline PhaseRecord phases(const Kinematics& kin, double t) { return kin.phases(t); }

// Adiabatic coupling matrix A_mn = <m;t| d/dt |n;t> for the eigenbasis carried
// by W(theta, phi). Rows/columns are ordered by descending m like everything
// else; the result is anti-Hermitian with diagonal i m (1 - cos theta) phidot.
inline Matrix adiabatic_coupling(const SpinRep& rep, const FieldCurve& curve, double t) {
    const CurveState s = curve.at(t);
    const int d = rep.dim;
    Matrix a = Matrix::Zero(d, d);
    const Complex eip = std::polar(1.0, s.phi);
    const Complex eim = std::conj(eip);
    const double st = std::sin(s.theta), ct = std::cos(s.theta);
    for (int row = 0; row < d; ++row) {
        const double m = rep.m_at(row);
        a(row, row) = Complex(0.0, m * (1.0 - ct) * s.phidot);
        if (row >= 1) {
            // column label n = m + 1 sits at row - 1
            const double c = ladder_coefficient(rep.j, m);
            a(row, row - 1) = Complex(0.0, 0.5 * st * s.phidot) * eip * c + 0.5 * s.thetadot * eip * c;
        }
        if (row + 1 < d) {
            // column label n = m - 1 sits at row + 1
            const double c = ladder_coefficient(rep.j, m - 1.0);
            a(row, row + 1) = Complex(0.0, 0.5 * st * s.phidot) * eim * c - 0.5 * s.thetadot * eim * c;
        }
    }
    return a;
}

// U0(t) = W(theta(t), phi(t)) e^{i alpha(t) J3} W(theta0, phi0)^dag. Exact for
// stationary directions, approximate otherwise.
inline Propagator adiabatic_u0(const SpinRep& rep, const Kinematics& kin, double t) {
    const CurveState s0 = kin.curve().at(0.0);
    const CurveState st = kin.curve().at(t);
    const Matrix w0 = rotation_w(rep, s0.theta, s0.phi);
    const Matrix wt = rotation_w(rep, st.theta, st.phi);
    Propagator p;
    p.method = Method::adiabatic;
    p.U = wt * exp_j3(rep, -kin.alpha(t)) * w0.adjoint();
    p.meta.unitarity_defect = unitarity_defect(p.U);
    return p;
}

// --- quantum canonical transformation --------------------------------------

// H'(t) = V H V^dag - i V Vdot^dag for a differentiable unitary family V.
// Vdot comes from a centered 5-point stencil of half-width fd_step, so the
// sampler must be evaluable on [t - 2h, t + 2h]. The anti-Hermitian residue
// of the derivative term is split off and reported through the out-param.
inline Matrix gauge_transform(const MatrixSampler& h, const MatrixSampler& v, double t,
                              double fd_step = 1e-4, double* hermiticity_residual = nullptr) {
    if (!(fd_step > 0.0)) throw std::invalid_argument("gauge_transform: fd_step must be positive");
    const Matrix vt = v(t);
    Matrix vdot = Matrix::Zero(vt.rows(), vt.cols());
    const double w[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
    for (int k = 0; k < 5; ++k) {
        if (w[k] == 0.0) continue;
        vdot += (w[k] / (12.0 * fd_step)) * v(t + (k - 2) * fd_step);
    }
    Matrix out = vt * h(t) * vt.adjoint() - Complex(0.0, 1.0) * vt * vdot.adjoint();
    const double defect = hermiticity_defect(out);
    if (hermiticity_residual) *hermiticity_residual = defect;
    return 0.5 * (out + out.adjoint());
}

// --- transformed Hamiltonians ----------------------------------------------

// H1 = omega (cos sigma J1 - sin sigma J2): the planar Hamiltonian seen from
// the co-moving eigenframe (combined with the constant W0 rotation).
inline Matrix h1_planar(const SpinRep& rep, const Kinematics& kin, double t) {
    const double w = kin.omega(t);
    if (!(std::abs(w) > kin.omega_floor()))
        return Matrix::Zero(rep.dim, rep.dim);
    const double s = kin.sigma(t);
    return w * (std::cos(s) * rep.J1 - std::sin(s) * rep.J2);
}

// H2 = omega J1 + sigmadot J3 and H3 = sigmadot (cos ell J3 + sin ell J2).
inline std::pair<Matrix, Matrix> h2_h3(const SpinRep& rep, const Kinematics& kin, double t) {
    const double w = kin.omega(t);
    const double sd = kin.sigma_rate(t);
    const double l = kin.ell(t);
    Matrix h2 = w * rep.J1 + sd * rep.J3;
    Matrix h3 = sd * (std::cos(l) * rep.J3 + std::sin(l) * rep.J2);
    return {h2, h3};
}

// Hbar1(ell) = cos sigma(ell) J1 - sin sigma(ell) J2 (arc-length parameter).
inline Matrix hbar1(const SpinRep& rep, const Kinematics& kin, double l) {
    const double s = kin.sigma_of_ell(l);
    return std::cos(s) * rep.J1 - std::sin(s) * rep.J2;
}

// Hbar2(ell) = J1 + nu(ell) J3, the rotating-frame Hamiltonian.
inline Matrix hbar2(const SpinRep& rep, const Kinematics& kin, double l) {
    const double nu = kin.nu_of_ell(l);
    if (!std::isfinite(nu))
        throw std::domain_error("hbar2: nu is indeterminate at the requested arc length");
    return rep.J1 + nu * rep.J3;
}

// --- solvability classification --------------------------------------------

enum class Solvability { lemma1, lemma2, adiabatic_exact, none };

inline const char* solvability_name(Solvability s) {
    switch (s) {
        case Solvability::lemma1: return "lemma1";
        case Solvability::lemma2: return "lemma2";
        case Solvability::adiabatic_exact: return "adiabatic_exact";
        case Solvability::none: return "none";
    }
    return "unknown";
}

struct SolvabilityReport {
    Solvability classification = Solvability::none;
    double nu0 = 0.0;              // least-squares fit of r - r* against omega
    double residual = 0.0;         // RMS of r - r* - nu0 omega over moving nodes
    double lemma1_residual = 0.0;  // RMS of r - r* over moving nodes
    double rms_r = 0.0;
    double threshold = 0.0;
    double min_r_star = 0.0;
    double negative_r_star_fraction = 0.0;
    bool support_contiguous = true;
    std::string note;
};

inline constexpr double kDefaultLemmaRelTol = 1e-7;

inline SolvabilityReport solvability_check(const Kinematics& kin,
                                           double rel_threshold = kDefaultLemmaRelTol) {
    SolvabilityReport rep;
    const int n = kin.grid_size();
    double num = 0.0, den = 0.0, rr = 0.0;
    int moving = 0, neg = 0;
    rep.min_r_star = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
        if (!kin.node_moving(k)) continue;
        const double d = kin.node_r(k) - kin.node_rstar(k);
        num += d * kin.node_omega(k);
        den += kin.node_omega(k) * kin.node_omega(k);
        rr += kin.node_r(k) * kin.node_r(k);
        rep.min_r_star = std::min(rep.min_r_star, kin.node_rstar(k));
        if (kin.node_rstar(k) < 0.0) ++neg;
        ++moving;
    }
    rep.support_contiguous = kin.support_contiguous();

    if (moving == 0) {
        rep.classification = Solvability::adiabatic_exact;
        rep.min_r_star = 0.0;
        rep.note = "direction is stationary; the adiabatic propagator is exact";
        return rep;
    }

    rep.nu0 = num / den;
    rep.rms_r = std::sqrt(rr / moving);
    rep.negative_r_star_fraction = static_cast<double>(neg) / moving;
    double acc1 = 0.0, acc2 = 0.0;
    for (int k = 0; k < n; ++k) {
        if (!kin.node_moving(k)) continue;
        const double d = kin.node_r(k) - kin.node_rstar(k);
        acc1 += d * d;
        const double e = d - rep.nu0 * kin.node_omega(k);
        acc2 += e * e;
    }
    rep.lemma1_residual = std::sqrt(acc1 / moving);
    rep.residual = std::sqrt(acc2 / moving);
    rep.threshold = rel_threshold * std::max(rep.rms_r, 1e-300);

    if (!kin.support_contiguous()) {
        rep.classification = Solvability::none;
        rep.note = "omega vanishes on interior intervals; sigma drifts there and the "
                   "exact family does not apply";
    } else if (moving < 5) {
        rep.classification = Solvability::none;
        rep.note = "too few moving samples to classify";
    } else if (rep.lemma1_residual <= rep.threshold) {
        rep.classification = Solvability::lemma1;
    } else if (rep.residual <= rep.threshold) {
        rep.classification = Solvability::lemma2;
    } else {
        rep.classification = Solvability::none;
    }
    return rep;
}

class SolvabilityError : public std::domain_error {
public:
    SolvabilityError(const std::string& what, SolvabilityReport rep)
        : std::domain_error(what), report(std::move(rep)) {}
    SolvabilityReport report;
};

// --- exact evolution operators ----------------------------------------------

struct ExactOptions {
    double rel_threshold = kDefaultLemmaRelTol;
    bool force = false;  // run the formula even when classification fails
};

// Evolution operator for sigma = const (exact when r = r* on the motion
// support; also exact for curves that never move, where it collapses to U0).
inline Propagator exact_u_lemma1(const SpinRep& rep, const Kinematics& kin, double t,
                                 ExactOptions opt = {}) {
    SolvabilityReport sr = solvability_check(kin, opt.rel_threshold);
    const bool ok = sr.classification == Solvability::lemma1 ||
                    sr.classification == Solvability::adiabatic_exact;
    if (!ok && !opt.force)
        throw SolvabilityError(
            "exact_u_lemma1: curve does not satisfy r = r* (residual " +
                std::to_string(sr.lemma1_residual) + " > threshold " + std::to_string(sr.threshold) + ")",
            sr);

    const CurveState s0 = kin.curve().at(0.0);
    const Matrix w0 = rotation_w(rep, s0.theta, s0.phi);
    const double se = kin.sigma_at_onset();
    const double l = kin.ell(t);
    const Matrix axis = std::cos(se) * rep.J1 - std::sin(se) * rep.J2;
    const Matrix u0 = adiabatic_u0(rep, kin, t).U;

    Propagator p;
    p.method = Method::lemma1;
    p.U = u0 * w0 * hermitian_exp(axis, l) * w0.adjoint();
    p.meta.residual = sr.lemma1_residual;
    p.meta.nu0 = 0.0;
    p.meta.unitarity_defect = unitarity_defect(p.U);
    if (opt.force && !ok) p.meta.note = "forced: " + std::string(solvability_name(sr.classification));
    return p;
}

// Evolution operator for sigma affine in arc length with slope nu0 (exact
// when r = r* + nu0 omega). The e^{i sigma J3} factors use sigma as a
// function of arc length so stationary head/tail segments stay exact.
inline Propagator exact_u_lemma2(const SpinRep& rep, const Kinematics& kin, double nu0, double t,
                                 ExactOptions opt = {}) {
    SolvabilityReport sr = solvability_check(kin, opt.rel_threshold);
    const bool ok = sr.classification == Solvability::lemma1 ||
                    sr.classification == Solvability::lemma2 ||
                    sr.classification == Solvability::adiabatic_exact;
    if (!ok && !opt.force)
        throw SolvabilityError(
            "exact_u_lemma2: curve does not satisfy r = r* + nu0 omega (residual " +
                std::to_string(sr.residual) + " > threshold " + std::to_string(sr.threshold) + ")",
            sr);

    const CurveState s0 = kin.curve().at(0.0);
    const Matrix w0 = rotation_w(rep, s0.theta, s0.phi);
    const double l = kin.ell(t);
    const double sig_t = kin.sigma_supported(t);
    const double sig_0 = kin.sigma_at_onset();
    const Matrix u0 = adiabatic_u0(rep, kin, t).U;
    const Matrix b2_t = exp_j3(rep, -sig_t);              // e^{+i sigma J3}
    const Matrix b2_0_dag = exp_j3(rep, sig_0);           // (e^{+i sigma0 J3})^dag
    const Matrix b3 = hermitian_exp(rep.J1 + nu0 * rep.J3, l);

    Propagator p;
    p.method = Method::lemma2;
    p.U = u0 * w0 * b2_t * b3 * b2_0_dag * w0.adjoint();
    p.meta.residual = sr.residual;
    p.meta.nu0 = nu0;
    p.meta.unitarity_defect = unitarity_defect(p.U);
    if (opt.force && !ok) p.meta.note = "forced: " + std::string(solvability_name(sr.classification));
    return p;
}

// Affine-sigma evolution with the nu0 fitted by the solvability check.
inline Propagator exact_u_lemma2_fitted(const SpinRep& rep, const Kinematics& kin, double t,
                                        ExactOptions opt = {}) {
    const SolvabilityReport sr = solvability_check(kin, opt.rel_threshold);
    return exact_u_lemma2(rep, kin, sr.nu0, t, opt);
}

// Large-omega approximation: evolve with the affine machinery at nu0 = 0 and
// record max |nu| along the motion as the error indicator. Exact when r = r*.
inline Propagator approx_large_omega(const SpinRep& rep, const Kinematics& kin, double t) {
    if (!kin.any_motion())
        throw std::domain_error("approx_large_omega: direction never moves");
    const CurveState s0 = kin.curve().at(0.0);
    const Matrix w0 = rotation_w(rep, s0.theta, s0.phi);
    const double l = kin.ell(t);
    const Matrix u0 = adiabatic_u0(rep, kin, t).U;
    const Matrix b2_t = exp_j3(rep, -kin.sigma_supported(t));
    const Matrix b2_0_dag = exp_j3(rep, kin.sigma_at_onset());
    const Matrix b3 = hermitian_exp(rep.J1, l);

    double max_nu = 0.0;
    for (int k = 0; k < kin.grid_size(); ++k) {
        if (!kin.node_moving(k)) continue;
        const double nu = (kin.node_r(k) - kin.node_rstar(k)) / kin.node_omega(k);
        max_nu = std::max(max_nu, std::abs(nu));
    }

    Propagator p;
    p.method = Method::large_omega;
    p.U = u0 * w0 * b2_t * b3 * b2_0_dag * w0.adjoint();
    p.meta.max_abs_nu = max_nu;
    p.meta.unitarity_defect = unitarity_defect(p.U);
    return p;
}

// --- diagnostics -------------------------------------------------------------

// max-norm of i dU/dt - H(t) U(t), with the centered 3-point derivative so
// the residual of an exact propagator shrinks at exactly 2nd order in fd_step.
inline double schrodinger_residual(const MatrixSampler& h, const MatrixSampler& u, double t,
                                   double fd_step) {
    const Matrix udot = (u(t + fd_step) - u(t - fd_step)) / (2.0 * fd_step);
    return max_norm(Complex(0.0, 1.0) * udot - h(t) * u(t));
}

// Largest off-diagonal adiabatic coupling along the curve; the adiabatic
// approximation is trustworthy only when this is small.
inline double max_offdiagonal_coupling(const SpinRep& rep, const Kinematics& kin, int samples = 201) {
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double t = kin.duration() * k / (samples - 1);
        Matrix a = adiabatic_coupling(rep, kin.curve(), t);
        a.diagonal().setZero();
        worst = std::max(worst, max_norm(a));
    }
    return worst;
}

}  // namespace spinprop
