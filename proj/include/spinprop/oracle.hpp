// oracle.hpp — brute-force time-ordered integration of H(t) U = i dU/dt.
//
// The ground truth everything else is checked against, so it is kept as
// simple as possible: a product of spectral exponentials, each factor exactly
// unitary. Two second-order schemes with different time sampling are
// provided so the oracle can cross-check itself:
//
//   midpoint_exponential:  exp(-i H(t_k + dt/2) dt)
//   magnus2:               exp(-i (H(t_k) + H(t_{k+1}))/2 dt)

#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinprop/propagators.hpp"
#include "spinprop/su2.hpp"

namespace spinprop {
namespace oracle {

enum class Scheme { midpoint_exponential, magnus2 };

inline const char* scheme_name(Scheme s) {
    return s == Scheme::midpoint_exponential ? "midpoint_exponential" : "magnus2";
}

struct IntegrationConfig {
    long steps = 100000;
    Scheme scheme = Scheme::midpoint_exponential;
    long unitarity_check_interval = 1000;
};

// Integrate over [t0, t1]. Samples whose Hermiticity defect exceeds the
// hermitian_exp tolerance are rejected (it throws).
inline Propagator integrate(const MatrixSampler& h, double t0, double t1,
                            const IntegrationConfig& cfg = {}) {
    if (cfg.steps < 1) throw std::invalid_argument("oracle::integrate: steps must be >= 1");
    if (!(t1 > t0)) throw std::invalid_argument("oracle::integrate: need t1 > t0");
    const double dt = (t1 - t0) / cfg.steps;

    Matrix h_right;  // magnus2 reuses the right node sample of the previous step
    Matrix u;
    double worst_defect = 0.0;
    for (long k = 0; k < cfg.steps; ++k) {
        const double ta = t0 + k * dt;
        Matrix step_h;
        if (cfg.scheme == Scheme::midpoint_exponential) {
            step_h = h(ta + 0.5 * dt);
        } else {
            if (k == 0) h_right = h(ta);
            Matrix left = std::move(h_right);
            h_right = h(ta + dt);
            step_h = 0.5 * (left + h_right);
        }
        const Matrix factor = hermitian_exp(step_h, dt);
        u = (k == 0) ? factor : Matrix(factor * u);
        if (cfg.unitarity_check_interval > 0 &&
            (k % cfg.unitarity_check_interval == cfg.unitarity_check_interval - 1 ||
             k == cfg.steps - 1)) {
            worst_defect = std::max(worst_defect, unitarity_defect(u));
        }
    }

    Propagator p;
    p.method = Method::oracle;
    p.U = std::move(u);
    p.meta.steps = cfg.steps;
    p.meta.unitarity_defect = worst_defect;
    p.meta.note = scheme_name(cfg.scheme);
    return p;
}

inline Propagator integrate(const MatrixSampler& h, double duration,
                            const IntegrationConfig& cfg = {}) {
    return integrate(h, 0.0, duration, cfg);
}

// Integrate once and record U at each requested time (ascending, in [0, T]).
// Each requested time ends a sub-segment integrated with steps prorated from
// cfg.steps, so snapshots land exactly on the requested times.
inline std::vector<Matrix> integrate_snapshots(const MatrixSampler& h, double duration,
                                               const std::vector<double>& times,
                                               const IntegrationConfig& cfg = {}) {
    std::vector<Matrix> out;
    out.reserve(times.size());
    double t_prev = 0.0;
    Matrix u;
    bool have_u = false;
    for (double t : times) {
        if (t < t_prev - 1e-12 || t > duration * (1.0 + 1e-12))
            throw std::invalid_argument("integrate_snapshots: times must ascend within [0, T]");
        if (t > t_prev + 1e-15) {
            IntegrationConfig seg = cfg;
            seg.steps = std::max<long>(1, std::lround(cfg.steps * (t - t_prev) / duration));
            const Matrix piece = integrate(h, t_prev, t, seg).U;
            u = have_u ? Matrix(piece * u) : piece;
            have_u = true;
            t_prev = t;
        }
        if (!have_u) {
            const Matrix sample = h(0.0);
            u = Matrix::Identity(sample.rows(), sample.cols());
            have_u = true;
        }
        out.push_back(u);
    }
    return out;
}

struct OrderEstimate {
    double order = 0.0;
    bool reliable = false;
    double diff_coarse = 0.0;  // ||U_N - U_2N||
    double diff_fine = 0.0;    // ||U_2N - U_4N||
    std::string note;
};

// Richardson estimate of the scheme's convergence order from runs at N, 2N,
// and 4N steps. Reports ~2 on smooth Hamiltonians; flagged unreliable when
// the differences sit at round-off (exact cases) or the order degrades
// (non-smooth input).
inline OrderEstimate convergence_order(const MatrixSampler& h, double duration, long base_steps,
                                       Scheme scheme = Scheme::midpoint_exponential) {
    if (base_steps < 100)
        throw std::invalid_argument("convergence_order: base_steps must be >= 100");
    IntegrationConfig cfg;
    cfg.scheme = scheme;
    cfg.steps = base_steps;
    const Matrix u1 = integrate(h, duration, cfg).U;
    cfg.steps = 2 * base_steps;
    const Matrix u2 = integrate(h, duration, cfg).U;
    cfg.steps = 4 * base_steps;
    const Matrix u4 = integrate(h, duration, cfg).U;

    OrderEstimate est;
    est.diff_coarse = max_norm(u1 - u2);
    est.diff_fine = max_norm(u2 - u4);
    const double floor = 1e3 * std::numeric_limits<double>::epsilon() * u1.rows();
    if (est.diff_fine < floor || est.diff_coarse < floor) {
        est.note = "differences at round-off; scheme is exact on this input";
        return est;
    }
    est.order = std::log2(est.diff_coarse / est.diff_fine);
    est.reliable = est.order > 1.7 && est.order < 2.5;
    if (!est.reliable)
        est.note = "order estimate off nominal 2; Hamiltonian may be non-smooth";
    return est;
}

}  // namespace oracle
}  // namespace spinprop
