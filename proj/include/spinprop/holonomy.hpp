// holonomy.hpp — SU(2) parallel transport along base-manifold paths.
//
// A gauge potential A and a path x(t) pull back to the field components
// R^a(t) = xdot^mu A^a_mu[x(t)], turning the transport equation into a dipole
// Schroedinger problem. Transport dispatches to the exact propagators when
// the pulled-back curve classifies as solvable and the spherical patch
// assumptions hold, and otherwise integrates the Cartesian Hamiltonian
// R(t).J directly (no patch switching is attempted).

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spinprop/field_curve.hpp"
#include "spinprop/kinematics.hpp"
#include "spinprop/numerics.hpp"
#include "spinprop/oracle.hpp"
#include "spinprop/propagators.hpp"
#include "spinprop/su2.hpp"

namespace spinprop {

using Matrix3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;

class GaugePotential {
public:
    using Evaluator = std::function<Matrix3X(const Eigen::VectorXd&)>;

    GaugePotential(std::string kind, int base_dim, Evaluator eval)
        : kind_(std::move(kind)), dim_(base_dim), eval_(std::move(eval)) {
        if (dim_ < 1) throw std::invalid_argument("GaugePotential: base dimension must be >= 1");
        if (!eval_) throw std::invalid_argument("GaugePotential: evaluator required");
    }

    Matrix3X at(const Eigen::VectorXd& x) const {
        Matrix3X a = eval_(x);
        if (a.rows() != 3 || a.cols() != dim_)
            throw std::invalid_argument("GaugePotential: evaluator returned wrong shape");
        if (!a.allFinite())
            throw std::domain_error("GaugePotential: non-finite components at queried point");
        return a;
    }

    int base_dim() const { return dim_; }
    const std::string& kind() const { return kind_; }

    static GaugePotential constant(const Matrix3X& a) {
        return GaugePotential("constant", static_cast<int>(a.cols()),
                              [a](const Eigen::VectorXd&) { return a; });
    }

    static GaugePotential zero(int base_dim) {
        return GaugePotential("zero", base_dim, [base_dim](const Eigen::VectorXd&) {
            return Matrix3X::Zero(3, base_dim).eval();
        });
    }

    // D = 2, single su(2) direction: A^3 = c (-y, x), A^1 = A^2 = 0. Along a
    // circle about the origin the pullback is the constant (0, 0, c rho^2 w).
    static GaugePotential abelian_circulation(double c) {
        return GaugePotential("abelian_circulation", 2, [c](const Eigen::VectorXd& x) {
            Matrix3X a = Matrix3X::Zero(3, 2);
            a(2, 0) = -c * x[1];
            a(2, 1) = c * x[0];
            return a;
        });
    }

    // D = 3 hedgehog: A^a_mu = kappa eps_{a mu nu} x^nu.
    static GaugePotential hedgehog(double kappa) {
        return GaugePotential("hedgehog", 3, [kappa](const Eigen::VectorXd& x) {
            Matrix3X a = Matrix3X::Zero(3, 3);
            a(0, 1) = kappa * x[2];
            a(0, 2) = -kappa * x[1];
            a(1, 0) = -kappa * x[2];
            a(1, 2) = kappa * x[0];
            a(2, 0) = kappa * x[1];
            a(2, 1) = -kappa * x[0];
            return a;
        });
    }

private:
    std::string kind_;
    int dim_;
    Evaluator eval_;
};

class BasePath {
public:
    using Evaluator = std::function<void(double, Eigen::VectorXd&, Eigen::VectorXd&)>;

    BasePath(std::string kind, int dim, double duration, Evaluator eval,
             std::vector<double> breakpoints = {})
        : kind_(std::move(kind)), dim_(dim), duration_(duration), eval_(std::move(eval)),
          breakpoints_(std::move(breakpoints)) {
        if (dim_ < 1) throw std::invalid_argument("BasePath: dimension must be >= 1");
        if (!(duration_ > 0.0)) throw std::invalid_argument("BasePath: duration must be positive");
        if (!eval_) throw std::invalid_argument("BasePath: evaluator required");
        closed_ = (position(0.0) - position(duration_)).norm() <= 1e-9;
    }

    void eval(double t, Eigen::VectorXd& x, Eigen::VectorXd& xdot) const { eval_(t, x, xdot); }
    Eigen::VectorXd position(double t) const {
        Eigen::VectorXd x(dim_), v(dim_);
        eval_(t, x, v);
        return x;
    }
    Eigen::VectorXd velocity(double t) const {
        Eigen::VectorXd x(dim_), v(dim_);
        eval_(t, x, v);
        return v;
    }

    int dim() const { return dim_; }
    double duration() const { return duration_; }
    bool closed() const { return closed_; }
    const std::string& kind() const { return kind_; }
    // Interior times where the velocity may jump (segment joints, corners).
    const std::vector<double>& breakpoints() const { return breakpoints_; }

    static BasePath segment(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double duration) {
        if (a.size() != b.size()) throw std::invalid_argument("BasePath::segment: dimension mismatch");
        const Eigen::VectorXd v = (b - a) / duration;
        return BasePath("segment", static_cast<int>(a.size()), duration,
                        [a, v](double t, Eigen::VectorXd& x, Eigen::VectorXd& xd) {
                            x = a + v * t;
                            xd = v;
                        });
    }

    static BasePath circle(const Eigen::Vector2d& center, double radius, double duration,
                           int turns = 1) {
        if (!(radius > 0.0)) throw std::invalid_argument("BasePath::circle: radius must be positive");
        const double w = kTwoPi * turns / duration;
        return BasePath("circle", 2, duration,
                        [center, radius, w](double t, Eigen::VectorXd& x, Eigen::VectorXd& xd) {
                            x.resize(2);
                            xd.resize(2);
                            x[0] = center[0] + radius * std::cos(w * t);
                            x[1] = center[1] + radius * std::sin(w * t);
                            xd[0] = -radius * w * std::sin(w * t);
                            xd[1] = radius * w * std::cos(w * t);
                        });
    }

    // Axis-aligned rectangle traversed counterclockwise from `corner`.
    static BasePath rectangle(const Eigen::Vector2d& corner, double width, double height,
                              double duration) {
        if (!(width > 0.0) || !(height > 0.0))
            throw std::invalid_argument("BasePath::rectangle: sides must be positive");
        const double per = 2.0 * (width + height);
        const double speed = per / duration;
        std::vector<double> brk = {duration * width / per, duration * (width + height) / per,
                                   duration * (2.0 * width + height) / per};
        return BasePath("rectangle", 2, duration,
                        [corner, width, height, per, speed](double t, Eigen::VectorXd& x,
                                                            Eigen::VectorXd& xd) {
                            x.resize(2);
                            xd.resize(2);
                            double s = std::clamp(speed * t, 0.0, per);
                            if (s <= width) {
                                x << corner[0] + s, corner[1];
                                xd << speed, 0.0;
                            } else if (s <= width + height) {
                                x << corner[0] + width, corner[1] + (s - width);
                                xd << 0.0, speed;
                            } else if (s <= 2.0 * width + height) {
                                x << corner[0] + width - (s - width - height), corner[1] + height;
                                xd << -speed, 0.0;
                            } else {
                                x << corner[0], corner[1] + height - (s - 2.0 * width - height);
                                xd << 0.0, -speed;
                            }
                        },
                        std::move(brk));
    }

    // Hermite interpolation of a sampled table of positions.
    static BasePath sampled(const std::vector<double>& t,
                            const std::vector<Eigen::VectorXd>& points) {
        if (t.size() < 3) throw std::invalid_argument("BasePath::sampled: need at least 3 rows");
        if (points.size() != t.size())
            throw std::invalid_argument("BasePath::sampled: column mismatch");
        const int dim = static_cast<int>(points.front().size());
        auto cols = std::make_shared<std::vector<detail::SampledColumn>>();
        cols->resize(dim);
        for (int d = 0; d < dim; ++d) {
            (*cols)[d].t = t;
            (*cols)[d].v.resize(t.size());
            for (std::size_t k = 0; k < t.size(); ++k) (*cols)[d].v[k] = points[k][d];
            (*cols)[d].build_slopes();
        }
        return BasePath("sampled", dim, t.back(),
                        [cols, dim](double tt, Eigen::VectorXd& x, Eigen::VectorXd& xd) {
                            x.resize(dim);
                            xd.resize(dim);
                            for (int d = 0; d < dim; ++d) {
                                const auto [v, dv] = (*cols)[d].eval(tt);
                                x[d] = v;
                                xd[d] = dv;
                            }
                        });
    }

    static BasePath concatenation(const BasePath& first, const BasePath& second) {
        if (first.dim() != second.dim())
            throw std::invalid_argument("BasePath::concatenation: dimension mismatch");
        if ((first.position(first.duration()) - second.position(0.0)).norm() > 1e-9)
            throw std::invalid_argument("BasePath::concatenation: endpoints do not meet");
        const double t1 = first.duration();
        const double total = t1 + second.duration();
        std::vector<double> brk = first.breakpoints();
        brk.push_back(t1);
        for (double b : second.breakpoints()) brk.push_back(t1 + b);
        return BasePath("concat(" + first.kind() + "," + second.kind() + ")", first.dim(), total,
                        [first, second, t1](double t, Eigen::VectorXd& x, Eigen::VectorXd& xd) {
                            if (t <= t1)
                                first.eval(t, x, xd);
                            else
                                second.eval(t - t1, x, xd);
                        },
                        std::move(brk));
    }

    static BasePath reversed(const BasePath& p) {
        const double T = p.duration();
        std::vector<double> brk;
        for (auto it = p.breakpoints().rbegin(); it != p.breakpoints().rend(); ++it)
            brk.push_back(T - *it);
        return BasePath("reversed(" + p.kind() + ")", p.dim(), T,
                        [p, T](double t, Eigen::VectorXd& x, Eigen::VectorXd& xd) {
                            p.eval(T - t, x, xd);
                            xd = -xd;
                        },
                        std::move(brk));
    }

    // Start a closed loop at parameter `shift` instead of 0.
    static BasePath with_basepoint(const BasePath& loop, double shift) {
        if (!loop.closed())
            throw std::invalid_argument("BasePath::with_basepoint: path must be closed");
        const double T = loop.duration();
        std::vector<double> brk;
        brk.push_back(T - shift);
        for (double b : loop.breakpoints())
            brk.push_back(std::fmod(b - shift + T, T));
        return BasePath("shifted(" + loop.kind() + ")", loop.dim(), T,
                        [loop, shift, T](double t, Eigen::VectorXd& x, Eigen::VectorXd& xd) {
                            double s = t + shift;
                            if (s >= T) s -= T;
                            loop.eval(s, x, xd);
                        },
                        std::move(brk));
    }

private:
    std::string kind_;
    int dim_;
    double duration_;
    Evaluator eval_;
    std::vector<double> breakpoints_;
    bool closed_ = false;
};

// R^a(t) = xdot^mu A^a_mu[x(t)].
inline Eigen::Vector3d pullback_field(const GaugePotential& a, const BasePath& path, double t) {
    Eigen::VectorXd x(path.dim()), xd(path.dim());
    path.eval(t, x, xd);
    return a.at(x) * xd;
}

struct PullbackInfo {
    double min_r = 0.0;
    double max_theta = 0.0;
    bool field_vanishes = false;  // |R| below floor somewhere
    bool patch_ok = true;         // usable as a spherical curve
    std::string note;
};

namespace detail {

// Derivative of the pulled-back field by a 5-point stencil shifted to stay
// inside [0, T].
inline Eigen::Vector3d pullback_rate(const GaugePotential& a, const BasePath& path, double t,
                                     double h) {
    double base = t - 2.0 * h;
    base = std::clamp(base, 0.0, path.duration() - 4.0 * h);
    double nodes[5];
    for (int k = 0; k < 5; ++k) nodes[k] = base + k * h;
    const auto w = fd_weights(t, std::span<const double>(nodes, 5), 1);
    Eigen::Vector3d d = Eigen::Vector3d::Zero();
    for (int k = 0; k < 5; ++k) d += w[k] * pullback_field(a, path, nodes[k]);
    return d;
}

}  // namespace detail

struct TransportOptions {
    int curve_samples = 4001;
    long oracle_steps = 200000;
    double lemma_rel_threshold = kDefaultLemmaRelTol;
    double theta_margin = 1e-6;
    double r_floor = 1e-9;
    bool force_oracle = false;
};

// Spherical view of the pulled-back field with continuous angle tracking.
// The azimuth is anchored to an unwrapped node value per grid cell so the
// returned phi is pointwise exact yet free of branch jumps.
inline FieldCurve pullback_curve(const GaugePotential& a, const BasePath& path,
                                 const TransportOptions& opt = {}, PullbackInfo* info = nullptr) {
    const double T = path.duration();
    int n = std::max(opt.curve_samples, 33);
    if (n % 2 == 0) ++n;
    const double h = T / (n - 1);
    const double fd_h = std::min(1e-5 * T, 0.25 * h);

    std::vector<double> phi_nodes(n);
    PullbackInfo pi;
    pi.min_r = std::numeric_limits<double>::infinity();
    pi.max_theta = 0.0;
    {
        std::vector<double> wrapped(n);
        for (int k = 0; k < n; ++k) {
            const Eigen::Vector3d r = pullback_field(a, path, k * h);
            const double mag = r.norm();
            pi.min_r = std::min(pi.min_r, mag);
            const double rho = std::hypot(r[0], r[1]);
            pi.max_theta = std::max(pi.max_theta, std::atan2(rho, r[2]));
            wrapped[k] = (rho > 0.0) ? std::atan2(r[1], r[0]) : 0.0;
        }
        phi_nodes = unwrap_angles(wrapped);
    }
    if (pi.min_r <= opt.r_floor) {
        pi.field_vanishes = true;
        pi.patch_ok = false;
        pi.note = "pulled-back field vanishes along the path";
    } else if (pi.max_theta > kPi - opt.theta_margin) {
        pi.patch_ok = false;
        pi.note = "pulled-back field meets the negative z-axis patch boundary";
    }
    if (info) *info = pi;

    auto anchors = std::make_shared<std::vector<double>>(std::move(phi_nodes));
    const GaugePotential pot = a;
    const BasePath pth = path;
    return FieldCurve("pullback:" + a.kind() + ":" + path.kind(), T, n,
                      [pot, pth, anchors, h, fd_h, n](double t) {
                          const Eigen::Vector3d r = pullback_field(pot, pth, t);
                          const Eigen::Vector3d rd = detail::pullback_rate(pot, pth, t, fd_h);
                          const double mag = r.norm();
                          const double rho = std::hypot(r[0], r[1]);
                          const double theta = std::atan2(rho, r[2]);
                          const int k = std::clamp(static_cast<int>(t / h), 0, n - 1);
                          const double raw = (rho > 0.0) ? std::atan2(r[1], r[0]) : (*anchors)[k];
                          const double phi = (*anchors)[k] + wrap_angle(raw - (*anchors)[k]);
                          CurveState s;
                          s.r = mag;
                          s.theta = theta;
                          s.phi = phi;
                          s.rdot = mag > 0.0 ? r.dot(rd) / mag : 0.0;
                          const double rho_dot = rho > 0.0 ? (r[0] * rd[0] + r[1] * rd[1]) / rho : 0.0;
                          s.thetadot = mag > 0.0 ? (rho_dot * r[2] - rho * rd[2]) / (mag * mag) : 0.0;
                          s.phidot = rho > 0.0 ? (r[0] * rd[1] - r[1] * rd[0]) / (rho * rho) : 0.0;
                          return s;
                      });
}

namespace detail {

// Cartesian oracle integration split at the path's breakpoints so velocity
// jumps never sit inside an integration cell.
inline Propagator cartesian_transport(const SpinRep& rep, const GaugePotential& a,
                                      const BasePath& path, const TransportOptions& opt) {
    MatrixSampler h = [&rep, a, path](double t) {
        const Eigen::Vector3d r = pullback_field(a, path, t);
        return Matrix(r[0] * rep.J1 + r[1] * rep.J2 + r[2] * rep.J3);
    };
    std::vector<double> cuts = path.breakpoints();
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    cuts.push_back(path.duration());

    const double T = path.duration();
    Matrix u = Matrix::Identity(rep.dim, rep.dim);
    double t0 = 0.0;
    long total_steps = 0;
    double defect = 0.0;
    for (double t1 : cuts) {
        if (!(t1 > t0 + 1e-15 * T)) continue;
        oracle::IntegrationConfig cfg;
        cfg.steps = std::max<long>(1, std::lround(opt.oracle_steps * (t1 - t0) / T));
        const Propagator piece = oracle::integrate(h, t0, t1, cfg);
        u = piece.U * u;
        total_steps += piece.meta.steps;
        defect = std::max(defect, piece.meta.unitarity_defect);
        t0 = t1;
    }
    Propagator p;
    p.method = Method::oracle;
    p.U = std::move(u);
    p.meta.steps = total_steps;
    p.meta.unitarity_defect = std::max(defect, unitarity_defect(p.U));
    return p;
}

}  // namespace detail

// Holonomy g[C] for transport along the full path. Dispatches to the exact
// propagators when possible; the meta note records the engine and why.
inline Propagator transport(const SpinRep& rep, const GaugePotential& a, const BasePath& path,
                            const TransportOptions& opt = {}) {
    if (a.base_dim() != path.dim())
        throw std::invalid_argument("transport: potential and path dimensions differ");

    PullbackInfo info;
    const FieldCurve curve = pullback_curve(a, path, opt, &info);

    if (opt.force_oracle || !info.patch_ok) {
        Propagator p = detail::cartesian_transport(rep, a, path, opt);
        p.meta.note = "engine=oracle(cartesian)";
        if (!info.patch_ok) p.meta.note += "; " + info.note;
        return p;
    }

    const ValidationReport vr = validate(curve, opt.theta_margin);
    if (!vr.passed) {
        Propagator p = detail::cartesian_transport(rep, a, path, opt);
        p.meta.note = "engine=oracle(cartesian); pullback curve failed validation";
        return p;
    }

    Kinematics kin(curve, {opt.curve_samples, -1.0});
    const SolvabilityReport sr = solvability_check(kin, opt.lemma_rel_threshold);
    ExactOptions eopt;
    eopt.rel_threshold = opt.lemma_rel_threshold;
    switch (sr.classification) {
        case Solvability::adiabatic_exact: {
            Propagator p = adiabatic_u0(rep, kin, path.duration());
            p.meta.note = "engine=adiabatic_exact (stationary pullback)";
            p.meta.residual = sr.residual;
            return p;
        }
        case Solvability::lemma1: {
            Propagator p = exact_u_lemma1(rep, kin, path.duration(), eopt);
            p.meta.note = "engine=lemma1";
            return p;
        }
        case Solvability::lemma2: {
            Propagator p = exact_u_lemma2(rep, kin, sr.nu0, path.duration(), eopt);
            p.meta.note = "engine=lemma2";
            return p;
        }
        case Solvability::none:
            break;
    }
    Propagator p = detail::cartesian_transport(rep, a, path, opt);
    p.meta.note = "engine=oracle(cartesian); pullback not exactly solvable (residual " +
                  std::to_string(sr.residual) + ")";
    return p;
}

// Wilson loop tr g[C] for a closed path.
inline Complex wilson_loop(const SpinRep& rep, const GaugePotential& a, const BasePath& path,
                           const TransportOptions& opt = {}) {
    if (!path.closed())
        throw std::domain_error("wilson_loop: path is not closed");
    return transport(rep, a, path, opt).U.trace();
}

}  // namespace spinprop
