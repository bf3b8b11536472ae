// kinematics.hpp — derived quantities along a field curve.
//
// With omega^2 = thetadot^2 + sin^2(theta) phidot^2 the projection of the
// curve onto the unit sphere moves at speed omega; xi = atan2(thetadot,
// sin(theta) phidot) is the local heading, ell(t) = int omega dt the arc
// length, and the phase bookkeeping uses
//
//   delta = -int r dt,   gamma = -int (1 - cos theta) phidot dt,
//   alpha = delta + gamma,
//   sigma = -alpha - phi + xi            (kept continuous, not wrapped),
//   r*    = cos(theta) phidot - xidot    (sigma is constant iff r = r*),
//   nu    = (r - r*) / omega = d sigma / d ell.
//
// Everything is precomputed on a uniform grid at construction; queries
// interpolate with cubic Hermite tracks whose node slopes are exact where a
// closed form exists (alpha, ell) and finite-difference otherwise. Where
// omega vanishes the heading is indeterminate: xi holds its last defined
// value, the nodes are flagged, and r*/nu report NaN there.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spinprop/field_curve.hpp"
#include "spinprop/numerics.hpp"

namespace spinprop {

struct PhaseRecord {
    double delta = 0.0;
    double gamma = 0.0;
    double alpha = 0.0;
};

struct KinematicsOptions {
    int grid_points = 0;        // 0: derived from curve.sample_count()
    double omega_floor = -1.0;  // < 0: auto, 1e-12 * max(1, peak omega)
};

class Kinematics {
public:
    explicit Kinematics(FieldCurve curve, KinematicsOptions opt = {}) : curve_(std::move(curve)) {
        build(opt);
    }

    const FieldCurve& curve() const { return curve_; }
    double duration() const { return T_; }
    int grid_size() const { return n_; }
    double grid_step() const { return h_; }
    double omega_floor() const { return floor_; }

    double omega(double t) const { return omega_.eval(t); }
    double xi(double t) const { return xi_.eval(t); }
    double ell(double t) const { return ell_.eval(t); }
    double total_ell() const { return ell_.value.back(); }
    double delta(double t) const { return delta_.eval(t); }
    double gamma(double t) const { return gamma_.eval(t); }
    double alpha(double t) const { return alpha_.eval(t); }
    PhaseRecord phases(double t) const { return {delta(t), gamma(t), alpha(t)}; }

    double sigma(double t) const { return sigma_.eval(t); }
    // sigmadot = r - cos(theta) phidot + xidot (= r - r* where defined).
    double sigma_rate(double t) const { return sigma_.eval_slope(t); }
    double sigma0() const { return sigma_.value.front(); }

    // r*(t); NaN where the surrounding grid cell has omega at the floor.
    double r_star(double t) const {
        if (!cell_moving(t)) return std::numeric_limits<double>::quiet_NaN();
        return rstar_.eval(t);
    }

    // nu(t) = (r - r*)/omega; NaN where indeterminate.
    double nu(double t) const {
        if (!cell_moving(t)) return std::numeric_limits<double>::quiet_NaN();
        return nu_.eval(t);
    }

    // --- motion support ---------------------------------------------------

    bool any_motion() const { return any_motion_; }
    // True when the nodes with omega above the floor form one contiguous run.
    bool support_contiguous() const { return contiguous_; }
    double motion_onset() const { return t_on_; }
    double motion_end() const { return t_off_; }

    // sigma as a function of arc length, extended constantly across the
    // stationary head/tail where ell is frozen: sigma(clamp(t, on, off)).
    double sigma_supported(double t) const {
        if (!any_motion_) return sigma0();
        return sigma_.eval(std::clamp(t, t_on_, t_off_));
    }
    double sigma_at_onset() const { return any_motion_ ? sigma_.eval(t_on_) : sigma0(); }

    // Invert ell(t) on the motion support. Throws when the curve never moves.
    double t_of_ell(double l) const {
        if (!any_motion_)
            throw std::domain_error("t_of_ell: arc length is not invertible (omega == 0 throughout)");
        if (l <= 0.0) return t_on_;
        if (l >= total_ell()) return t_off_;
        return invert_monotone(ell_, l, t_on_, t_off_);
    }
    double sigma_of_ell(double l) const { return sigma_.eval(t_of_ell(l)); }
    double nu_of_ell(double l) const { return nu(t_of_ell(l)); }

    // --- grid access (solvability fits, field design) ----------------------

    double node_t(int k) const { return k * h_; }
    double node_r(int k) const { return r_[k]; }
    double node_theta(int k) const { return theta_[k]; }
    double node_phi(int k) const { return phi_[k]; }
    double node_omega(int k) const { return omega_.value[k]; }
    double node_rstar(int k) const { return rstar_.value[k]; }
    double node_sigma(int k) const { return sigma_.value[k]; }
    double node_ell(int k) const { return ell_.value[k]; }
    bool node_moving(int k) const { return moving_[k] != 0; }

    // Intervals (in time) where omega sits at the floor.
    std::vector<std::pair<double, double>> zero_omega_intervals() const {
        std::vector<std::pair<double, double>> out;
        int k = 0;
        while (k < n_) {
            if (!moving_[k]) {
                const int start = k;
                while (k < n_ && !moving_[k]) ++k;
                out.emplace_back(node_t(start), node_t(k - 1));
            } else {
                ++k;
            }
        }
        return out;
    }

private:
    void build(const KinematicsOptions& opt) {
        T_ = curve_.duration();
        int n = opt.grid_points > 0 ? opt.grid_points : std::max(curve_.sample_count(), 129);
        if (n % 2 == 0) ++n;
        n_ = n;
        h_ = T_ / (n - 1);

        r_.resize(n); theta_.resize(n); phi_.resize(n);
        std::vector<double> thetadot(n), phidot(n), om(n);
        for (int k = 0; k < n; ++k) {
            const CurveState s = curve_.at(node_t(k));
            r_[k] = s.r; theta_[k] = s.theta; phi_[k] = s.phi;
            thetadot[k] = s.thetadot; phidot[k] = s.phidot;
            const double sp = std::sin(s.theta) * s.phidot;
            om[k] = std::hypot(s.thetadot, sp);
        }
        double peak = 0.0;
        for (double w : om) peak = std::max(peak, w);
        floor_ = opt.omega_floor >= 0.0 ? opt.omega_floor : 1e-12 * std::max(1.0, peak);

        moving_.resize(n);
        int first = -1, last = -1;
        for (int k = 0; k < n; ++k) {
            moving_[k] = om[k] > floor_ ? 1 : 0;
            if (moving_[k]) { if (first < 0) first = k; last = k; }
        }
        any_motion_ = first >= 0;
        on_idx_ = any_motion_ ? first : 0;
        off_idx_ = any_motion_ ? last : n - 1;
        t_on_ = node_t(on_idx_);
        t_off_ = node_t(off_idx_);
        contiguous_ = any_motion_;
        for (int k = on_idx_; k <= off_idx_ && contiguous_; ++k)
            if (!moving_[k]) contiguous_ = false;

        // Heading: principal atan2 where defined, unwrapped along the grid,
        // held constant across stationary nodes.
        std::vector<double> xi(n, 0.0);
        double prev = 0.0;
        bool have_prev = false;
        for (int k = 0; k < n; ++k) {
            if (moving_[k]) {
                const double raw = std::atan2(thetadot[k], std::sin(theta_[k]) * phidot[k]);
                xi[k] = have_prev ? prev + wrap_angle(raw - prev) : raw;
                prev = xi[k];
                have_prev = true;
            } else {
                xi[k] = prev;  // backfilled below if motion starts later
            }
        }
        if (any_motion_ && on_idx_ > 0)
            for (int k = 0; k < on_idx_; ++k) xi[k] = xi[on_idx_];

        std::vector<double> xidot = fd_slopes_uniform(xi, h_);
        for (int k = 0; k < n; ++k)
            if (!moving_[k]) xidot[k] = 0.0;

        // Quadratures with midpoint Simpson against the curve evaluator.
        auto omega_of = [this](double t) {
            const CurveState s = curve_.at(t);
            return std::hypot(s.thetadot, std::sin(s.theta) * s.phidot);
        };
        auto minus_r = [this](double t) { return -curve_.at(t).r; };
        auto gamma_rate = [this](double t) {
            const CurveState s = curve_.at(t);
            return -(1.0 - std::cos(s.theta)) * s.phidot;
        };
        std::vector<double> ell_v = cumulative_simpson(omega_of, 0.0, T_, n);
        std::vector<double> delta_v = cumulative_simpson(minus_r, 0.0, T_, n);
        std::vector<double> gamma_v = cumulative_simpson(gamma_rate, 0.0, T_, n);
        std::vector<double> alpha_v(n), alpha_d(n), delta_d(n), gamma_d(n), ell_d(n);
        for (int k = 0; k < n; ++k) {
            alpha_v[k] = delta_v[k] + gamma_v[k];
            delta_d[k] = -r_[k];
            gamma_d[k] = -(1.0 - std::cos(theta_[k])) * phidot[k];
            alpha_d[k] = delta_d[k] + gamma_d[k];
            ell_d[k] = om[k];
        }

        // sigma = -alpha - phi + xi and its rate r - cos(theta) phidot + xidot.
        std::vector<double> sigma_v(n), sigma_d(n), rstar_v(n), nu_v(n, 0.0);
        for (int k = 0; k < n; ++k) {
            sigma_v[k] = -alpha_v[k] - phi_[k] + xi[k];
            rstar_v[k] = std::cos(theta_[k]) * phidot[k] - xidot[k];
            sigma_d[k] = r_[k] - rstar_v[k];
            if (moving_[k]) nu_v[k] = sigma_d[k] / om[k];
        }

        omega_ = make_track_fd(0.0, h_, std::move(om));
        xi_ = make_track(0.0, h_, std::move(xi), std::move(xidot));
        ell_ = make_track(0.0, h_, std::move(ell_v), std::move(ell_d));
        delta_ = make_track(0.0, h_, std::move(delta_v), std::move(delta_d));
        gamma_ = make_track(0.0, h_, std::move(gamma_v), std::move(gamma_d));
        alpha_ = make_track(0.0, h_, std::move(alpha_v), std::move(alpha_d));
        sigma_ = make_track(0.0, h_, std::move(sigma_v), std::move(sigma_d));
        rstar_ = make_track_fd(0.0, h_, std::move(rstar_v));
        nu_ = make_track_fd(0.0, h_, std::move(nu_v));
    }

    bool cell_moving(double t) const {
        if (t <= 0.0) return moving_.front() != 0;
        if (t >= T_) return moving_.back() != 0;
        const int k = std::clamp(static_cast<int>(t / h_), 0, n_ - 2);
        return moving_[k] && moving_[k + 1];
    }

    FieldCurve curve_;
    double T_ = 1.0, h_ = 1.0, floor_ = 0.0;
    int n_ = 0;
    std::vector<double> r_, theta_, phi_;
    std::vector<std::uint8_t> moving_;
    bool any_motion_ = false, contiguous_ = false;
    int on_idx_ = 0, off_idx_ = 0;
    double t_on_ = 0.0, t_off_ = 0.0;
    UniformTrack omega_, xi_, ell_, delta_, gamma_, alpha_, sigma_, rstar_, nu_;
};

// --- field design (solvability inverse) ------------------------------------

struct DesignReport {
    double nu0 = 0.0;
    double min_r = 0.0;
    double residual_rms = 0.0;  // of r - r* - nu0 omega on the output curve
    std::vector<std::pair<double, double>> nonpositive_r_intervals;
    std::string note;
};

// Build the field magnitude r = r* + nu0 * omega over a direction curve, so
// the result satisfies the constant-nu solvability condition. The direction's
// own magnitude is ignored. Directions that never move are rejected; nodes
// where omega is indeterminate mid-curve are rejected as well, since r* is
// undefined there. Intervals where the designed magnitude is non-positive
// are reported; such curves fail validation and would have to be traversed
// time-reversed instead.
inline FieldCurve design_field(const FieldCurve& direction, double nu0,
                               DesignReport* report = nullptr, KinematicsOptions opt = {}) {
    Kinematics kin(direction, opt);
    if (!kin.any_motion())
        throw std::domain_error("design_field: direction has omega == 0 throughout");
    const int n = kin.grid_size();
    for (int k = 0; k < n; ++k)
        if (!kin.node_moving(k))
            throw std::domain_error("design_field: direction has omega == 0 at t = " +
                                    std::to_string(kin.node_t(k)) + "; r* is undefined there");

    std::vector<double> r(n);
    for (int k = 0; k < n; ++k) r[k] = kin.node_rstar(k) + nu0 * kin.node_omega(k);

    DesignReport rep;
    rep.nu0 = nu0;
    rep.min_r = *std::min_element(r.begin(), r.end());
    bool in_bad = false;
    double bad_start = 0.0;
    for (int k = 0; k < n; ++k) {
        const bool bad = !(r[k] > 0.0);
        if (bad && !in_bad) { in_bad = true; bad_start = kin.node_t(k); }
        if (!bad && in_bad) { in_bad = false; rep.nonpositive_r_intervals.emplace_back(bad_start, kin.node_t(k - 1)); }
    }
    if (in_bad) rep.nonpositive_r_intervals.emplace_back(bad_start, kin.node_t(n - 1));
    if (!rep.nonpositive_r_intervals.empty())
        rep.note = "designed magnitude is non-positive on part of the curve; "
                   "consider the time-reversed traversal";

    auto r_track = std::make_shared<UniformTrack>(make_track_fd(0.0, kin.grid_step(), std::move(r)));
    FieldCurve dir = direction;
    FieldCurve out("designed:" + direction.kind(), direction.duration(), n,
                   [dir, r_track](double t) {
                       CurveState s = dir.at(t);
                       s.r = r_track->eval(t);
                       s.rdot = r_track->eval_slope(t);
                       return s;
                   });

    if (report) {
        // Honest residual: re-derive the kinematics of the output curve.
        Kinematics check(out, opt);
        double acc = 0.0;
        int cnt = 0;
        for (int k = 0; k < check.grid_size(); ++k) {
            if (!check.node_moving(k)) continue;
            const double res = check.node_r(k) - check.node_rstar(k) - nu0 * check.node_omega(k);
            acc += res * res;
            ++cnt;
        }
        rep.residual_rms = cnt > 0 ? std::sqrt(acc / cnt) : 0.0;
        *report = rep;
    }
    return out;
}

}  // namespace spinprop
