// field_curve.hpp — magnetic-field curves C(t) = (r, theta, phi)(t) with
// first-derivative access, a preset catalog, sampled-table curves, and
// validation against the patch assumptions (r > 0, theta bounded away from
// the negative z-axis).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spinprop/numerics.hpp"
#include "spinprop/su2.hpp"

namespace spinprop {

inline constexpr int kDefaultCurveSamples = 2001;

struct CurveState {
    double r = 0.0;
    double theta = 0.0;
    double phi = 0.0;
    double rdot = 0.0;
    double thetadot = 0.0;
    double phidot = 0.0;
};

class FieldCurve {
public:
    using Evaluator = std::function<CurveState(double)>;

    FieldCurve() = default;
    FieldCurve(std::string kind, double duration, int sample_count, Evaluator eval)
        : kind_(std::move(kind)), duration_(duration),
          sample_count_(std::max(sample_count, 3)), eval_(std::move(eval)) {
        if (!(duration_ > 0.0)) throw std::invalid_argument("FieldCurve: duration must be positive");
        if (!eval_) throw std::invalid_argument("FieldCurve: evaluator required");
    }

    CurveState at(double t) const { return eval_(t); }
    Spherical field(double t) const {
        const CurveState s = eval_(t);
        return {s.r, s.theta, s.phi};
    }

    double duration() const { return duration_; }
    int sample_count() const { return sample_count_; }
    const std::string& kind() const { return kind_; }

    // --- preset catalog -------------------------------------------------

    // Constant-latitude circle: theta = theta0, phi = phi0 + omega0 t.
    static FieldCurve cone(double theta0, double omega0, double r, double duration,
                           double phi0 = 0.0, int samples = kDefaultCurveSamples) {
        return FieldCurve("cone", duration, samples, [=](double t) {
            return CurveState{r, theta0, phi0 + omega0 * t, 0.0, 0.0, omega0};
        });
    }

    // Cone whose magnitude satisfies r = r* + nu0 * omega in closed form,
    // r = (cos theta0 + nu0 sin theta0) omega0.
    static FieldCurve cone_solvable(double theta0, double omega0, double nu0, double duration,
                                    double phi0 = 0.0, int samples = kDefaultCurveSamples) {
        const double r = (std::cos(theta0) + nu0 * std::sin(theta0)) * omega0;
        if (!(r > 0.0))
            throw std::domain_error("cone_solvable: designed magnitude is not positive; "
                                    "consider the time-reversed traversal");
        FieldCurve c = cone(theta0, omega0, r, duration, phi0, samples);
        c.kind_ = "cone_solvable";
        return c;
    }

    // Equatorial circle at constant angular rate.
    static FieldCurve planar_circle(double omega0, double r, double duration,
                                    double phi0 = 0.0, int samples = kDefaultCurveSamples) {
        return FieldCurve("planar_circle", duration, samples, [=](double t) {
            return CurveState{r, 0.5 * kPi, phi0 + omega0 * t, 0.0, 0.0, omega0};
        });
    }

    // Equatorial curve with a modulated sweep rate, phi = phi0 + omega0 t +
    // amp sin(freq t), and constant magnitude.
    static FieldCurve planar_wobble(double omega0, double amp, double freq, double r,
                                    double duration, double phi0 = 0.0,
                                    int samples = kDefaultCurveSamples) {
        return FieldCurve("planar_wobble", duration, samples, [=](double t) {
            return CurveState{r, 0.5 * kPi, phi0 + omega0 * t + amp * std::sin(freq * t),
                              0.0, 0.0, omega0 + amp * freq * std::cos(freq * t)};
        });
    }

    // Same direction as planar_wobble but with magnitude proportional to the
    // sweep speed, r = nu0 * |phidot| (the exactly solvable planar family).
    static FieldCurve planar_wobble_proportional(double omega0, double amp, double freq,
                                                 double nu0, double duration, double phi0 = 0.0,
                                                 int samples = kDefaultCurveSamples) {
        return FieldCurve("planar_wobble_proportional", duration, samples, [=](double t) {
            const double pd = omega0 + amp * freq * std::cos(freq * t);
            const double pdd = -amp * freq * freq * std::sin(freq * t);
            const double sign = pd >= 0.0 ? 1.0 : -1.0;
            return CurveState{nu0 * sign * pd, 0.5 * kPi, phi0 + omega0 * t + amp * std::sin(freq * t),
                              nu0 * sign * pdd, 0.0, pd};
        });
    }

    // Great-circle sweep at fixed azimuth: theta = theta_start + rate t.
    static FieldCurve meridian(double theta_start, double theta_rate, double r, double duration,
                               double phi0 = 0.0, int samples = kDefaultCurveSamples) {
        return FieldCurve("meridian", duration, samples, [=](double t) {
            return CurveState{r, theta_start + theta_rate * t, phi0, 0.0, theta_rate, 0.0};
        });
    }

    // Both angles advancing linearly.
    static FieldCurve spiral(double theta0, double theta_rate, double omega0, double r,
                             double duration, double phi0 = 0.0,
                             int samples = kDefaultCurveSamples) {
        return FieldCurve("spiral", duration, samples, [=](double t) {
            return CurveState{r, theta0 + theta_rate * t, phi0 + omega0 * t, 0.0, theta_rate, omega0};
        });
    }

    // Fixed direction, constant magnitude.
    static FieldCurve stationary(double theta0, double phi0, double r, double duration,
                                 int samples = 513) {
        return FieldCurve("stationary", duration, samples, [=](double t) {
            (void)t;
            return CurveState{r, theta0, phi0, 0.0, 0.0, 0.0};
        });
    }

    // Equatorial field with a caller-supplied phase law (used to realize
    // rotating x-y Hamiltonians in tests).
    static FieldCurve rotating_xy(std::function<double(double)> phase,
                                  std::function<double(double)> phase_dot, double r,
                                  double duration, int samples = kDefaultCurveSamples) {
        return FieldCurve("rotating_xy", duration, samples,
                          [r, phase = std::move(phase), phase_dot = std::move(phase_dot)](double t) {
                              return CurveState{r, 0.5 * kPi, phase(t), 0.0, 0.0, phase_dot(t)};
                          });
    }

    static FieldCurve from_functions(std::string kind, double duration, int samples,
                                     Evaluator eval) {
        return FieldCurve(std::move(kind), duration, samples, std::move(eval));
    }

    // Sampled curve from a strictly increasing time column. Node slopes come
    // from 3-point finite differences; evaluation between nodes is cubic
    // Hermite, and queries beyond the table extrapolate linearly.
    static FieldCurve sampled(std::vector<double> t, std::vector<double> r,
                              std::vector<double> theta, std::vector<double> phi,
                              std::string kind = "sampled");

private:
    std::string kind_;
    double duration_ = 1.0;
    int sample_count_ = kDefaultCurveSamples;
    Evaluator eval_;
};

namespace detail {

// One scalar column of a sampled table with Hermite evaluation on a
// possibly non-uniform grid.
struct SampledColumn {
    std::vector<double> t, v, d;

    void build_slopes() {
        const std::size_t n = t.size();
        d.assign(n, 0.0);
        if (n < 2) return;
        if (n == 2) {
            d[0] = d[1] = (v[1] - v[0]) / (t[1] - t[0]);
            return;
        }
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i0 = k == 0 ? 0 : (k == n - 1 ? n - 3 : k - 1);
            const double nodes[3] = {t[i0], t[i0 + 1], t[i0 + 2]};
            const auto w = fd_weights(t[k], std::span<const double>(nodes, 3), 1);
            d[k] = w[0] * v[i0] + w[1] * v[i0 + 1] + w[2] * v[i0 + 2];
        }
    }

    std::pair<double, double> eval(double x) const {
        if (x <= t.front()) return {v.front() + d.front() * (x - t.front()), d.front()};
        if (x >= t.back()) return {v.back() + d.back() * (x - t.back()), d.back()};
        const auto it = std::upper_bound(t.begin(), t.end(), x);
        const std::size_t k = static_cast<std::size_t>(it - t.begin()) - 1;
        const double h = t[k + 1] - t[k];
        const double s = (x - t[k]) / h;
        const double s2 = s * s, s3 = s2 * s;
        const double val = (2 * s3 - 3 * s2 + 1) * v[k] + (s3 - 2 * s2 + s) * h * d[k] +
                           (-2 * s3 + 3 * s2) * v[k + 1] + (s3 - s2) * h * d[k + 1];
        const double der = ((6 * s2 - 6 * s) * v[k] + (-6 * s2 + 6 * s) * v[k + 1]) / h +
                           (3 * s2 - 4 * s + 1) * d[k] + (3 * s2 - 2 * s) * d[k + 1];
        return {val, der};
    }
};

}  // namespace detail

inline FieldCurve FieldCurve::sampled(std::vector<double> t, std::vector<double> r,
                                      std::vector<double> theta, std::vector<double> phi,
                                      std::string kind) {
    const std::size_t n = t.size();
    if (n < 3) throw std::invalid_argument("FieldCurve::sampled: need at least 3 rows");
    if (r.size() != n || theta.size() != n || phi.size() != n)
        throw std::invalid_argument("FieldCurve::sampled: column lengths differ");
    for (std::size_t k = 1; k < n; ++k)
        if (!(t[k] > t[k - 1]))
            throw std::invalid_argument("FieldCurve::sampled: times must be strictly increasing");
    if (std::abs(t.front()) > 1e-12 * std::max(1.0, std::abs(t.back())))
        throw std::invalid_argument("FieldCurve::sampled: table must start at t = 0");

    auto cols = std::make_shared<std::array<detail::SampledColumn, 3>>();
    (*cols)[0] = {t, std::move(r), {}};
    (*cols)[1] = {t, std::move(theta), {}};
    (*cols)[2] = {t, std::move(phi), {}};
    for (auto& c : *cols) c.build_slopes();

    const double duration = t.back();
    return FieldCurve(std::move(kind), duration, static_cast<int>(n), [cols](double x) {
        const auto [rv, rd] = (*cols)[0].eval(x);
        const auto [tv, td] = (*cols)[1].eval(x);
        const auto [pv, pd] = (*cols)[2].eval(x);
        return CurveState{rv, tv, pv, rd, td, pd};
    });
}

// --- validation ---------------------------------------------------------

struct ValidationIssue {
    std::string what;
    double t = 0.0;
    double value = 0.0;
};

struct ValidationReport {
    bool passed = true;
    double min_r = 0.0;
    double t_min_r = 0.0;
    double max_theta = 0.0;
    double t_max_theta = 0.0;
    double theta_margin = 1e-6;
    std::vector<ValidationIssue> issues;
};

// Scan the curve on a grid and check the patch assumptions: r(t) > 0 and
// theta(t) in [0, pi - margin].
inline ValidationReport validate(const FieldCurve& curve, double theta_margin = 1e-6,
                                 int grid = 0) {
    ValidationReport rep;
    rep.theta_margin = theta_margin;
    int n = grid > 0 ? grid : std::max(curve.sample_count(), 1001);
    if (n % 2 == 0) ++n;
    const double h = curve.duration() / (n - 1);

    rep.min_r = std::numeric_limits<double>::infinity();
    rep.max_theta = -std::numeric_limits<double>::infinity();
    bool r_fail = false, theta_hi_fail = false, theta_lo_fail = false;
    double t_r_fail = 0.0, t_th_fail = 0.0, t_tl_fail = 0.0, th_lo_val = 0.0;
    for (int k = 0; k < n; ++k) {
        const double t = k * h;
        const CurveState s = curve.at(t);
        if (s.r < rep.min_r) { rep.min_r = s.r; rep.t_min_r = t; }
        if (s.theta > rep.max_theta) { rep.max_theta = s.theta; rep.t_max_theta = t; }
        if (!(s.r > 0.0) && !r_fail) { r_fail = true; t_r_fail = t; }
        if (s.theta > kPi - theta_margin && !theta_hi_fail) { theta_hi_fail = true; t_th_fail = t; }
        if (s.theta < 0.0 && !theta_lo_fail) { theta_lo_fail = true; t_tl_fail = t; th_lo_val = s.theta; }
    }
    if (r_fail) {
        rep.passed = false;
        rep.issues.push_back({"field magnitude r <= 0 (curve passes through the origin)",
                              t_r_fail, rep.min_r});
    }
    if (theta_hi_fail) {
        rep.passed = false;
        rep.issues.push_back({"theta exceeds pi - margin (curve meets the negative z-axis patch boundary)",
                              t_th_fail, rep.max_theta});
    }
    if (theta_lo_fail) {
        rep.passed = false;
        rep.issues.push_back({"theta below 0", t_tl_fail, th_lo_val});
    }
    return rep;
}

}  // namespace spinprop
