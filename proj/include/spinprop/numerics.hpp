// numerics.hpp — small numerical kernels shared across the library:
// finite-difference weights, cubic Hermite tracks on uniform grids,
// cumulative Simpson quadrature, and angle bookkeeping.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace spinprop {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Wrap an angle to the principal interval (-pi, pi].
inline double wrap_angle(double x) {
    double w = std::remainder(x, kTwoPi);
    if (w <= -kPi) w += kTwoPi;
    return w;
}

// Unwrap a sampled angle series: consecutive steps are taken along the
// shortest angular difference, so the result is continuous when the grid
// resolves the motion.
inline std::vector<double> unwrap_angles(std::span<const double> wrapped) {
    std::vector<double> out(wrapped.size());
    if (wrapped.empty()) return out;
    out[0] = wrapped[0];
    for (std::size_t k = 1; k < wrapped.size(); ++k)
        out[k] = out[k - 1] + wrap_angle(wrapped[k] - wrapped[k - 1]);
    return out;
}

// Fornberg weights for the m-th derivative at x0 from function values on the
// given nodes. Nodes must be distinct; accuracy is the usual order
// (#nodes - m) for well-separated nodes.
inline std::vector<double> fd_weights(double x0, std::span<const double> nodes, int order) {
    const int n = static_cast<int>(nodes.size());
    if (n <= order)
        throw std::invalid_argument("fd_weights: need more nodes than derivative order");
    const int m = order;
    std::vector<double> c(static_cast<std::size_t>(n) * (m + 1), 0.0);
    auto at = [&](int i, int k) -> double& { return c[static_cast<std::size_t>(i) * (m + 1) + k]; };
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    at(0, 0) = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        double c5 = c4;
        c4 = nodes[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    at(i, k) = c1 * (k * at(i - 1, k - 1) - c5 * at(i - 1, k)) / c2;
                at(i, 0) = -c1 * c5 * at(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k)
                at(j, k) = (c4 * at(j, k) - k * at(j, k - 1)) / c3;
            at(j, 0) = c4 * at(j, 0) / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = at(i, m);
    return w;
}

// First-derivative estimates at every node of a uniformly sampled series:
// central differences inside, one-sided 2nd-order stencils at the ends.
inline std::vector<double> fd_slopes_uniform(std::span<const double> v, double h) {
    const std::size_t n = v.size();
    std::vector<double> d(n, 0.0);
    if (n < 2 || h <= 0.0) return d;
    if (n == 2) {
        d[0] = d[1] = (v[1] - v[0]) / h;
        return d;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (v[k + 1] - v[k - 1]) / (2.0 * h);
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    return d;
}

// Cumulative integral of f over a uniform grid of `nodes` points spanning
// [t0, t1]. Each cell uses Simpson's rule with a midpoint evaluation, so the
// node values carry the composite O(h^4) accuracy.
inline std::vector<double> cumulative_simpson(const std::function<double(double)>& f,
                                              double t0, double t1, int nodes) {
    if (nodes < 2) throw std::invalid_argument("cumulative_simpson: need at least 2 nodes");
    const double h = (t1 - t0) / (nodes - 1);
    std::vector<double> acc(nodes, 0.0);
    double f_left = f(t0);
    for (int k = 0; k + 1 < nodes; ++k) {
        const double ta = t0 + k * h;
        const double f_mid = f(ta + 0.5 * h);
        const double f_right = f(ta + h);
        acc[k + 1] = acc[k] + (h / 6.0) * (f_left + 4.0 * f_mid + f_right);
        f_left = f_right;
    }
    return acc;
}

// Piecewise cubic Hermite interpolant on a uniform grid. Holds node values
// and node slopes; evaluation outside the grid extrapolates linearly from
// the nearest endpoint.
struct UniformTrack {
    double t0 = 0.0;
    double h = 1.0;
    std::vector<double> value;
    std::vector<double> slope;

    int cells() const { return static_cast<int>(value.size()) - 1; }
    double t_end() const { return t0 + h * cells(); }

    double eval(double t) const {
        const int n = static_cast<int>(value.size());
        if (n == 0) return 0.0;
        if (n == 1) return value[0];
        if (t <= t0) return value[0] + slope[0] * (t - t0);
        if (t >= t_end()) return value[n - 1] + slope[n - 1] * (t - t_end());
        int k = static_cast<int>((t - t0) / h);
        k = std::clamp(k, 0, n - 2);
        const double s = (t - (t0 + k * h)) / h;
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        const double h10 = s3 - 2.0 * s2 + s;
        const double h01 = -2.0 * s3 + 3.0 * s2;
        const double h11 = s3 - s2;
        return h00 * value[k] + h10 * h * slope[k] + h01 * value[k + 1] + h11 * h * slope[k + 1];
    }

    double eval_slope(double t) const {
        const int n = static_cast<int>(value.size());
        if (n < 2) return 0.0;
        if (t <= t0) return slope[0];
        if (t >= t_end()) return slope[n - 1];
        int k = static_cast<int>((t - t0) / h);
        k = std::clamp(k, 0, n - 2);
        const double s = (t - (t0 + k * h)) / h;
        const double s2 = s * s;
        const double g00 = (6.0 * s2 - 6.0 * s) / h;
        const double g10 = 3.0 * s2 - 4.0 * s + 1.0;
        const double g01 = (-6.0 * s2 + 6.0 * s) / h;
        const double g11 = 3.0 * s2 - 2.0 * s;
        return g00 * value[k] + g10 * slope[k] + g01 * value[k + 1] + g11 * slope[k + 1];
    }
};

inline UniformTrack make_track(double t0, double h, std::vector<double> values,
                               std::vector<double> slopes) {
    UniformTrack tr;
    tr.t0 = t0;
    tr.h = h;
    tr.value = std::move(values);
    tr.slope = std::move(slopes);
    return tr;
}

inline UniformTrack make_track_fd(double t0, double h, std::vector<double> values) {
    std::vector<double> slopes = fd_slopes_uniform(values, h);
    return make_track(t0, h, std::move(values), std::move(slopes));
}

// Invert a non-decreasing Hermite track: find t with track(t) = y inside
// [t_lo, t_hi]. Bisection with a Newton polish; the track must be monotone
// on the bracket.
inline double invert_monotone(const UniformTrack& tr, double y, double t_lo, double t_hi) {
    double lo = t_lo, hi = t_hi;
    double f_lo = tr.eval(lo) - y;
    double f_hi = tr.eval(hi) - y;
    if (f_lo > 0.0 && f_lo < 1e-12 * std::max(1.0, std::abs(y))) return lo;
    if (f_hi < 0.0 && -f_hi < 1e-12 * std::max(1.0, std::abs(y))) return hi;
    if (f_lo > 0.0 || f_hi < 0.0)
        throw std::domain_error("invert_monotone: target outside track range");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        double t = mid;
        const double d = tr.eval_slope(mid);
        if (d > 0.0) {
            const double newton = mid - (tr.eval(mid) - y) / d;
            if (newton > lo && newton < hi) t = newton;
        }
        const double f = tr.eval(t) - y;
        if (std::abs(f) <= 1e-14 * std::max(1.0, std::abs(y)) || hi - lo < 1e-15 * std::max(1.0, std::abs(t_hi)))
            return t;
        if (f > 0.0) hi = t; else lo = t;
    }
    return 0.5 * (lo + hi);
}

}  // namespace spinprop
