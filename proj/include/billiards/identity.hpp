#pragma once

#include "billiards/boundary.hpp"
#include "billiards/parallel.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace billiards {

namespace detail {

inline double radius_at_endpoint(const BoundaryCurve& curve, double s)
{
    const double k = curve.curvature(s);
    if (std::abs(k) < 1e-14)
        throw Error(ErrorKind::FlatEndpoint, "radius of curvature is infinite at a flat point");
    return 1.0 / k;
}

} // namespace detail

/// rho(s0) sin(alpha0) + rho(s1) sin(alpha1) - (1 + c) l(s0, s1).
inline double residual_R(const BoundaryCurve& curve, double s0, double s1, double c)
{
    const Chord ch = chord(curve, s0, s1);
    const double r0 = detail::radius_at_endpoint(curve, ch.s0), r1 = detail::radius_at_endpoint(curve, ch.s1);
    return r0 * std::sin(ch.alpha0) + r1 * std::sin(ch.alpha1) - (1.0 + c) * ch.l;
}

// ---- radius of curvature, two ways ----

/// Curvature as d(theta)/ds of the tangent angle, 5-point stencil.
inline double curvature_by_differences(const BoundaryCurve& curve, double s, double h)
{
    const Vec2 t = curve.tangent(s);
    auto angle = [&](double ds) {
        const Vec2 u = curve.tangent(s + ds);
        return std::atan2(cross(t, u), t.dot(u));
    };
    return (-angle(2 * h) + 8 * angle(h) - 8 * angle(-h) + angle(-2 * h)) / (12 * h);
}

/// d(rho)/ds by the same stencil applied to rho.
inline double radius_derivative_by_differences(const BoundaryCurve& curve, double s, double h)
{
    auto r = [&](double ds) { return 1.0 / curve.curvature(s + ds); };
    return (-r(2 * h) + 8 * r(h) - 8 * r(-h) + r(-2 * h)) / (12 * h);
}

struct RadiusCheck {
    double analytic = 0.0;
    double by_differences = 0.0;
    double relative_error = 0.0;
    bool skipped = false; // stencil would cross a corner or a piece junction
};

/// Compares the analytic rho with the finite-difference one at h = 1e-4 L.
inline RadiusCheck radius_cross_check(const BoundaryCurve& curve, double s)
{
    RadiusCheck r;
    const double h = 1e-4 * curve.length();
    if (!curve.is_smooth_loop()) {
        double start = 0.0;
        for (const auto& a : curve.arcs()) {
            if (std::abs(wrapped_diff(s, start, curve.length())) <= 2.5 * h) {
                r.skipped = true;
                return r;
            }
            start += a.length;
        }
    }
    r.analytic = detail::radius_at_endpoint(curve, s);
    r.by_differences = 1.0 / curvature_by_differences(curve, s, h);
    r.relative_error = std::abs(r.analytic - r.by_differences) / std::abs(r.analytic);
    return r;
}

// ---- grid scan ----

struct ArcWindow {
    double s_begin = 0.0;
    double s_end = 0.0; // may exceed the table length; taken modulo L
};

struct HeatmapCell {
    double s0 = 0.0;
    double s1 = 0.0;
    double residual = std::numeric_limits<double>::quiet_NaN(); // NaN where no valid chord exists
};

struct WindowRadius {
    double min = HUGE_VAL;
    double max = -HUGE_VAL;
};

struct IdentityScan {
    double c = 0.0;
    std::size_t n0 = 0;
    std::size_t n1 = 0;
    double max_abs = 0.0;
    double min_abs = HUGE_VAL;
    std::size_t evaluated = 0;
    std::size_t skipped = 0; // coincident, tangential or exterior chords
    std::vector<HeatmapCell> heatmap; // row-major in s0
    WindowRadius radius0, radius1;    // rho statistics per window
    double radius_check_max = 0.0;    // worst analytic vs finite-difference rho
    bool radius_verified = false;     // radius_check_max <= 1e-7
};

inline constexpr double radius_agreement_tol = 1e-7;

/// Evaluates residual_R on an n0 x n1 grid of window pairs (cell centres).
/// rho is cross-checked at every grid coordinate before residuals are reported.
inline IdentityScan identity_scan(const BoundaryCurve& curve, ArcWindow w0, ArcWindow w1, double c, std::size_t n0,
                                  std::size_t n1, unsigned jobs = 1)
{
    if (n0 == 0 || n1 == 0)
        throw Error(ErrorKind::InvalidInput, "identity scan needs a nonempty grid");
    const double L = curve.length();
    for (const ArcWindow& w : {w0, w1})
        if (!(std::isfinite(w.s_begin) && std::isfinite(w.s_end) && w.s_end > w.s_begin && w.s_end - w.s_begin <= L * (1 + 1e-12)))
            throw Error(ErrorKind::InvalidInput, "arc window must satisfy begin < end <= begin + L");
    auto coord = [L](ArcWindow w, std::size_t i, std::size_t n) {
        return wrap(w.s_begin + (static_cast<double>(i) + 0.5) * (w.s_end - w.s_begin) / static_cast<double>(n), L);
    };
    IdentityScan out;
    out.c = c;
    out.n0 = n0;
    out.n1 = n1;

    auto radius_stats = [&](ArcWindow w, std::size_t n, WindowRadius& stats) {
        for (std::size_t i = 0; i < n; ++i) {
            const double s = coord(w, i, n);
            const RadiusCheck rc = radius_cross_check(curve, s);
            if (rc.skipped)
                continue;
            out.radius_check_max = std::max(out.radius_check_max, rc.relative_error);
            stats.min = std::min(stats.min, rc.analytic);
            stats.max = std::max(stats.max, rc.analytic);
        }
    };
    radius_stats(w0, n0, out.radius0);
    radius_stats(w1, n1, out.radius1);
    out.radius_verified = out.radius_check_max <= radius_agreement_tol;
    if (!out.radius_verified)
        throw Error(ErrorKind::InvalidInput, "analytic and finite-difference radii of curvature disagree");

    out.heatmap = parallel_map<HeatmapCell>(n0 * n1, jobs, [&](std::size_t k) {
        HeatmapCell cell{coord(w0, k / n1, n0), coord(w1, k % n1, n1)};
        try {
            cell.residual = residual_R(curve, cell.s0, cell.s1, c);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::FlatEndpoint)
                throw;
        }
        return cell;
    });
    for (const auto& cell : out.heatmap) {
        if (std::isnan(cell.residual)) {
            ++out.skipped;
            continue;
        }
        ++out.evaluated;
        out.max_abs = std::max(out.max_abs, std::abs(cell.residual));
        out.min_abs = std::min(out.min_abs, std::abs(cell.residual));
    }
    return out;
}

// ---- differentiated identities ----

struct IdentityDifferentials {
    /// rho'(s0) + cos(a0)/l rho(s0) - cos(a1)/l rho(s1) + c cot(a0)
    double eq0 = 0.0;
    /// rho'(s1) - cos(a1)/l rho(s1) + cos(a0)/l rho(s0) - c cot(a1)
    double eq1 = 0.0;
    /// The expression for rho'(s1) obtained by differentiating eq0 in s1,
    /// multiplied through by l cos(a1) so that it stays finite at a1 = pi/2:
    /// l cos(a1) rho'(s1) + cos(a0 - a1) rho(s0) - cos(2 a1) rho(s1) - l sin(a1) [1 - c / sin^2(a0)]
    double eq2 = 0.0;
};

inline IdentityDifferentials differential_identity_check(const BoundaryCurve& curve, double s0, double s1,
                                                         double c = 0.0)
{
    const Chord ch = chord(curve, s0, s1);
    const double r0 = detail::radius_at_endpoint(curve, ch.s0), r1 = detail::radius_at_endpoint(curve, ch.s1);
    const double dr0 = curve.radius_derivative(ch.s0), dr1 = curve.radius_derivative(ch.s1);
    const double a0 = ch.alpha0, a1 = ch.alpha1, l = ch.l;
    IdentityDifferentials d;
    d.eq0 = dr0 + std::cos(a0) / l * r0 - std::cos(a1) / l * r1 + c / std::tan(a0);
    d.eq1 = dr1 - std::cos(a1) / l * r1 + std::cos(a0) / l * r0 - c / std::tan(a1);
    const double s0sq = std::sin(a0) * std::sin(a0);
    d.eq2 = l * std::cos(a1) * dr1 + std::cos(a0 - a1) * r0 - std::cos(2 * a1) * r1 -
            l * std::sin(a1) * (1.0 - c / s0sq);
    return d;
}

} // namespace billiards
