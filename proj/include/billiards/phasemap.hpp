#pragma once

#include "billiards/boundary.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace billiards {

/// (footpoint arclength, direction angle against the positive tangent).
struct PhasePoint {
    double s = 0.0;
    double alpha = 0.0;
};

/// Time reversal (s, alpha) -> (s, pi - alpha).
inline PhasePoint reversed(PhasePoint p) { return {p.s, pi - p.alpha}; }

/// Distance in (s, alpha) with s taken modulo the table length.
inline double phase_distance(PhasePoint a, PhasePoint b, double length)
{
    return std::max(std::abs(wrapped_diff(a.s, b.s, length)), std::abs(a.alpha - b.alpha));
}

/// DF in (s, alpha) coordinates: rows (s1, alpha1), columns (s, alpha).
using Jacobian2 = Mat2;

struct StepResult {
    PhasePoint next;
    Chord chord;
    double kappa0 = 0.0;
    double kappa1 = 0.0;
};

inline void check_phase_point(const BoundaryCurve& curve, PhasePoint p)
{
    if (!(p.alpha >= tangential_tolerance && p.alpha <= pi - tangential_tolerance))
        throw Error(ErrorKind::TangentialInput, "direction angle must lie strictly inside (0, pi)");
    if (!std::isfinite(p.s))
        throw Error(ErrorKind::InvalidInput, "footpoint is not finite");
    if (curve.corner_distance(p.s) < corner_tolerance)
        throw Error(ErrorKind::CornerHit, "footpoint is at a corner");
}

/// One application of the billiard map, also returning the traversed chord.
inline StepResult step_chord(const BoundaryCurve& curve, PhasePoint p)
{
    check_phase_point(curve, p);
    const CurvePoint a = curve.at(p.s);
    const Vec2 dir = std::cos(p.alpha) * a.tangent + std::sin(p.alpha) * perp(a.tangent);
    const auto hit = curve.first_hit_from(p.s, dir);
    if (!hit)
        throw Error(ErrorKind::NoIntersection, "ray does not return to the boundary");
    if (curve.corner_distance(hit->s) < corner_tolerance)
        throw Error(ErrorKind::CornerHit, "ray hits a corner");
    const CurvePoint b = curve.at(*hit);
    const double alpha1 = std::atan2(-dir.dot(perp(b.tangent)), dir.dot(b.tangent));
    if (!(alpha1 > 0.0 && alpha1 < pi))
        throw Error(ErrorKind::NoIntersection, "ray meets the boundary from outside");
    if (std::min(alpha1, pi - alpha1) < tangential_tolerance)
        throw Error(ErrorKind::TangentialHit, "ray is tangent to the boundary at the hit");
    Chord c;
    c.s0 = wrap(p.s, curve.length());
    c.s1 = hit->s;
    c.l = (b.position - a.position).norm();
    c.alpha0 = p.alpha;
    c.alpha1 = alpha1;
    c.direction = dir;
    return {{hit->s, alpha1}, c, a.curvature, b.curvature};
}

inline PhasePoint step(const BoundaryCurve& curve, PhasePoint p) { return step_chord(curve, p).next; }

/// F^{-1} = R o F o R with R the time reversal.
inline PhasePoint step_back(const BoundaryCurve& curve, PhasePoint p) { return reversed(step(curve, reversed(p))); }

/// DF assembled from the chord differentials: solve d(alpha0) for ds1, then
/// substitute into d(alpha1).
inline Jacobian2 jacobian_from_chord(const Chord& c, double kappa0, double kappa1)
{
    const double sin0 = std::sin(c.alpha0), sin1 = std::sin(c.alpha1), l = c.l;
    Jacobian2 j;
    j(0, 0) = (l * kappa0 - sin0) / sin1;
    j(0, 1) = l / sin1;
    j(1, 0) = (l * kappa0 * kappa1 - kappa1 * sin0 - kappa0 * sin1) / sin1;
    j(1, 1) = l * kappa1 / sin1 - 1.0;
    return j;
}

inline Jacobian2 jacobian_from_chord(const BoundaryCurve& curve, const Chord& c)
{
    return jacobian_from_chord(c, curve.curvature(c.s0), curve.curvature(c.s1));
}

inline Jacobian2 jacobian(const BoundaryCurve& curve, PhasePoint p)
{
    return jacobian_from_chord(curve, step_chord(curve, p).chord);
}

/// An orbit segment psi_0..psi_k with the chords between consecutive points
/// and the focal data at each footpoint.
struct OrbitTrace {
    std::vector<PhasePoint> points;
    std::vector<Chord> chords;           // chords[i] joins points[i] and points[i+1]
    std::vector<double> curvatures;      // kappa_i
    std::vector<double> lambdas;         // sin(alpha_i) / (2 kappa_i); infinite on flat pieces
    std::vector<double> inverse_focals;  // 2 kappa_i / sin(alpha_i), always finite

    std::size_t steps() const { return chords.size(); }
    double length(std::size_t i) const { return chords.at(i).l; }

    void push_point(PhasePoint p, double kappa)
    {
        points.push_back(p);
        curvatures.push_back(kappa);
        const double mu = 2.0 * kappa / std::sin(p.alpha);
        inverse_focals.push_back(mu);
        lambdas.push_back(std::abs(kappa) < 1e-14 ? std::numeric_limits<double>::infinity() : 1.0 / mu);
    }
};

inline OrbitTrace iterate(const BoundaryCurve& curve, PhasePoint p, std::size_t k)
{
    OrbitTrace trace;
    trace.points.reserve(k + 1);
    trace.chords.reserve(k);
    p.s = wrap(p.s, curve.length());
    trace.push_point(p, curve.curvature(p.s));
    for (std::size_t i = 0; i < k; ++i) {
        try {
            const StepResult r = step_chord(curve, p);
            trace.chords.push_back(r.chord);
            p = r.next;
            trace.push_point(p, r.kappa1);
        } catch (const Error& e) {
            throw e.at_index(i);
        }
    }
    return trace;
}

/// Monodromy-style product DF(psi_{k-1}) ... DF(psi_0) along a trace.
inline Jacobian2 trace_differential(const OrbitTrace& trace)
{
    Jacobian2 m = Jacobian2::Identity();
    for (std::size_t i = 0; i < trace.steps(); ++i)
        m = jacobian_from_chord(trace.chords[i], trace.curvatures[i], trace.curvatures[i + 1]) * m;
    return m;
}

// ---- invariant measure ----

struct PhaseRegion {
    double s_min = 0.0;
    double s_max = 0.0;
    double alpha_min = 0.0;
    double alpha_max = 0.0;

    /// mu(region) for d(mu) = sin(alpha) ds d(alpha).
    double measure() const
    {
        return std::max(0.0, s_max - s_min) * std::max(0.0, std::cos(alpha_min) - std::cos(alpha_max));
    }

    bool contains(PhasePoint p, double length) const
    {
        const double ds = wrap(p.s - s_min, length);
        return ds <= s_max - s_min && p.alpha >= alpha_min && p.alpha <= alpha_max;
    }
};

struct MeasureDriftReport {
    double region_measure = 0.0;
    double image_measure = 0.0;   // Monte-Carlo estimate of mu(F^k(region))
    double drift = 0.0;           // image / region - 1
    double sigma = 0.0;           // one standard deviation of drift
    std::size_t samples = 0;
    std::size_t failures = 0;     // samples whose orbit hit a corner or tangency
};

/// Estimates mu(F^k(region)) by sampling an envelope of the image (built from
/// forward images of a grid in the region) and testing membership through F^{-k}.
inline MeasureDriftReport invariant_measure_check(const BoundaryCurve& curve, const PhaseRegion& region,
                                                  std::size_t k, std::size_t samples, std::uint64_t seed = 1)
{
    MeasureDriftReport rep;
    rep.region_measure = region.measure();
    rep.samples = samples;
    if (rep.region_measure <= 0.0 || samples == 0)
        return rep;
    if (region.alpha_min <= 0.0 || region.alpha_max >= pi || region.s_max - region.s_min > curve.length())
        throw Error(ErrorKind::InvalidInput, "region must lie in the interior of phase space");

    const double L = curve.length();
    constexpr int bins = 256;
    std::vector<double> lo(bins, std::numeric_limits<double>::infinity());
    std::vector<double> hi(bins, -std::numeric_limits<double>::infinity());
    const int side = std::max(32, static_cast<int>(std::sqrt(static_cast<double>(samples) / 4.0)));
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j) {
            PhasePoint p{region.s_min + (region.s_max - region.s_min) * (i + 0.5) / side,
                         region.alpha_min + (region.alpha_max - region.alpha_min) * (j + 0.5) / side};
            try {
                for (std::size_t n = 0; n < k; ++n)
                    p = step(curve, p);
            } catch (const Error&) {
                continue;
            }
            const int b = std::min(bins - 1, static_cast<int>(wrap(p.s, L) / L * bins));
            lo[b] = std::min(lo[b], p.alpha);
            hi[b] = std::max(hi[b], p.alpha);
        }

    // Widen each column by its neighbours and a margin so the envelope covers the image.
    struct Column {
        double a = 0.0, b = 0.0, weight = 0.0;
    };
    std::vector<Column> cols(bins);
    double span_lo = pi, span_hi = 0.0;
    for (int b = 0; b < bins; ++b)
        if (hi[b] >= lo[b]) {
            span_lo = std::min(span_lo, lo[b]);
            span_hi = std::max(span_hi, hi[b]);
        }
    const double margin = 0.02 * std::max(span_hi - span_lo, 1e-3);
    double total = 0.0;
    for (int b = 0; b < bins; ++b) {
        double a = std::numeric_limits<double>::infinity(), c = -a;
        for (int d = -1; d <= 1; ++d) {
            const int bb = (b + d + bins) % bins;
            if (hi[bb] >= lo[bb]) {
                a = std::min(a, lo[bb]);
                c = std::max(c, hi[bb]);
            }
        }
        if (!(c >= a))
            continue;
        cols[b].a = std::max(1e-12, a - margin);
        cols[b].b = std::min(pi - 1e-12, c + margin);
        cols[b].weight = (L / bins) * (std::cos(cols[b].a) - std::cos(cols[b].b));
        total += cols[b].weight;
    }

    std::vector<double> cdf(bins);
    double acc = 0.0;
    for (int b = 0; b < bins; ++b)
        cdf[b] = (acc += cols[b].weight) / total;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::size_t hits = 0;
    for (std::size_t n = 0; n < samples; ++n) {
        const double u = uni(rng);
        const int b = static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        const Column& col = cols[std::min(b, bins - 1)];
        const double s = (std::min(b, bins - 1) + uni(rng)) * L / bins;
        const double ca = std::cos(col.a), cb = std::cos(col.b);
        PhasePoint p{s, std::acos(ca - uni(rng) * (ca - cb))};
        try {
            for (std::size_t m = 0; m < k; ++m)
                p = step_back(curve, p);
        } catch (const Error&) {
            ++rep.failures;
            continue;
        }
        if (region.contains(p, L))
            ++hits;
    }
    const double frac = static_cast<double>(hits) / static_cast<double>(samples);
    rep.image_measure = total * frac;
    rep.drift = rep.image_measure / rep.region_measure - 1.0;
    rep.sigma = total * std::sqrt(frac * (1.0 - frac) / static_cast<double>(samples)) / rep.region_measure;
    return rep;
}

} // namespace billiards
