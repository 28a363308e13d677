#pragma once

#include "billiards/phasemap.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace billiards {

/// Point of the projective line R u {inf}: x = u / v, stored normalized.
struct ProjPoint {
    double u = 0.0;
    double v = 1.0;

    static ProjPoint infinity() { return {1.0, 0.0}; }

    static ProjPoint finite(double x)
    {
        if (std::isinf(x))
            return infinity();
        return ProjPoint{x, 1.0}.normalized();
    }

    ProjPoint normalized() const
    {
        const double n = std::hypot(u, v);
        if (!(n > 0.0))
            throw Error(ErrorKind::InvalidInput, "projective point (0:0)");
        // fix the sign so equal points have equal representatives
        const double sgn = (v < 0.0 || (v == 0.0 && u < 0.0)) ? -1.0 : 1.0;
        return {sgn * u / n, sgn * v / n};
    }

    /// True when the point lies within tol of infinity on the unit circle of representatives.
    bool is_infinite(double tol = 1e-12) const { return std::abs(v) <= tol * std::hypot(u, v); }

    double value() const { return v == 0.0 ? std::numeric_limits<double>::infinity() : u / v; }
};

/// Chordal distance on the projective line; 0 iff equal, at most 1.
inline double projective_distance(ProjPoint a, ProjPoint b)
{
    const ProjPoint p = a.normalized(), q = b.normalized();
    return std::abs(p.u * q.v - p.v * q.u);
}

/// x -> (a x + b) / (c x + d), defined up to scale. The matrix is kept at unit
/// Frobenius norm; its determinant is carried separately through compositions
/// because strongly hyperbolic products lose it to cancellation.
class ProjectiveMap {
public:
    ProjectiveMap()
        : m_(Mat2::Identity() / std::sqrt(2.0))
        , det_(0.5)
    {
    }

    explicit ProjectiveMap(const Mat2& m)
    {
        const double n = m.norm();
        if (!(n > 0.0) || !std::isfinite(n) || std::abs(m.determinant()) < 1e-12 * n * n)
            throw Error(ErrorKind::InvalidInput, "degenerate projective map");
        m_ = m / n;
        det_ = m.determinant() / (n * n);
    }

    const Mat2& matrix() const { return m_; }
    /// Determinant of the unit-norm representative.
    double determinant() const { return det_; }
    double a() const { return m_(0, 0); }
    double b() const { return m_(0, 1); }
    double c() const { return m_(1, 0); }
    double d() const { return m_(1, 1); }

    bool is_linear(double tol = 1e-10) const { return std::abs(c()) <= tol; }

    ProjPoint operator()(ProjPoint x) const
    {
        const Vec2 r = m_ * Vec2(x.u, x.v);
        return ProjPoint{r.x(), r.y()}.normalized();
    }

    double operator()(double x) const { return (*this)(ProjPoint::finite(x)).value(); }

    /// (this o other)(x) = this(other(x))
    ProjectiveMap operator*(const ProjectiveMap& other) const
    {
        return ProjectiveMap(m_ * other.m_, det_ * other.det_);
    }

    ProjectiveMap inverse() const
    {
        Mat2 adj;
        adj << d(), -b(), -c(), a();
        return ProjectiveMap(adj, det_);
    }

    /// d/dx of the map at a finite x whose image is finite.
    double derivative(double x) const
    {
        const double den = c() * x + d();
        return det_ / (den * den);
    }

private:
    ProjectiveMap(const Mat2& m, double det)
    {
        const double n = m.norm();
        m_ = m / n;
        det_ = det / (n * n);
    }

    Mat2 m_;
    double det_;
};

/// Chart change w = 1/x as a projective map (an involution).
inline ProjectiveMap reciprocal_chart() { return ProjectiveMap((Mat2() << 0.0, 1.0, 1.0, 0.0).finished()); }

struct BeamState {
    PhasePoint phase;
    ProjPoint x;
};

/// Mirror equation 1/a + 1/b = 2 kappa / sin(alpha), solved projectively for b.
inline ProjPoint mirror_reflect(double kappa, double alpha, ProjPoint a)
{
    const double mu = 2.0 * kappa / std::sin(alpha);
    const ProjPoint p = a.normalized();
    return ProjPoint{p.u, mu * p.u - p.v}.normalized();
}

inline double mirror_reflect(double kappa, double alpha, double a)
{
    return mirror_reflect(kappa, alpha, ProjPoint::finite(a)).value();
}

/// B_{i+1}: x_i -> x_{i+1}, the focus on chord i carried over the reflection at
/// point i+1. With mu = 1/lambda this is (1, -l; mu, 1 - l mu), which stays
/// valid on straight pieces (mu = 0, x -> x - l).
inline ProjectiveMap step_map(const OrbitTrace& trace, std::size_t i)
{
    if (i + 1 >= trace.points.size())
        throw Error(ErrorKind::IndexOutOfRange, "step map index beyond the orbit trace");
    const double l = trace.chords[i].l;
    const double mu = trace.inverse_focals[i + 1];
    return ProjectiveMap((Mat2() << 1.0, -l, mu, 1.0 - l * mu).finished());
}

/// A_k = B_k o ... o B_1 (A_0 = identity).
inline ProjectiveMap focusing_map(const OrbitTrace& trace, std::size_t k)
{
    if (k > trace.steps())
        throw Error(ErrorKind::IndexOutOfRange, "focusing step beyond the orbit trace");
    ProjectiveMap a;
    for (std::size_t i = 0; i < k; ++i)
        a = step_map(trace, i) * a;
    return a;
}

/// x_0 .. x_k along the whole trace.
inline std::vector<ProjPoint> propagate(const OrbitTrace& trace, ProjPoint x0)
{
    std::vector<ProjPoint> xs{x0.normalized()};
    for (std::size_t i = 0; i < trace.steps(); ++i)
        xs.push_back(step_map(trace, i)(xs.back()));
    return xs;
}

/// entry i-1 tells whether A_i is linear, i = 1..k.
inline std::vector<bool> linearity_profile(const OrbitTrace& trace, std::size_t k, double tol = 1e-10)
{
    std::vector<bool> out;
    ProjectiveMap a;
    for (std::size_t i = 0; i < std::min(k, trace.steps()); ++i) {
        a = step_map(trace, i) * a;
        out.push_back(a.is_linear(tol));
    }
    return out;
}

struct DerivativeProduct {
    double value = 0.0;
    std::vector<double> factors; // (x_i - lambda_i)^2 / lambda_i^2 for i = 1..k
    /// A sample was at a pole; value is then the derivative of A_k with the
    /// infinite endpoints taken in the chart w = 1/x.
    bool pole_chart = false;
    bool input_in_w_chart = false;
    bool output_in_w_chart = false;
};

/// dx_k/dx_0 as the product of the per-step factors (mu_i x_i - 1)^2.
inline DerivativeProduct derivative_product(const OrbitTrace& trace, ProjPoint x0, std::size_t k,
                                            double pole_tol = 1e-9)
{
    if (k > trace.steps())
        throw Error(ErrorKind::IndexOutOfRange, "derivative step beyond the orbit trace");
    DerivativeProduct r;
    ProjPoint x = x0.normalized();
    bool pole = x.is_infinite(pole_tol);
    r.value = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
        x = step_map(trace, i)(x);
        if (x.is_infinite(pole_tol))
            pole = true;
        const double f = trace.inverse_focals[i + 1] * x.value() - 1.0;
        r.factors.push_back(f * f);
        r.value *= f * f;
    }
    if (!pole)
        return r;
    r.pole_chart = true;
    ProjectiveMap a = focusing_map(trace, k);
    r.input_in_w_chart = x0.is_infinite(pole_tol);
    r.output_in_w_chart = x.is_infinite(pole_tol);
    if (r.input_in_w_chart)
        a = a * reciprocal_chart();
    if (r.output_in_w_chart)
        a = reciprocal_chart() * a;
    const ProjPoint start = r.input_in_w_chart ? reciprocal_chart()(x0) : x0;
    r.value = a.derivative(start.value());
    return r;
}

// ---- tangent vectors and focusing points ----

/// Focus of the infinitesimal beam generated by the tangent vector (ds, dalpha)
/// at a phase point: x = ds sin(alpha) / (dalpha + kappa ds), positive along the ray.
inline ProjPoint focus_from_tangent(double kappa, double alpha, double ds, double dalpha)
{
    return ProjPoint{ds * std::sin(alpha), dalpha + kappa * ds}.normalized();
}

/// Inverse of focus_from_tangent up to scale.
inline Vec2 tangent_from_focus(double kappa, double alpha, ProjPoint x)
{
    return Vec2(x.u, x.v * std::sin(alpha) - kappa * x.u);
}

/// DF at trace point i, read as a map of focusing coordinates x_i -> x_{i+1}.
inline ProjectiveMap projectivised_jacobian(const OrbitTrace& trace, std::size_t i)
{
    if (i + 1 >= trace.points.size())
        throw Error(ErrorKind::IndexOutOfRange, "jacobian index beyond the orbit trace");
    const double a0 = trace.points[i].alpha, a1 = trace.points[i + 1].alpha;
    const double k0 = trace.curvatures[i], k1 = trace.curvatures[i + 1];
    const Mat2 j = jacobian_from_chord(trace.chords[i], k0, k1);
    const Mat2 in = (Mat2() << 1.0, 0.0, -k0, std::sin(a0)).finished();
    const Mat2 out = (Mat2() << std::sin(a1), 0.0, k1, 1.0).finished();
    return ProjectiveMap(out * j * in);
}

} // namespace billiards
