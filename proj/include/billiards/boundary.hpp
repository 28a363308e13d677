#pragma once

#include "billiards/arclength.hpp"
#include "billiards/error.hpp"
#include "billiards/geometry.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace billiards {

/// Chords whose angle is within this of 0 or pi are tangential.
inline constexpr double tangential_tolerance = 1e-8;
/// Chord endpoints within this arclength of a corner are rejected.
inline constexpr double corner_tolerance = 1e-8;

struct CurvePoint {
    Vec2 position;
    Vec2 tangent;
    double curvature = 0.0;
};

/// A smooth closed curve with a regular 2*pi-periodic parameter, positively
/// oriented.
class LoopShape {
public:
    virtual ~LoopShape() = default;
    virtual Vec2 point(double t) const = 0;
    virtual Vec2 velocity(double t) const = 0;
    virtual double curvature(double t) const = 0;
    /// d(curvature)/dt
    virtual double curvature_rate(double t) const = 0;
    double speed(double t) const { return velocity(t).norm(); }
};

class EllipseLoop final : public LoopShape {
public:
    EllipseLoop(double a, double b)
        : a_(a)
        , b_(b)
    {
    }

    Vec2 point(double t) const override { return {a_ * std::cos(t), b_ * std::sin(t)}; }
    Vec2 velocity(double t) const override { return {-a_ * std::sin(t), b_ * std::cos(t)}; }

    double curvature(double t) const override
    {
        const double q = quad(t);
        return a_ * b_ / (q * std::sqrt(q));
    }

    double curvature_rate(double t) const override
    {
        const double q = quad(t);
        const double dq = 2.0 * std::sin(t) * std::cos(t) * (a_ * a_ - b_ * b_);
        return -1.5 * a_ * b_ * dq / (q * q * std::sqrt(q));
    }

private:
    double quad(double t) const
    {
        const double s = std::sin(t), c = std::cos(t);
        return a_ * a_ * s * s + b_ * b_ * c * c;
    }

    double a_, b_;
};

struct Harmonic {
    int k = 2;
    double cos_coeff = 0.0;
    double sin_coeff = 0.0;
};

/// Convex curve given by its support function h(theta) = a0 + sum_k (c_k cos k theta + s_k sin k theta);
/// theta is the direction of the outer normal and rho = h + h'' the radius of curvature.
class SupportLoop final : public LoopShape {
public:
    SupportLoop(double a0, std::vector<Harmonic> harmonics)
        : a0_(a0)
        , harmonics_(std::move(harmonics))
    {
    }

    double support(double th) const
    {
        double h = a0_;
        for (const auto& hk : harmonics_)
            h += hk.cos_coeff * std::cos(hk.k * th) + hk.sin_coeff * std::sin(hk.k * th);
        return h;
    }

    double support_rate(double th) const
    {
        double h = 0.0;
        for (const auto& hk : harmonics_)
            h += hk.k * (-hk.cos_coeff * std::sin(hk.k * th) + hk.sin_coeff * std::cos(hk.k * th));
        return h;
    }

    double radius(double th) const
    {
        double r = a0_;
        for (const auto& hk : harmonics_) {
            const double f = 1.0 - hk.k * hk.k;
            r += f * (hk.cos_coeff * std::cos(hk.k * th) + hk.sin_coeff * std::sin(hk.k * th));
        }
        return r;
    }

    double radius_rate(double th) const
    {
        double r = 0.0;
        for (const auto& hk : harmonics_) {
            const double f = (1.0 - hk.k * hk.k) * hk.k;
            r += f * (-hk.cos_coeff * std::sin(hk.k * th) + hk.sin_coeff * std::cos(hk.k * th));
        }
        return r;
    }

    Vec2 point(double th) const override
    {
        const Vec2 n = unit_from_angle(th);
        return support(th) * n + support_rate(th) * perp(n);
    }

    Vec2 velocity(double th) const override { return radius(th) * perp(unit_from_angle(th)); }
    double curvature(double th) const override { return 1.0 / radius(th); }

    double curvature_rate(double th) const override
    {
        const double r = radius(th);
        return -radius_rate(th) / (r * r);
    }

private:
    double a0_;
    std::vector<Harmonic> harmonics_;
};

/// Circular arc (or straight segment when curvature == 0) parametrized by
/// arclength from its start point.
struct ArcPiece {
    Vec2 start;
    double heading = 0.0;
    double length = 0.0;
    double curvature = 0.0;

    bool flat() const { return std::abs(curvature) < 1e-14; }

    Vec2 center() const { return start + perp(unit_from_angle(heading)) / curvature; }

    CurvePoint at(double sigma) const
    {
        const Vec2 tangent = unit_from_angle(heading + curvature * sigma);
        if (flat())
            return {start + sigma * unit_from_angle(heading), tangent, 0.0};
        const Vec2 c = center();
        const double r = 1.0 / std::abs(curvature);
        const double phi0 = std::atan2(start.y() - c.y(), start.x() - c.x());
        return {c + r * unit_from_angle(phi0 + curvature * sigma), tangent, curvature};
    }

    Vec2 end_point() const { return at(length).position; }
    double end_heading() const { return heading + curvature * length; }

    /// Appends (ray parameter, local arclength) of every crossing of the ray with the piece.
    void intersect(const Vec2& origin, const Vec2& dir, double tol,
                   std::vector<std::pair<double, double>>& out) const
    {
        if (flat()) {
            const Vec2 t0 = unit_from_angle(heading);
            const double denom = cross(dir, t0);
            if (std::abs(denom) < 1e-15)
                return;
            const double t = cross(start - origin, t0) / denom;
            const double sigma = cross(origin - start, dir) / cross(t0, dir);
            if (sigma >= -tol && sigma <= length + tol)
                out.emplace_back(t, std::clamp(sigma, 0.0, length));
            return;
        }
        const Vec2 c = center();
        const double r = 1.0 / std::abs(curvature);
        const Vec2 oc = origin - c;
        const double b = dir.dot(oc);
        const double disc = b * b - (oc.squaredNorm() - r * r);
        if (disc < 0.0)
            return;
        const double root = std::sqrt(disc);
        const double phi0 = std::atan2(start.y() - c.y(), start.x() - c.x());
        const double sign = curvature > 0.0 ? 1.0 : -1.0;
        for (double t : {-b - root, -b + root}) {
            const Vec2 x = origin + t * dir;
            const double phi = std::atan2(x.y() - c.y(), x.x() - c.x());
            double sigma = wrap(sign * (phi - phi0), two_pi) * r;
            if (sigma > length + tol && two_pi * r - sigma <= tol)
                sigma = 0.0;
            if (sigma <= length + tol)
                out.emplace_back(t, std::clamp(sigma, 0.0, length));
        }
    }
};

/// Smooth closed loop reparametrized by arclength.
struct LoopPiece {
    std::shared_ptr<const LoopShape> shape;
    ArclengthTable table;

    double parameter(double sigma) const { return table.parameter_at(sigma); }

    CurvePoint at(double sigma) const
    {
        const double t = parameter(sigma);
        const Vec2 v = shape->velocity(t);
        return {shape->point(t), v.normalized(), shape->curvature(t)};
    }
};

struct Corner {
    double s = 0.0;
    double turn = 0.0; // heading jump, positive for a convex corner
    double curvature_before = 0.0;
    double curvature_after = 0.0;
};

struct RayHit {
    double t = 0.0; // distance along the ray
    double s = 0.0; // arclength coordinate of the hit
    double loop_parameter = std::numeric_limits<double>::quiet_NaN(); // set on smooth loops
};

/// Billiard table boundary: an arclength-parametrized, positively oriented,
/// simple closed curve. Immutable after construction.
class BoundaryCurve {
public:
    static BoundaryCurve from_arcs(std::vector<ArcPiece> arcs, std::string kind)
    {
        if (arcs.empty())
            throw Error(ErrorKind::InvalidSpec, "table has no pieces");
        BoundaryCurve c;
        c.kind_ = std::move(kind);
        double s = 0.0;
        for (const auto& a : arcs) {
            if (!(a.length > 0.0))
                throw Error(ErrorKind::InvalidSpec, "zero-length piece");
            c.starts_.push_back(s);
            s += a.length;
        }
        c.length_ = s;
        c.arcs_ = std::move(arcs);

        const std::size_t m = c.arcs_.size();
        double turning = 0.0;
        bool convex = true;
        for (std::size_t j = 0; j < m; ++j) {
            const auto& prev = c.arcs_[(j + m - 1) % m];
            const auto& cur = c.arcs_[j];
            const double gap = (prev.end_point() - cur.start).norm();
            if (gap > 1e-9 * (1.0 + c.length_))
                throw Error(ErrorKind::InvalidSpec, "pieces do not close up");
            const double jump = wrapped_diff(cur.heading, prev.end_heading(), two_pi);
            turning += jump + cur.curvature * cur.length;
            if (std::abs(jump) > 1e-10) {
                if (std::abs(std::abs(jump) - pi) < 1e-9)
                    throw Error(ErrorKind::InvalidSpec, "cusp between pieces");
                c.corners_.push_back({c.starts_[j], jump, prev.curvature, cur.curvature});
            }
            if (cur.curvature < 0.0 || jump < -1e-10)
                convex = false;
            if (cur.flat())
                c.has_flat_ = true;
        }
        if (std::abs(turning - two_pi) > 1e-8)
            throw Error(ErrorKind::InvalidSpec, "boundary is not a positively oriented simple loop");
        c.convex_ = convex;
        c.finish();
        return c;
    }

    static BoundaryCurve from_loop(std::shared_ptr<const LoopShape> shape, std::string kind)
    {
        BoundaryCurve c;
        c.kind_ = std::move(kind);
        for (int i = 0; i < 4096; ++i) {
            const double t = two_pi * i / 4096.0;
            if (!(shape->curvature(t) > 0.0) || !(shape->speed(t) > 0.0))
                throw Error(ErrorKind::InvalidSpec, "smooth table must have positive curvature");
        }
        auto raw = shape.get();
        LoopPiece piece{std::move(shape), ArclengthTable([raw](double t) { return raw->speed(t); }, 0.0, two_pi)};
        c.length_ = piece.table.length();
        c.loop_ = std::move(piece);
        c.convex_ = true;
        c.finish();
        return c;
    }

    const std::string& kind() const { return kind_; }
    double length() const { return length_; }
    bool convex() const { return convex_; }
    bool has_flat_segments() const { return has_flat_; }
    double diameter() const { return diameter_; }
    const std::vector<Corner>& corners() const { return corners_; }
    const std::vector<ArcPiece>& arcs() const { return arcs_; }
    bool is_smooth_loop() const { return loop_.has_value(); }

    CurvePoint at(double s) const
    {
        s = wrap(s, length_);
        if (loop_)
            return loop_->at(s);
        const std::size_t j = piece_index(s);
        return arcs_[j].at(s - starts_[j]);
    }

    /// Boundary data at a ray hit, reusing the curve parameter found by the solver.
    CurvePoint at(const RayHit& hit) const
    {
        if (!loop_ || std::isnan(hit.loop_parameter))
            return at(hit.s);
        const double t = hit.loop_parameter;
        return {loop_->shape->point(t), loop_->shape->velocity(t).normalized(), loop_->shape->curvature(t)};
    }

    Vec2 position(double s) const { return at(s).position; }
    Vec2 tangent(double s) const { return at(s).tangent; }
    double curvature(double s) const { return at(s).curvature; }

    /// d(curvature)/ds
    double curvature_derivative(double s) const
    {
        if (!loop_)
            return 0.0;
        const double t = loop_->parameter(wrap(s, length_));
        return loop_->shape->curvature_rate(t) / loop_->shape->speed(t);
    }

    /// rho = 1/kappa; infinite on flat pieces.
    double radius_of_curvature(double s) const
    {
        const double k = curvature(s);
        return std::abs(k) < 1e-14 ? std::numeric_limits<double>::infinity() : 1.0 / k;
    }

    /// d(rho)/ds
    double radius_derivative(double s) const
    {
        const double k = curvature(s);
        return -curvature_derivative(s) / (k * k);
    }

    /// Arclength distance to the nearest corner (infinity if none).
    double corner_distance(double s) const
    {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : corners_)
            best = std::min(best, std::abs(wrapped_diff(s, c.s, length_)));
        return best;
    }

    /// First crossing of the ray leaving the boundary point s in direction dir.
    std::optional<RayHit> first_hit_from(double s, const Vec2& dir) const
    {
        s = wrap(s, length_);
        const Vec2 origin = position(s);
        if (loop_)
            return loop_hit_from(s, origin, dir);
        std::optional<RayHit> best;
        for (const auto& h : ray_hits(origin, dir)) {
            if (h.t <= 1e-11 * diameter_)
                continue;
            if (!best || h.t < best->t)
                best = h;
        }
        return best;
    }

    /// All crossings of the ray origin + t*dir (t > 0) with the boundary.
    std::vector<RayHit> ray_hits(const Vec2& origin, const Vec2& dir) const
    {
        std::vector<RayHit> hits;
        if (loop_) {
            constexpr int samples = 256;
            auto g = [&](double t) { return cross(dir, loop_->shape->point(t) - origin); };
            double prev = g(0.0);
            for (int i = 1; i <= samples; ++i) {
                const double a = two_pi * (i - 1) / samples, b = two_pi * i / samples;
                const double cur = g(b);
                if (prev == 0.0 || (prev < 0.0) != (cur < 0.0)) {
                    const double root = prev == 0.0 ? a : solve_bracket(g, a, b);
                    const Vec2 x = loop_->shape->point(root);
                    const double t = dir.dot(x - origin);
                    if (t > 0.0)
                        hits.push_back({t, wrap(loop_->table.arclength_at(root), length_), root});
                }
                prev = cur;
            }
            return hits;
        }
        std::vector<std::pair<double, double>> local;
        const double tol = 1e-12 * (1.0 + length_);
        for (std::size_t j = 0; j < arcs_.size(); ++j) {
            local.clear();
            arcs_[j].intersect(origin, dir, tol, local);
            for (const auto& [t, sigma] : local)
                if (t > 0.0)
                    hits.push_back({t, wrap(starts_[j] + sigma, length_)});
        }
        return hits;
    }

private:
    BoundaryCurve() = default;

    std::size_t piece_index(double s) const
    {
        const auto it = std::upper_bound(starts_.begin(), starts_.end(), s);
        return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - starts_.begin()) - 1));
    }

    template <class F>
    static double solve_bracket(F&& f, double a, double b)
    {
        boost::uintmax_t iters = 100;
        const auto r = boost::math::tools::toms748_solve(
            f, a, b, boost::math::tools::eps_tolerance<double>(52), iters);
        return 0.5 * (r.first + r.second);
    }

    std::optional<RayHit> loop_hit_from(double s, const Vec2& origin, const Vec2& dir) const
    {
        // A convex loop meets the ray exactly once more in (t0, t0 + 2pi).
        const double t0 = loop_->parameter(s);
        auto g = [&](double t) { return cross(dir, loop_->shape->point(t) - origin); };
        double delta = 1e-4;
        double ga = g(t0 + delta), gb = g(t0 + two_pi - delta);
        while ((ga < 0.0) == (gb < 0.0) && delta > 1e-13) {
            delta *= 0.1;
            ga = g(t0 + delta);
            gb = g(t0 + two_pi - delta);
        }
        if ((ga < 0.0) == (gb < 0.0))
            return std::nullopt;
        const double root = solve_bracket(g, t0 + delta, t0 + two_pi - delta);
        const double t = dir.dot(loop_->shape->point(root) - origin);
        if (!(t > 0.0))
            return std::nullopt;
        const double tw = wrap(root, two_pi);
        return RayHit{t, wrap(loop_->table.arclength_at(tw), length_), tw};
    }

    void finish()
    {
        constexpr int n = 512;
        std::vector<Vec2> pts;
        pts.reserve(n);
        for (int i = 0; i < n; ++i)
            pts.push_back(position(length_ * i / n));
        double d = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                d = std::max(d, (pts[i] - pts[j]).norm());
        diameter_ = d;
        check_simple();
    }

    void check_simple() const
    {
        if (loop_)
            return;
        std::vector<Vec2> poly;
        for (std::size_t j = 0; j < arcs_.size(); ++j) {
            const int m = std::max(16, static_cast<int>(512.0 * arcs_[j].length / length_));
            for (int i = 0; i < m; ++i)
                poly.push_back(arcs_[j].at(arcs_[j].length * i / m).position);
        }
        const std::size_t n = poly.size();
        double area = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            area += cross(poly[i], poly[(i + 1) % n]);
        if (!(area > 0.0))
            throw Error(ErrorKind::InvalidSpec, "boundary must be positively oriented");
        auto segments_cross = [](const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
            const double d1 = cross(p2 - p1, q1 - p1), d2 = cross(p2 - p1, q2 - p1);
            const double d3 = cross(q2 - q1, p1 - q1), d4 = cross(q2 - q1, p2 - q1);
            return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
        };
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 2; j < n; ++j) {
                if (i == 0 && j == n - 1)
                    continue;
                if (segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]))
                    throw Error(ErrorKind::InvalidSpec, "boundary is self-intersecting");
            }
    }

    std::string kind_;
    double length_ = 0.0;
    bool convex_ = true;
    bool has_flat_ = false;
    double diameter_ = 0.0;
    std::vector<ArcPiece> arcs_;
    std::vector<double> starts_;
    std::vector<Corner> corners_;
    std::optional<LoopPiece> loop_;
};

// ---- table construction ----

struct CircleSpec {
    double radius = 1.0;
    Vec2 center = Vec2::Zero();
};

struct EllipseSpec {
    double a = 1.0;
    double b = 1.0;
};

/// Smooth convex table from the Fourier series of its support function, or
/// of its radius of curvature as a function of the normal direction.
struct PolarGraphSpec {
    enum class Form { Support, RadiusOfCurvature };
    Form form = Form::Support;
    double a0 = 1.0;
    std::vector<Harmonic> harmonics;
};

/// Closed chain of circular arcs through the given vertices; edge i runs from
/// vertex i to vertex i+1 with signed curvature curvatures[i] (0 = straight,
/// positive bulges outward).
struct PiecewiseSpec {
    std::vector<Vec2> vertices;
    std::vector<double> curvatures;
};

using TableSpec = std::variant<CircleSpec, EllipseSpec, PolarGraphSpec, PiecewiseSpec>;

inline BoundaryCurve make_table(const CircleSpec& spec)
{
    if (!(spec.radius > 0.0) || !std::isfinite(spec.radius))
        throw Error(ErrorKind::InvalidSpec, "circle radius must be positive");
    const ArcPiece arc{spec.center + Vec2(spec.radius, 0.0), pi / 2, two_pi * spec.radius, 1.0 / spec.radius};
    return BoundaryCurve::from_arcs({arc}, "circle");
}

inline BoundaryCurve make_table(const EllipseSpec& spec)
{
    if (!(spec.a > 0.0) || !(spec.b > 0.0) || !std::isfinite(spec.a) || !std::isfinite(spec.b))
        throw Error(ErrorKind::InvalidSpec, "ellipse axes must be positive");
    return BoundaryCurve::from_loop(std::make_shared<EllipseLoop>(spec.a, spec.b), "ellipse");
}

inline BoundaryCurve make_table(const PolarGraphSpec& spec)
{
    std::vector<Harmonic> support;
    for (const auto& h : spec.harmonics) {
        if (h.k < 1)
            throw Error(ErrorKind::InvalidSpec, "harmonic order must be >= 1");
        if (spec.form == PolarGraphSpec::Form::Support) {
            support.push_back(h);
        } else {
            if (h.k == 1) {
                if (h.cos_coeff != 0.0 || h.sin_coeff != 0.0)
                    throw Error(ErrorKind::InvalidSpec, "first harmonic of the radius of curvature must vanish (non-closed)");
                continue;
            }
            const double f = 1.0 - h.k * h.k;
            support.push_back({h.k, h.cos_coeff / f, h.sin_coeff / f});
        }
    }
    if (!(spec.a0 > 0.0))
        throw Error(ErrorKind::InvalidSpec, "mean radius must be positive");
    return BoundaryCurve::from_loop(std::make_shared<SupportLoop>(spec.a0, std::move(support)), "polar_graph");
}

inline BoundaryCurve make_table(const PiecewiseSpec& spec)
{
    const std::size_t n = spec.vertices.size();
    if (n < 2 || spec.curvatures.size() != n)
        throw Error(ErrorKind::InvalidSpec, "piecewise table needs >= 2 vertices and one curvature per edge");
    if (n == 2 && spec.curvatures[0] == 0.0 && spec.curvatures[1] == 0.0)
        throw Error(ErrorKind::InvalidSpec, "two straight edges enclose no area");
    std::vector<ArcPiece> arcs;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = spec.vertices[i], b = spec.vertices[(i + 1) % n];
        const double chord = (b - a).norm();
        const double k = spec.curvatures[i];
        if (!(chord > 0.0))
            throw Error(ErrorKind::InvalidSpec, "repeated vertex");
        if (!std::isfinite(k) || std::abs(k) * chord / 2.0 > 1.0 + 1e-12)
            throw Error(ErrorKind::InvalidSpec, "edge curvature too large for its chord");
        const double half = std::asin(std::min(1.0, std::abs(k) * chord / 2.0));
        const double dir = std::atan2(b.y() - a.y(), b.x() - a.x());
        const double sign = k >= 0.0 ? 1.0 : -1.0;
        ArcPiece arc;
        arc.start = a;
        arc.curvature = k;
        arc.heading = dir - sign * half;
        arc.length = std::abs(k) < 1e-14 ? chord : 2.0 * half / std::abs(k);
        arcs.push_back(arc);
    }
    return BoundaryCurve::from_arcs(std::move(arcs), "piecewise");
}

inline BoundaryCurve make_table(const TableSpec& spec)
{
    return std::visit([](const auto& s) { return make_table(s); }, spec);
}

// ---- chords ----

struct Chord {
    double s0 = 0.0;
    double s1 = 0.0;
    double l = 0.0;
    double alpha0 = 0.0;
    double alpha1 = 0.0;
    Vec2 direction = Vec2::Zero();
};

/// Angles of the directed segment p0 -> p1 against the tangents at its ends,
/// both measured so that a specular reflection at s1 leaves at angle alpha1.
inline Chord chord_unchecked(const BoundaryCurve& curve, double s0, double s1)
{
    const CurvePoint a = curve.at(s0), b = curve.at(s1);
    Chord c;
    c.s0 = wrap(s0, curve.length());
    c.s1 = wrap(s1, curve.length());
    const Vec2 d = b.position - a.position;
    c.l = d.norm();
    c.direction = c.l > 0.0 ? Vec2(d / c.l) : Vec2::Zero();
    c.alpha0 = std::atan2(c.direction.dot(perp(a.tangent)), c.direction.dot(a.tangent));
    c.alpha1 = std::atan2(-c.direction.dot(perp(b.tangent)), c.direction.dot(b.tangent));
    return c;
}

inline Chord chord(const BoundaryCurve& curve, double s0, double s1)
{
    const double L = curve.length();
    if (std::abs(wrapped_diff(s0, s1, L)) < 1e-12 * L)
        throw Error(ErrorKind::DegenerateChord, "chord endpoints coincide");
    if (curve.corner_distance(s0) < corner_tolerance || curve.corner_distance(s1) < corner_tolerance)
        throw Error(ErrorKind::CornerHit, "chord ends at a corner");
    Chord c = chord_unchecked(curve, s0, s1);
    if (!(c.l > 0.0))
        throw Error(ErrorKind::DegenerateChord, "zero-length chord");
    // Angles of very short chords carry the rounding error of the endpoint positions.
    const double tol = std::max(tangential_tolerance, 64.0 * std::numeric_limits<double>::epsilon() * curve.diameter() / c.l);
    for (double a : {c.alpha0, c.alpha1}) {
        if (std::min(std::abs(a), std::abs(pi - a)) < tol)
            throw Error(ErrorKind::TangentialChord, "chord is tangent to the boundary");
        if (a <= 0.0 || a >= pi)
            throw Error(ErrorKind::ExteriorChord, "chord leaves the table at an endpoint");
    }
    return c;
}

/// Partial derivatives of chord length and end angles in the endpoint coordinates.
struct ChordDifferentials {
    double dl_ds0 = 0.0;
    double dl_ds1 = 0.0;
    double dalpha0_ds0 = 0.0;
    double dalpha0_ds1 = 0.0;
    double dalpha1_ds0 = 0.0;
    double dalpha1_ds1 = 0.0;

    /// Rows (l, alpha0, alpha1), columns (s0, s1).
    Eigen::Matrix<double, 3, 2> matrix() const
    {
        Eigen::Matrix<double, 3, 2> m;
        m << dl_ds0, dl_ds1, dalpha0_ds0, dalpha0_ds1, dalpha1_ds0, dalpha1_ds1;
        return m;
    }
};

inline ChordDifferentials chord_differentials(const BoundaryCurve& curve, const Chord& c)
{
    for (double a : {c.alpha0, c.alpha1})
        if (!(std::min(a, pi - a) >= tangential_tolerance))
            throw Error(ErrorKind::TangentialChord, "chord is tangent to the boundary");
    const double sin0 = std::sin(c.alpha0), sin1 = std::sin(c.alpha1);
    ChordDifferentials d;
    d.dl_ds0 = -std::cos(c.alpha0);
    d.dl_ds1 = std::cos(c.alpha1);
    d.dalpha0_ds0 = sin0 / c.l - curve.curvature(c.s0);
    d.dalpha0_ds1 = sin1 / c.l;
    d.dalpha1_ds0 = -sin0 / c.l;
    d.dalpha1_ds1 = -sin1 / c.l + curve.curvature(c.s1);
    return d;
}

} // namespace billiards
