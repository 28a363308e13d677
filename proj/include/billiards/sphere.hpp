#pragma once

#include "billiards/arclength.hpp"
#include "billiards/error.hpp"
#include "billiards/geometry.hpp"
#include "billiards/parallel.hpp"

#include <boost/math/tools/roots.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

namespace billiards {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Lune between the meridians at longitude 0 (wall alpha) and p pi / q (wall
/// beta) on the unit sphere, closed by two cap arcs tangent to both walls.
/// Caps are small circles centred on the bisecting meridian, optionally pushed
/// along their normal by amplitude * sin^4 bumps that vanish to third order at
/// the tangency points.
struct SphereBigonSpec {
    int p = 1;
    int q = 2;
    double south_latitude = 0.05; // depth of a', b' below the equator
    double north_latitude = 0.05; // height of a'', b'' above the equator
    double south_bulge = 0.0;     // radial displacement of the south cap midpoint (outward > 0)
    double north_bulge = 0.0;
};

enum class SpherePiece { AlphaSouth = 0, SouthCap = 1, Beta = 2, NorthCap = 3, AlphaNorth = 4 };

inline bool is_wall(SpherePiece p) { return p == SpherePiece::AlphaSouth || p == SpherePiece::Beta || p == SpherePiece::AlphaNorth; }

struct SpherePoint {
    Vec3 position;
    Vec3 tangent;
    Vec3 normal; // inward conormal, position x tangent
    SpherePiece piece = SpherePiece::AlphaSouth;
};

struct SpherePhase {
    double s = 0.0;
    double alpha = 0.0;
};

namespace detail {

struct CapArc {
    Vec3 centre;
    double radius = 0.0;
    Vec3 u, v;        // u points to the pole; the arc is psi in [-psi_t, psi_t]
    double psi_t = 0.0;
    double amplitude = 0.0;
    ArclengthTable table;

    double phase(double psi) const { return pi * (psi + psi_t) / (2.0 * psi_t); }
    double rho(double psi) const { return radius + amplitude * std::pow(std::sin(phase(psi)), 4); }
    double rho_rate(double psi) const
    {
        const double ph = phase(psi);
        return amplitude * 4.0 * std::pow(std::sin(ph), 3) * std::cos(ph) * pi / (2.0 * psi_t);
    }
    Vec3 w(double psi) const { return std::cos(psi) * u + std::sin(psi) * v; }
    Vec3 point(double psi) const
    {
        const double r = rho(psi);
        return std::cos(r) * centre + std::sin(r) * w(psi);
    }
    Vec3 velocity(double psi) const
    {
        const double r = rho(psi), dr = rho_rate(psi);
        const Vec3 dw = -std::sin(psi) * u + std::cos(psi) * v;
        return dr * (-std::sin(r) * centre + std::cos(r) * w(psi)) + std::sin(r) * dw;
    }
    double length() const { return table.length(); }
};

/// Small circle centred on the bisector, tangent to both walls at latitude lat_t,
/// traversed from `start` to its mirror image across the bisector plane.
inline std::shared_ptr<CapArc> make_cap(double theta, double lat_t, double amplitude, const Vec3& start, const Vec3& pole)
{
    auto cap = std::make_shared<CapArc>();
    CapArc& c = *cap;
    const double lat_c = std::atan(std::tan(lat_t) * std::cos(theta / 2));
    c.centre = Vec3(std::cos(lat_c) * std::cos(theta / 2), std::cos(lat_c) * std::sin(theta / 2), std::sin(lat_c));
    c.radius = std::acos(std::clamp(c.centre.dot(start), -1.0, 1.0));
    c.u = (pole - pole.dot(c.centre) * c.centre).normalized();
    const Vec3 d = (start - start.dot(c.centre) * c.centre).normalized();
    c.psi_t = std::acos(std::clamp(c.u.dot(d), -1.0, 1.0));
    c.v = (std::cos(c.psi_t) * c.u - d) / std::sin(c.psi_t);
    c.amplitude = amplitude;
    const CapArc* self = cap.get();
    c.table = ArclengthTable([self](double psi) { return self->velocity(psi).norm(); }, -c.psi_t, c.psi_t, 64);
    return cap;
}

} // namespace detail

class SphereBigonTable {
public:
    explicit SphereBigonTable(const SphereBigonSpec& spec)
        : spec_(spec)
    {
        if (spec.p < 1 || spec.q < 2 || spec.p >= spec.q)
            throw Error(ErrorKind::InvalidSpec, "bigon needs 1 <= p < q");
        if (std::gcd(spec.p, spec.q) != 1)
            throw Error(ErrorKind::InvalidSpec, "p and q must be coprime");
        for (double lat : {spec.south_latitude, spec.north_latitude})
            if (!(lat > 0.0 && lat < pi / 2))
                throw Error(ErrorKind::InvalidSpec, "tangency latitudes must lie in (0, pi/2)");
        theta_ = pi * spec.p / spec.q;
        normal_alpha_ = Vec3(0.0, 1.0, 0.0);
        normal_beta_ = Vec3(-std::sin(theta_), std::cos(theta_), 0.0);

        south_ = detail::make_cap(theta_, -spec.south_latitude, spec.south_bulge, wall_point(0.0, -spec.south_latitude),
                                  Vec3(0, 0, -1));
        north_ = detail::make_cap(theta_, spec.north_latitude, spec.north_bulge, wall_point(theta_, spec.north_latitude),
                                  Vec3(0, 0, 1));
        check_cap(*south_);
        check_cap(*north_);
        lengths_ = {spec.south_latitude, south_->length(), spec.south_latitude + spec.north_latitude, north_->length(),
                    spec.north_latitude};
        starts_[0] = 0.0;
        for (int i = 1; i < 5; ++i)
            starts_[i] = starts_[i - 1] + lengths_[i - 1];
        length_ = starts_[4] + lengths_[4];
    }

    const SphereBigonSpec& spec() const { return spec_; }
    int p() const { return spec_.p; }
    int q() const { return spec_.q; }
    double angle() const { return theta_; }
    double length() const { return length_; }
    double piece_start(SpherePiece k) const { return starts_[static_cast<int>(k)]; }
    double piece_length(SpherePiece k) const { return lengths_[static_cast<int>(k)]; }
    const Vec3& wall_normal(SpherePiece k) const { return k == SpherePiece::Beta ? normal_beta_ : normal_alpha_; }
    double cap_radius(SpherePiece k) const { return cap(k).radius; }
    Vec3 cap_centre(SpherePiece k) const { return cap(k).centre; }

    /// Point at latitude lat on the meridian at longitude lon.
    static Vec3 wall_point(double lon, double lat)
    {
        return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
    }

    /// Footpoint of the equator on wall alpha, the phase point psi_0 = (s0, pi/2).
    double equator_s() const { return 0.0; }

    SpherePiece piece_at(double s) const
    {
        s = wrap(s, length_);
        for (int i = 4; i > 0; --i)
            if (s >= starts_[i])
                return static_cast<SpherePiece>(i);
        return SpherePiece::AlphaSouth;
    }

    SpherePoint at(double s) const
    {
        s = wrap(s, length_);
        const SpherePiece k = piece_at(s);
        const double sigma = s - piece_start(k);
        SpherePoint out;
        out.piece = k;
        switch (k) {
        case SpherePiece::AlphaSouth:
        case SpherePiece::AlphaNorth: {
            const double lat = k == SpherePiece::AlphaSouth ? -sigma : spec_.north_latitude - sigma;
            out.position = wall_point(0.0, lat);
            out.tangent = Vec3(std::sin(lat), 0.0, -std::cos(lat));
            break;
        }
        case SpherePiece::Beta: {
            const double lat = -spec_.south_latitude + sigma;
            out.position = wall_point(theta_, lat);
            out.tangent = Vec3(-std::sin(lat) * std::cos(theta_), -std::sin(lat) * std::sin(theta_), std::cos(lat));
            break;
        }
        case SpherePiece::SouthCap:
        case SpherePiece::NorthCap: {
            const auto& c = cap(k);
            const double psi = c.table.parameter_at(sigma);
            out.position = c.point(psi);
            out.tangent = c.velocity(psi).normalized();
            break;
        }
        }
        out.normal = out.position.cross(out.tangent);
        return out;
    }

    /// Geodesic curvature N . dT/ds by central differences.
    double geodesic_curvature(double s, double h = 1e-5) const
    {
        const SpherePoint b = at(s);
        return b.normal.dot(at(s + h).tangent - at(s - h).tangent) / (2 * h);
    }

    struct Hit {
        double t = 0.0; // arclength along the geodesic
        double s = 0.0;
        SpherePiece piece = SpherePiece::AlphaSouth;
    };

    /// First boundary point of the great circle t -> x cos t + d sin t, t > t_min.
    std::optional<Hit> first_hit(const Vec3& x, const Vec3& d, double t_min = 1e-9) const
    {
        std::optional<Hit> best;
        auto offer = [&](double t, double s, SpherePiece k) {
            t = wrap(t, two_pi);
            if (t <= t_min || t >= two_pi - t_min)
                return;
            if (!best || t < best->t)
                best = Hit{t, wrap(s, length_), k};
        };
        // walls: half great circles, cut at the tangency latitudes
        for (int w = 0; w < 2; ++w) {
            const Vec3& n = w == 0 ? normal_alpha_ : normal_beta_;
            const Vec3 half = w == 0 ? Vec3(1, 0, 0) : Vec3(std::cos(theta_), std::sin(theta_), 0);
            const double a = n.dot(x), b = n.dot(d);
            const double t0 = std::atan2(-a, b);
            for (double t : {t0, t0 + pi}) {
                const Vec3 pt = x * std::cos(t) + d * std::sin(t);
                if (pt.dot(half) <= 0.0)
                    continue;
                const double lat = std::asin(std::clamp(pt.z(), -1.0, 1.0));
                if (lat < -spec_.south_latitude - 1e-13 || lat > spec_.north_latitude + 1e-13)
                    continue;
                if (w == 1)
                    offer(t, starts_[2] + lat + spec_.south_latitude, SpherePiece::Beta);
                else if (lat <= 0.0)
                    offer(t, -lat, SpherePiece::AlphaSouth);
                else
                    offer(t, starts_[4] + spec_.north_latitude - lat, SpherePiece::AlphaNorth);
            }
        }
        // caps: sign changes of m . point(psi), refined by bracketing
        const Vec3 m = x.cross(d);
        for (SpherePiece k : {SpherePiece::SouthCap, SpherePiece::NorthCap}) {
            const auto& c = cap(k);
            constexpr int samples = 64;
            auto g = [&](double psi) { return m.dot(c.point(psi)); };
            double a = -c.psi_t, ga = g(a);
            for (int i = 1; i <= samples; ++i) {
                const double b = -c.psi_t + 2.0 * c.psi_t * i / samples;
                const double gb = g(b);
                std::optional<double> root;
                if (gb == 0.0)
                    root = b;
                else if (ga * gb < 0.0) {
                    std::uintmax_t iters = 100;
                    const auto r = boost::math::tools::toms748_solve(g, a, b, ga, gb,
                                                                     boost::math::tools::eps_tolerance<double>(52), iters);
                    root = 0.5 * (r.first + r.second);
                }
                if (root) {
                    const Vec3 pt = c.point(*root);
                    offer(std::atan2(pt.dot(d), pt.dot(x)), starts_[static_cast<int>(k)] + c.table.arclength_at(*root), k);
                }
                a = b;
                ga = gb;
            }
        }
        return best;
    }

private:
    const detail::CapArc& cap(SpherePiece k) const
    {
        if (k == SpherePiece::SouthCap)
            return *south_;
        if (k == SpherePiece::NorthCap)
            return *north_;
        throw Error(ErrorKind::InvalidInput, "not a cap piece");
    }

    void check_cap(const detail::CapArc& c) const
    {
        constexpr int samples = 2000;
        for (int i = 1; i < samples; ++i) {
            const double psi = -c.psi_t + 2.0 * c.psi_t * i / samples;
            const double r = c.rho(psi);
            if (!(r > 0.0 && r < pi))
                throw Error(ErrorKind::BulgeTouchesMeridian, "cap bulge folds the cap through its centre");
            const Vec3 pt = c.point(psi);
            // strictly inside the lune: between the two meridian planes
            if (pt.dot(normal_alpha_) < -1e-12 || pt.dot(normal_beta_) > 1e-12 ||
                pt.dot(Vec3(std::cos(theta_ / 2), std::sin(theta_ / 2), 0)) < -1e-12)
                throw Error(ErrorKind::BulgeTouchesMeridian, "cap bulge crosses a meridian wall");
        }
    }

    SphereBigonSpec spec_;
    double theta_ = 0.0;
    Vec3 normal_alpha_, normal_beta_;
    std::shared_ptr<const detail::CapArc> south_, north_; // shared, immutable
    std::array<double, 5> lengths_{};
    std::array<double, 5> starts_{};
    double length_ = 0.0;
};

/// The same bigon with the caps pushed out (or in) by the given bulge amplitudes;
/// the walls are unchanged.
inline SphereBigonTable nonconvex_variant(const SphereBigonSpec& base, double south_bulge, double north_bulge)
{
    SphereBigonSpec s = base;
    s.south_bulge = south_bulge;
    s.north_bulge = north_bulge;
    return SphereBigonTable(s);
}

// ---- dynamics ----

struct SphereStep {
    SpherePhase next;
    Vec3 from;
    Vec3 to;
    Vec3 direction; // initial unit direction of the geodesic segment
    double length = 0.0;
    SpherePiece piece = SpherePiece::AlphaSouth; // piece that was hit
    double incidence = 0.0; // angle between the incoming direction and the boundary tangent
};

inline SphereStep sphere_geodesic_step(const SphereBigonTable& table, SpherePhase p)
{
    if (!(std::min(p.alpha, pi - p.alpha) > 1e-9))
        throw Error(ErrorKind::TangentialInput, "direction is tangent to the boundary or points outward");
    const SpherePoint b = table.at(p.s);
    const Vec3 d = std::cos(p.alpha) * b.tangent + std::sin(p.alpha) * b.normal;
    const auto hit = table.first_hit(b.position, d);
    if (!hit)
        throw Error(ErrorKind::NoIntersection, "geodesic does not meet the boundary");
    const SpherePoint h = table.at(hit->s);
    const Vec3 e = -b.position * std::sin(hit->t) + d * std::cos(hit->t);
    const double alpha1 = std::atan2(-e.dot(h.normal), e.dot(h.tangent));
    if (!(std::min(alpha1, pi - alpha1) > 1e-9))
        throw Error(ErrorKind::TangentialHit, "geodesic grazes the boundary");
    SphereStep out;
    out.next = {hit->s, alpha1};
    out.from = b.position;
    out.to = b.position * std::cos(hit->t) + d * std::sin(hit->t);
    out.direction = d;
    out.length = hit->t;
    out.piece = hit->piece;
    out.incidence = std::acos(std::clamp(e.dot(h.tangent), -1.0, 1.0));
    return out;
}

struct SphereUnfolding {
    std::vector<SpherePhase> points;
    std::vector<SphereStep> steps;
    std::vector<Mat3> copies;               // copies[k] maps the table to the k-th bigon image
    std::optional<std::size_t> closing_step; // first k > 0 with copies[k] = identity
    Vec3 geodesic_normal;                   // normal of the unfolded great circle
    double max_deviation = 0.0;             // of the unfolded segments from that great circle
    double total_length = 0.0;
};

inline Mat3 wall_reflection(const Vec3& n) { return Mat3::Identity() - 2.0 * n * n.transpose(); }

/// Follows the orbit for `steps` bounces, requiring every bounce on a meridian
/// wall, and lays the segments out along a single geodesic through reflected
/// copies of the table.
inline SphereUnfolding sphere_unfold(const SphereBigonTable& table, SpherePhase p, std::size_t steps)
{
    SphereUnfolding u;
    if (!is_wall(table.at(p.s).piece))
        throw Error(ErrorKind::WallExit, "orbit starts on a cap arc", 0);
    u.points.push_back(p);
    u.copies.push_back(Mat3::Identity());
    for (std::size_t k = 0; k < steps; ++k) {
        SphereStep st;
        try {
            st = sphere_geodesic_step(table, u.points.back());
        } catch (Error& e) {
            throw Error(e.kind(), e.what(), k);
        }
        if (!is_wall(st.piece))
            throw Error(ErrorKind::WallExit, "orbit reached a cap arc", k);
        if (k == 0)
            u.geodesic_normal = st.from.cross(st.direction).normalized();
        const Mat3& m = u.copies.back();
        const Vec3 mid = st.from * std::cos(st.length / 2) + st.direction * std::sin(st.length / 2);
        for (const Vec3& pt : {st.from, mid, st.to})
            u.max_deviation = std::max(u.max_deviation, std::abs(u.geodesic_normal.dot(m * pt)));
        u.total_length += st.length;
        u.copies.push_back(m * wall_reflection(table.wall_normal(st.piece)));
        if (!u.closing_step && (u.copies.back() - Mat3::Identity()).norm() <= 1e-10)
            u.closing_step = k + 1;
        u.points.push_back(st.next);
        u.steps.push_back(st);
    }
    return u;
}

// ---- open-set certificate ----

/// Phase point on wall alpha of the geodesic crossing alpha at latitude lat_x and
/// beta at latitude lat_y.
inline SpherePhase phase_from_wall_latitudes(const SphereBigonTable& table, double lat_x, double lat_y)
{
    const Vec3 x = SphereBigonTable::wall_point(0.0, lat_x), y = SphereBigonTable::wall_point(table.angle(), lat_y);
    const Vec3 d = (y - y.dot(x) * x).normalized();
    const double s = lat_x <= 0.0 ? -lat_x : table.length() - lat_x;
    const SpherePoint b = table.at(s);
    return {s, std::atan2(d.dot(b.normal), d.dot(b.tangent))};
}

/// Largest latitude reached by that geodesic.
inline double geodesic_max_latitude(const SphereBigonTable& table, double lat_x, double lat_y)
{
    const Vec3 x = SphereBigonTable::wall_point(0.0, lat_x), y = SphereBigonTable::wall_point(table.angle(), lat_y);
    const Vec3 m = x.cross(y).normalized();
    return std::asin(std::clamp(std::hypot(m.x(), m.y()), 0.0, 1.0));
}

struct SphereCertificateOptions {
    double eps = 1e-2;          // initial half-width for the adaptive search
    std::size_t samples = 10000;
    std::size_t max_halvings = 30;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    double period_tol = 1e-9;   // phase distance for returning to the start
    double length_tol = 1e-6;
};

struct SphereCertificate {
    int p = 0;
    int q = 0;
    double eps = 0.0;
    std::size_t halvings = 0;
    std::size_t samples = 0;
    // the sampled neighbourhood in phase coordinates (s wraps around s = 0)
    double s_min = 0.0, s_max = 0.0, alpha_min = 0.0, alpha_max = 0.0;
    std::map<std::size_t, std::size_t> min_period_histogram;
    std::size_t not_periodic = 0; // no return within 4q bounces
    double length_min = HUGE_VAL, length_max = 0.0; // geodesic length over the minimal period
    double max_length_error = 0.0;                  // |length - 2 p pi|
    std::size_t closing_min = 0, closing_max = 0;   // bounces until the bigon chain closes
    double max_unfold_deviation = 0.0;
    std::size_t centre_period = 0;
    double centre_length = 0.0;
    bool all_period_q = false;
    bool all_length_2ppi = false;
};

namespace detail {

struct SampleResult {
    std::size_t period = 0;
    double length = 0.0;
    std::size_t closing = 0;
    double deviation = 0.0;
    double s = 0.0, alpha = 0.0;
};

inline SampleResult run_sphere_sample(const SphereBigonTable& table, SpherePhase p0, const SphereCertificateOptions& opt)
{
    const std::size_t max_steps = 4 * static_cast<std::size_t>(table.q());
    const SphereUnfolding u = sphere_unfold(table, p0, max_steps);
    SampleResult r;
    r.s = p0.s;
    r.alpha = p0.alpha;
    r.deviation = u.max_deviation;
    r.closing = u.closing_step.value_or(0);
    const double L = table.length();
    double length = 0.0;
    for (std::size_t k = 1; k <= max_steps; ++k) {
        length += u.steps[k - 1].length;
        const SpherePhase& pk = u.points[k];
        if (std::hypot(wrapped_diff(pk.s, p0.s, L), pk.alpha - p0.alpha) <= opt.period_tol) {
            r.period = k;
            r.length = length;
            break;
        }
    }
    return r;
}

} // namespace detail

/// Samples geodesics crossing the walls within eps of the equator and checks
/// that each returns; throws wall-exit naming the first offending sample.
inline SphereCertificate open_set_certificate(const SphereBigonTable& table, double eps, std::size_t samples,
                                              const SphereCertificateOptions& opt = {})
{
    if (!(eps > 0.0) || samples == 0)
        throw Error(ErrorKind::InvalidInput, "certificate needs eps > 0 and samples > 0");
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> ud(-eps, eps);
    std::vector<std::pair<double, double>> lats(samples);
    for (auto& l : lats)
        l = {ud(rng), ud(rng)};

    struct Outcome {
        detail::SampleResult result;
        bool exit = false;
        std::size_t exit_step = 0;
    };
    const auto outcomes = parallel_map<Outcome>(samples, opt.jobs, [&](std::size_t i) {
        Outcome o;
        try {
            o.result = detail::run_sphere_sample(table, phase_from_wall_latitudes(table, lats[i].first, lats[i].second), opt);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::WallExit)
                throw;
            o.exit = true;
            o.exit_step = e.index().value_or(0);
        }
        return o;
    });
    for (std::size_t i = 0; i < samples; ++i)
        if (outcomes[i].exit) {
            std::ostringstream msg;
            msg << "sample " << i << " (wall latitudes " << lats[i].first << ", " << lats[i].second
                << ") reached a cap arc at bounce " << outcomes[i].exit_step;
            throw Error(ErrorKind::WallExit, msg.str(), i);
        }

    SphereCertificate c;
    c.p = table.p();
    c.q = table.q();
    c.eps = eps;
    c.samples = samples;
    const double L = table.length(), target = two_pi * table.p();
    c.s_min = HUGE_VAL;
    c.s_max = -HUGE_VAL;
    c.alpha_min = HUGE_VAL;
    c.alpha_max = -HUGE_VAL;
    c.closing_min = std::numeric_limits<std::size_t>::max();
    bool all_q = true, all_len = true;
    for (const auto& o : outcomes) {
        const auto& r = o.result;
        const double s = wrapped_diff(r.s, 0.0, L);
        c.s_min = std::min(c.s_min, s);
        c.s_max = std::max(c.s_max, s);
        c.alpha_min = std::min(c.alpha_min, r.alpha);
        c.alpha_max = std::max(c.alpha_max, r.alpha);
        c.max_unfold_deviation = std::max(c.max_unfold_deviation, r.deviation);
        c.closing_min = std::min(c.closing_min, r.closing);
        c.closing_max = std::max(c.closing_max, r.closing);
        if (r.period == 0) {
            ++c.not_periodic;
            all_q = all_len = false;
            continue;
        }
        ++c.min_period_histogram[r.period];
        c.length_min = std::min(c.length_min, r.length);
        c.length_max = std::max(c.length_max, r.length);
        const double err = std::abs(r.length - target);
        c.max_length_error = std::max(c.max_length_error, err);
        all_q = all_q && r.period == static_cast<std::size_t>(table.q());
        all_len = all_len && err <= opt.length_tol;
    }
    c.all_period_q = all_q;
    c.all_length_2ppi = all_len;
    const auto centre = detail::run_sphere_sample(table, {0.0, pi / 2}, opt);
    c.centre_period = centre.period;
    c.centre_length = centre.length;
    return c;
}

/// Starts at opt.eps and halves until no sample reaches a cap.
inline SphereCertificate certify_open_set(const SphereBigonTable& table, const SphereCertificateOptions& opt = {})
{
    double eps = opt.eps;
    for (std::size_t h = 0; h <= opt.max_halvings; ++h, eps /= 2) {
        try {
            SphereCertificate c = open_set_certificate(table, eps, opt.samples, opt);
            c.halvings = h;
            return c;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::WallExit)
                throw;
        }
    }
    throw Error(ErrorKind::WallExit, "no certified neighbourhood down to the smallest eps");
}

} // namespace billiards
