#pragma once

#include "billiards/beam.hpp"
#include "billiards/parallel.hpp"

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <tuple>
#include <string>

namespace billiards {

/// Footpoints (s_0, ..., s_{n-1}) of an inscribed n-gon, a point of the torus (dOmega)^n.
struct TorusConfiguration {
    std::vector<double> s;
    std::size_t n() const { return s.size(); }
};

inline void check_configuration(const BoundaryCurve& curve, const TorusConfiguration& cfg)
{
    if (cfg.n() < 2)
        throw Error(ErrorKind::InvalidInput, "configuration needs at least two points");
    const double L = curve.length();
    for (std::size_t i = 0; i < cfg.n(); ++i) {
        if (!std::isfinite(cfg.s[i]))
            throw Error(ErrorKind::InvalidInput, "configuration point is not finite");
        if (std::abs(wrapped_diff(cfg.s[i], cfg.s[(i + 1) % cfg.n()], L)) < 1e-12 * L)
            throw Error(ErrorKind::DegenerateString, "consecutive points of the configuration coincide")
                .at_index(i);
    }
}

/// p(s_0..s_{n-1}) = sum of l(s_i, s_{i+1}), indices mod n.
inline double perimeter(const BoundaryCurve& curve, const TorusConfiguration& cfg)
{
    check_configuration(curve, cfg);
    double p = 0.0;
    for (std::size_t i = 0; i < cfg.n(); ++i)
        p += (curve.position(cfg.s[(i + 1) % cfg.n()]) - curve.position(cfg.s[i])).norm();
    return p;
}

/// dp/ds_i = cos(alpha_in) - cos(alpha_out) at each vertex.
inline Eigen::VectorXd perimeter_gradient(const BoundaryCurve& curve, const TorusConfiguration& cfg)
{
    check_configuration(curve, cfg);
    const std::size_t n = cfg.n();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        const CurvePoint a = curve.at(cfg.s[i]), b = curve.at(cfg.s[j]);
        const Vec2 e = (b.position - a.position).normalized();
        g(static_cast<Eigen::Index>(i)) -= a.tangent.dot(e);
        g(static_cast<Eigen::Index>(j)) += b.tangent.dot(e);
    }
    return g;
}

inline Eigen::MatrixXd perimeter_hessian(const BoundaryCurve& curve, const TorusConfiguration& cfg)
{
    check_configuration(curve, cfg);
    const std::size_t n = cfg.n();
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(N, N);
    for (std::size_t i = 0; i < n; ++i) {
        const auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>((i + 1) % n);
        const CurvePoint a = curve.at(cfg.s[i]), b = curve.at(cfg.s[(i + 1) % n]);
        const Vec2 d = b.position - a.position;
        const double l = d.norm();
        const Vec2 e = d / l;
        const double ta = a.tangent.dot(e), tb = b.tangent.dot(e);
        h(I, I) += -a.curvature * perp(a.tangent).dot(e) + (1.0 - ta * ta) / l;
        h(J, J) += b.curvature * perp(b.tangent).dot(e) + (1.0 - tb * tb) / l;
        const double cross_term = -(a.tangent.dot(b.tangent) - ta * tb) / l;
        h(I, J) += cross_term;
        h(J, I) += cross_term;
    }
    return h;
}

// ---- periodic orbits ----

enum class Stability { Hyperbolic, Elliptic, Parabolic, DegeneratePlus, DegenerateMinus };

inline const char* stability_name(Stability s)
{
    switch (s) {
    case Stability::Hyperbolic:
        return "hyperbolic";
    case Stability::Elliptic:
        return "elliptic";
    case Stability::Parabolic:
        return "parabolic";
    case Stability::DegeneratePlus:
        return "degenerate_plus";
    case Stability::DegenerateMinus:
        return "degenerate_minus";
    }
    return "unknown";
}

inline bool is_degenerate(Stability s) { return s == Stability::DegeneratePlus || s == Stability::DegenerateMinus; }

struct ClassifyTolerances {
    double degenerate = 1e-6; // Frobenius distance of the monodromy to +-I
    double parabolic = 1e-6;  // | |trace| - 2 |
};

struct PeriodicOrbit {
    std::size_t n = 0;
    std::size_t minimal_period = 0;
    long winding = 0; // total number of turns around the table over n bounces
    std::vector<PhasePoint> points;
    std::vector<Chord> chords;
    Mat2 monodromy = Mat2::Identity();
    double trace = 2.0;
    double distance_to_identity = 0.0; // min ||M -+ I||_F
    Stability classification = Stability::Parabolic;
    double perimeter = 0.0;
    double closure_residual = 0.0;
    double gradient_norm = 0.0;

    /// Reduced rotation number winding / n as "p/q".
    std::string rotation_number() const
    {
        const long q = static_cast<long>(n);
        const long g = std::gcd(std::abs(winding), q);
        return std::to_string(winding / g) + "/" + std::to_string(q / g);
    }

    TorusConfiguration configuration() const
    {
        TorusConfiguration c;
        for (const auto& p : points)
            c.s.push_back(p.s);
        return c;
    }
};

inline Stability classify_monodromy(const Mat2& m, const ClassifyTolerances& tol, double* distance = nullptr)
{
    const double dp = frobenius_distance(m, Mat2::Identity()), dm = frobenius_distance(m, -Mat2::Identity());
    if (distance)
        *distance = std::min(dp, dm);
    if (std::min(dp, dm) <= tol.degenerate)
        return dp <= dm ? Stability::DegeneratePlus : Stability::DegenerateMinus;
    const double tr = m.trace();
    if (std::abs(std::abs(tr) - 2.0) <= tol.parabolic)
        return Stability::Parabolic;
    return std::abs(tr) > 2.0 ? Stability::Hyperbolic : Stability::Elliptic;
}

/// Recomputes monodromy, trace and classification of an orbit from its points.
inline void classify(const BoundaryCurve& curve, PeriodicOrbit& orbit, const ClassifyTolerances& tol = {})
{
    const OrbitTrace tr = iterate(curve, orbit.points.front(), orbit.n);
    orbit.monodromy = trace_differential(tr);
    orbit.trace = orbit.monodromy.trace();
    orbit.classification = classify_monodromy(orbit.monodromy, tol, &orbit.distance_to_identity);
}

/// Builds and verifies the orbit of a critical configuration by iterating F
/// from (s_0, angle of the first edge). Throws if the polygon is not a billiard orbit.
inline PeriodicOrbit orbit_from_configuration(const BoundaryCurve& curve, const TorusConfiguration& cfg,
                                              double closure_tol = 1e-9, const ClassifyTolerances& tol = {})
{
    check_configuration(curve, cfg);
    const std::size_t n = cfg.n();
    const double L = curve.length();
    const Chord first = chord(curve, cfg.s[0], cfg.s[1 % n]);
    const OrbitTrace tr = iterate(curve, {first.s0, first.alpha0}, n);
    PeriodicOrbit o;
    o.n = n;
    double residual = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
        residual = std::max(residual, std::abs(wrapped_diff(tr.points[i].s, cfg.s[i % n], L)));
    residual = std::max(residual, std::abs(tr.points[n].alpha - tr.points[0].alpha));
    o.closure_residual = residual;
    if (!(residual <= closure_tol))
        throw Error(ErrorKind::NoOrbitFound, "configuration does not close up under the billiard map");
    o.points.assign(tr.points.begin(), tr.points.end() - 1);
    o.chords = tr.chords;
    o.perimeter = 0.0;
    double turns = 0.0;
    for (const auto& c : tr.chords) {
        o.perimeter += c.l;
        turns += wrap(c.s1 - c.s0, L);
    }
    o.winding = std::lround(turns / L);
    o.minimal_period = n;
    for (std::size_t d = 1; d < n; ++d)
        if (n % d == 0) {
            bool closes = true;
            for (std::size_t i = 0; i < n && closes; ++i)
                closes = phase_distance(tr.points[i], tr.points[(i + d) % n], L) <= 1e-7 * std::max(1.0, L);
            if (closes) {
                o.minimal_period = d;
                break;
            }
        }
    o.monodromy = trace_differential(tr);
    o.trace = o.monodromy.trace();
    o.classification = classify_monodromy(o.monodromy, tol, &o.distance_to_identity);
    o.gradient_norm = perimeter_gradient(curve, cfg).norm();
    return o;
}

/// The same orbit started at point `shift`.
inline PeriodicOrbit cyclic_shift(const BoundaryCurve& curve, const PeriodicOrbit& o, std::size_t shift)
{
    TorusConfiguration c;
    for (std::size_t i = 0; i < o.n; ++i)
        c.s.push_back(o.points[(i + shift) % o.n].s);
    return orbit_from_configuration(curve, c);
}

/// Hausdorff distance between footpoint sets on the circle of length L.
inline double footpoint_distance(const std::vector<double>& a, const std::vector<double>& b, double L)
{
    auto one_sided = [L](const std::vector<double>& x, const std::vector<double>& y) {
        double worst = 0.0;
        for (double u : x) {
            double best = std::numeric_limits<double>::infinity();
            for (double v : y)
                best = std::min(best, std::abs(wrapped_diff(u, v, L)));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(one_sided(a, b), one_sided(b, a));
}

// ---- variational search ----

struct FindOptions {
    std::size_t offsets = 8;       // seeds per rotation number
    std::vector<long> rotations;   // winding numbers to seed; empty = 1 .. n/2
    std::size_t max_iterations = 60;
    double gradient_tol = 1e-11;
    double closure_tol = 1e-9;
    double dedup_tol = 1e-7;       // relative to L
    /// Declared symmetries of the table, as maps of the arclength coordinate.
    std::vector<std::function<double(double)>> symmetries;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    ClassifyTolerances classify;
};

struct SeedFailure {
    std::size_t seed_index = 0;
    long rotation = 0;
    std::string reason;
};

struct FindResult {
    std::vector<PeriodicOrbit> orbits;
    std::vector<SeedFailure> failures;
    std::size_t seeds = 0;
};

struct CriticalPointResult {
    TorusConfiguration cfg;
    double gradient_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Newton iteration on the perimeter gradient with a pseudo-inverse Hessian
/// and backtracking on |grad|; finds maxima and saddles alike.
inline CriticalPointResult find_critical_point(const BoundaryCurve& curve, TorusConfiguration cfg,
                                               std::size_t max_iterations = 60, double gradient_tol = 1e-11)
{
    const double L = curve.length();
    const std::size_t n = cfg.n();
    const double max_step = 0.25 * L / static_cast<double>(n);
    CriticalPointResult r;
    Eigen::VectorXd g = perimeter_gradient(curve, cfg);
    for (std::size_t it = 0; it < max_iterations; ++it) {
        r.iterations = it;
        if (g.norm() <= gradient_tol) {
            r.converged = true;
            break;
        }
        const Eigen::MatrixXd h = perimeter_hessian(curve, cfg);
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(h);
        cod.setThreshold(1e-10);
        Eigen::VectorXd d = -cod.solve(g);
        if (!d.allFinite())
            break;
        if (d.cwiseAbs().maxCoeff() > max_step)
            d *= max_step / d.cwiseAbs().maxCoeff();
        double t = 1.0;
        bool accepted = false;
        for (int k = 0; k < 30; ++k, t *= 0.5) {
            TorusConfiguration trial = cfg;
            for (std::size_t i = 0; i < n; ++i)
                trial.s[i] = wrap(cfg.s[i] + t * d(static_cast<Eigen::Index>(i)), L);
            try {
                const Eigen::VectorXd gt = perimeter_gradient(curve, trial);
                if (gt.norm() < g.norm() || (k == 29 && gt.allFinite())) {
                    cfg = trial;
                    g = gt;
                    accepted = true;
                    break;
                }
            } catch (const Error&) {
            }
        }
        if (!accepted)
            break;
    }
    r.cfg = cfg;
    r.gradient_norm = g.norm();
    r.converged = r.converged || r.gradient_norm <= gradient_tol;
    return r;
}

namespace detail {

inline bool same_orbit(const PeriodicOrbit& a, const PeriodicOrbit& b, double L, double tol,
                       const std::vector<std::function<double(double)>>& symmetries)
{
    if (a.n != b.n)
        return false;
    std::vector<double> sa, sb;
    for (const auto& p : a.points)
        sa.push_back(wrap(p.s, L));
    for (const auto& p : b.points)
        sb.push_back(wrap(p.s, L));
    if (footpoint_distance(sa, sb, L) <= tol)
        return true;
    for (const auto& sym : symmetries) {
        std::vector<double> image;
        for (double s : sb)
            image.push_back(wrap(sym(s), L));
        if (footpoint_distance(sa, image, L) <= tol)
            return true;
    }
    return false;
}

} // namespace detail

/// Merges orbits equal up to cyclic shift, reversal or a declared symmetry.
/// Keeps the first representative; input order decides which.
inline std::vector<PeriodicOrbit> deduplicate(const BoundaryCurve& curve, const std::vector<PeriodicOrbit>& orbits,
                                              double relative_tol = 1e-7,
                                              const std::vector<std::function<double(double)>>& symmetries = {})
{
    const double L = curve.length();
    std::vector<PeriodicOrbit> out;
    for (const auto& o : orbits) {
        bool dup = false;
        for (const auto& kept : out)
            if (detail::same_orbit(kept, o, L, relative_tol * L, symmetries)) {
                dup = true;
                break;
            }
        if (!dup)
            out.push_back(o);
    }
    return out;
}

/// Multistart critical-point search of the perimeter on the n-torus, seeded by
/// evenly spaced n-gons winding p times, jittered by a seeded RNG.
inline FindResult find_periodic(const BoundaryCurve& curve, std::size_t n, const FindOptions& opt = {})
{
    if (n < 2)
        throw Error(ErrorKind::InvalidInput, "period must be at least 2");
    const double L = curve.length();
    std::vector<long> rotations = opt.rotations;
    if (rotations.empty())
        for (long p = 1; p <= static_cast<long>(n / 2); ++p)
            rotations.push_back(p);

    struct Seed {
        long rotation;
        TorusConfiguration cfg;
    };
    std::vector<Seed> seeds;
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> jitter(-0.02, 0.02);
    for (long p : rotations) {
        if (p < 1 || p >= static_cast<long>(n))
            throw Error(ErrorKind::InvalidInput, "rotation number must satisfy 0 < p < n");
        for (std::size_t k = 0; k < opt.offsets; ++k) {
            TorusConfiguration cfg;
            const double s0 = L * static_cast<double>(k) / static_cast<double>(opt.offsets * n);
            for (std::size_t i = 0; i < n; ++i) {
                const double spacing = static_cast<double>(p) * L / static_cast<double>(n);
                const double j = k == 0 ? 0.0 : jitter(rng) * L / static_cast<double>(n);
                cfg.s.push_back(wrap(s0 + static_cast<double>(i) * spacing + j, L));
            }
            seeds.push_back({p, cfg});
        }
    }

    struct Outcome {
        std::optional<PeriodicOrbit> orbit;
        std::string failure;
    };
    const auto outcomes = parallel_map<Outcome>(seeds.size(), opt.jobs, [&](std::size_t i) {
        Outcome out;
        try {
            const auto cp = find_critical_point(curve, seeds[i].cfg, opt.max_iterations, opt.gradient_tol);
            if (!cp.converged) {
                out.failure = "no-orbit-found: gradient did not vanish";
                return out;
            }
            out.orbit = orbit_from_configuration(curve, cp.cfg, opt.closure_tol, opt.classify);
        } catch (const Error& e) {
            out.failure = std::string(e.name()) + ": " + e.what();
        }
        return out;
    });

    FindResult res;
    res.seeds = seeds.size();
    std::vector<PeriodicOrbit> found;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].orbit)
            found.push_back(*outcomes[i].orbit);
        else
            res.failures.push_back({i, seeds[i].rotation, outcomes[i].failure});
    }
    res.orbits = deduplicate(curve, found, opt.dedup_tol, opt.symmetries);
    std::sort(res.orbits.begin(), res.orbits.end(), [](const PeriodicOrbit& a, const PeriodicOrbit& b) {
        if (a.winding != b.winding)
            return a.winding < b.winding;
        return a.perimeter > b.perimeter;
    });
    return res;
}

// ---- degeneracy detectors ----

struct GeometricDegeneracy {
    bool even_n = false;
    std::vector<double> edge_residuals; // l_i - lambda_i - lambda_{i+1}
    double max_edge_residual = 0.0;
    double product_residual = 0.0;      // relative
    bool degenerate = false;
};

inline GeometricDegeneracy degeneracy_geometric(const BoundaryCurve& curve, const PeriodicOrbit& orbit,
                                                double tol = 1e-8)
{
    GeometricDegeneracy r;
    const std::size_t n = orbit.n;
    r.even_n = n % 2 == 0;
    std::vector<double> lam(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double k = curve.curvature(orbit.points[i].s);
        lam[i] = std::abs(k) < 1e-14 ? std::numeric_limits<double>::infinity()
                                     : std::sin(orbit.points[i].alpha) / (2.0 * k);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double res = orbit.chords[i].l - lam[i] - lam[(i + 1) % n];
        r.edge_residuals.push_back(res);
        r.max_edge_residual = std::max(r.max_edge_residual, std::isfinite(res) ? std::abs(res) : HUGE_VAL);
    }
    double even = 1.0, odd = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        (i % 2 == 0 ? even : odd) *= lam[i];
    const double scale = std::max(std::abs(even), std::abs(odd));
    r.product_residual = std::isfinite(scale) && scale > 0.0 ? std::abs(even - odd) / scale : HUGE_VAL;
    if (!r.even_n)
        r.product_residual = std::isfinite(r.product_residual) ? r.product_residual : HUGE_VAL;
    r.degenerate = r.even_n && r.max_edge_residual <= tol * curve.diameter() && r.product_residual <= tol;
    return r;
}

struct FocusingDegeneracy {
    double expected_sign = 0.0;  // +1 if n = 0 mod 4, -1 if n = 2 mod 4, 0 for odd n
    double max_residual = 0.0;   // max over samples of |prod (x_i/lambda_i - 1) - sign|, relative
    double min_residual = HUGE_VAL;
    double max_return = 0.0; // max projective distance between x_n and x_0
    std::size_t evaluated = 0;
    std::size_t poles_skipped = 0;
    bool degenerate = false;
};

/// Tests prod_i (x_i - lambda_i) = +-prod_i lambda_i along the orbit for every
/// sample focus x_0 and every cyclic starting point; written with mu = 1/lambda
/// as prod (mu_i x_i - 1) = +-1. On straight pieces mu = 0 and the product is
/// trivially +-1, so the focus is also required to come back: x_n = x_0.
inline FocusingDegeneracy degeneracy_focusing(const BoundaryCurve& curve, const PeriodicOrbit& orbit,
                                              const std::vector<double>& x0_samples, double tol = 1e-8)
{
    FocusingDegeneracy r;
    const std::size_t n = orbit.n;
    if (n % 2 == 0)
        r.expected_sign = (n / 2) % 2 == 0 ? 1.0 : -1.0;
    for (std::size_t start = 0; start < n; ++start) {
        const OrbitTrace tr = iterate(curve, orbit.points[start], n);
        for (double x0 : x0_samples) {
            const auto xs = propagate(tr, ProjPoint::finite(x0));
            double prod = 1.0;
            bool pole = false;
            for (std::size_t i = 1; i <= n; ++i) {
                if (xs[i].is_infinite(1e-9)) {
                    pole = true;
                    break;
                }
                prod *= tr.inverse_focals[i] * xs[i].value() - 1.0;
            }
            if (pole) {
                ++r.poles_skipped;
                continue;
            }
            const double scale = std::max(1.0, std::abs(prod));
            const double res = n % 2 == 0 ? std::abs(prod - r.expected_sign) / scale
                                          : std::min(std::abs(prod - 1.0), std::abs(prod + 1.0)) / scale;
            r.max_residual = std::max(r.max_residual, res);
            r.min_residual = std::min(r.min_residual, res);
            r.max_return = std::max(r.max_return, projective_distance(xs[n], xs[0]));
            ++r.evaluated;
        }
    }
    r.degenerate = r.evaluated > 0 && r.max_residual <= tol && r.max_return <= tol;
    return r;
}

// ---- phase-space atlas ----

struct AtlasPoint {
    PhasePoint point;
    std::size_t n = 0;             // period used in the refinement
    std::size_t minimal_period = 0;
    Stability classification = Stability::Parabolic;
    double residual = 0.0;
    /// Unit tangent (ds, dalpha) of the curve of periodic points through a
    /// parabolic point, the kernel of DF^n - I; zero otherwise.
    Vec2 tangent = Vec2::Zero();
};

enum class ClusterShape { Point, Curve, Area };

inline const char* cluster_shape_name(ClusterShape s)
{
    switch (s) {
    case ClusterShape::Point:
        return "point";
    case ClusterShape::Curve:
        return "curve";
    case ClusterShape::Area:
        return "area";
    }
    return "unknown";
}

struct AtlasCluster {
    std::size_t minimal_period = 0;
    std::vector<std::size_t> members; // indices into Atlas::points
    double extent = 0.0;              // in cell units
    double thickness = 0.0;           // largest local transverse spread, in cell units
    ClusterShape shape = ClusterShape::Point;
};

struct Atlas {
    std::size_t grid_s = 0, grid_alpha = 0, n_max = 0;
    std::vector<AtlasPoint> points;
    std::vector<AtlasCluster> clusters;
    std::size_t occupied_cells = 0;
    double occupied_fraction = 0.0;
    std::size_t failed_cells = 0;
};

struct ScanOptions {
    std::size_t max_iterations = 12;
    double residual_tol = 1e-10;
    /// Also add the orbits of a seeded perimeter search for every n: strongly
    /// hyperbolic orbits have tiny Newton basins in phase space.
    bool variational_seeds = true;
    std::size_t variational_offsets = 8;
    unsigned jobs = 1;
    ClassifyTolerances classify;
};

namespace detail {

/// Newton on G(psi) = F^n(psi) - psi with the pseudo-inverse of DF^n - I.
inline std::optional<PhasePoint> refine_periodic(const BoundaryCurve& curve, PhasePoint p, std::size_t n,
                                                 const ScanOptions& opt, double max_step, double* residual)
{
    const double L = curve.length();
    for (std::size_t it = 0; it <= opt.max_iterations; ++it) {
        const OrbitTrace tr = iterate(curve, p, n);
        const Vec2 g(wrapped_diff(tr.points[n].s, p.s, L), tr.points[n].alpha - p.alpha);
        if (g.norm() <= opt.residual_tol) {
            *residual = g.norm();
            return p;
        }
        if (it == opt.max_iterations)
            break;
        const Mat2 a = trace_differential(tr) - Mat2::Identity();
        Eigen::CompleteOrthogonalDecomposition<Mat2> cod(a);
        cod.setThreshold(1e-9);
        Vec2 d = -cod.solve(g);
        if (!d.allFinite())
            return std::nullopt;
        if (d.norm() > max_step)
            d *= max_step / d.norm();
        p = {wrap(p.s + d.x(), L), p.alpha + d.y()};
        if (!(p.alpha > 1e-6 && p.alpha < pi - 1e-6))
            return std::nullopt;
    }
    return std::nullopt;
}

/// Full width (2 max |residual|) of the least-squares quadratic y(x) through
/// the points, with x the coordinate `axis`.
inline double quadratic_width(const std::vector<Vec2>& pts, int axis)
{
    Eigen::MatrixXd a(pts.size(), 3);
    Eigen::VectorXd y(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double x = pts[i](axis);
        a.row(i) << 1.0, x, x * x;
        y(i) = pts[i](1 - axis);
    }
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(y);
    return 2.0 * (a * coef - y).cwiseAbs().maxCoeff();
}

inline void analyse_clusters(Atlas& atlas, double cell_s, double cell_a, double L)
{
    // single-linkage clustering per minimal period, link radius two cells
    std::map<std::size_t, std::vector<std::size_t>> by_period;
    for (std::size_t i = 0; i < atlas.points.size(); ++i)
        by_period[atlas.points[i].minimal_period].push_back(i);
    auto scaled = [&](std::size_t i, std::size_t j) {
        const auto& a = atlas.points[i].point;
        const auto& b = atlas.points[j].point;
        return Vec2(wrapped_diff(b.s, a.s, L) / cell_s, (b.alpha - a.alpha) / cell_a);
    };
    auto scaled_tangent = [&](const Vec2& t) {
        const Vec2 v(t.x() / cell_s, t.y() / cell_a);
        return v.norm() > 0.0 ? Vec2(v.normalized()) : Vec2(Vec2::Zero());
    };
    for (const auto& [period, idx] : by_period) {
        std::vector<int> label(idx.size(), -1);
        int next = 0;
        for (std::size_t a = 0; a < idx.size(); ++a) {
            if (label[a] >= 0)
                continue;
            label[a] = next;
            std::vector<std::size_t> stack{a};
            while (!stack.empty()) {
                const std::size_t u = stack.back();
                stack.pop_back();
                for (std::size_t v = 0; v < idx.size(); ++v)
                    if (label[v] < 0 && scaled(idx[u], idx[v]).norm() <= 2.0) {
                        label[v] = next;
                        stack.push_back(v);
                    }
            }
            ++next;
        }
        for (int c = 0; c < next; ++c) {
            AtlasCluster cl;
            cl.minimal_period = period;
            for (std::size_t a = 0; a < idx.size(); ++a)
                if (label[a] == c)
                    cl.members.push_back(idx[a]);
            for (std::size_t u : cl.members) {
                // Local width: residual of a quadratic through the members within
                // three cells. Along a curve of parabolic points the fit is taken
                // in the frame of the kernel tangent, over the members whose
                // tangent agrees, so that branches crossing near a saddle are kept
                // apart; otherwise as a graph over s or over alpha.
                const Vec2 tu = scaled_tangent(atlas.points[u].tangent);
                std::vector<Vec2> nb, branch;
                for (std::size_t v : cl.members) {
                    const Vec2 d = scaled(u, v);
                    cl.extent = std::max(cl.extent, d.norm());
                    if (d.norm() > 3.0)
                        continue;
                    nb.push_back(d);
                    const Vec2 tv = scaled_tangent(atlas.points[v].tangent);
                    if (tu.norm() > 0.0 && tv.norm() > 0.0 && std::abs(cross(tu, tv)) <= 0.15)
                        branch.push_back(Vec2(d.dot(tu), cross(tu, d)));
                }
                double width = 0.0;
                if (tu.norm() > 0.0) {
                    if (branch.size() >= 4)
                        width = quadratic_width(branch, 0);
                } else if (nb.size() >= 4) {
                    width = std::min(quadratic_width(nb, 0), quadratic_width(nb, 1));
                }
                cl.thickness = std::max(cl.thickness, width);
            }
            cl.shape = cl.extent <= 1.0 ? ClusterShape::Point
                                        : (cl.thickness <= 1.0 ? ClusterShape::Curve : ClusterShape::Area);
            atlas.clusters.push_back(std::move(cl));
        }
    }
}

} // namespace detail

/// Newton-refines every grid cell centre toward per_n, n = 2..n_max, and
/// summarizes the located periodic set. The occupied fraction is an empirical
/// proxy, not a proof, of nowhere density.
inline Atlas scan_phase_space(const BoundaryCurve& curve, std::size_t n_max, std::size_t grid_s,
                              std::size_t grid_alpha, const ScanOptions& opt = {})
{
    if (n_max < 2 || grid_s == 0 || grid_alpha == 0)
        throw Error(ErrorKind::InvalidInput, "atlas needs n_max >= 2 and a nonempty grid");
    const double L = curve.length();
    const double cell_s = L / static_cast<double>(grid_s), cell_a = pi / static_cast<double>(grid_alpha);
    Atlas atlas;
    atlas.grid_s = grid_s;
    atlas.grid_alpha = grid_alpha;
    atlas.n_max = n_max;

    // all points of the orbit through p, tagged with its minimal period
    auto orbit_points = [&](PhasePoint p, std::size_t n, double residual, std::vector<AtlasPoint>& out) {
        const OrbitTrace tr = iterate(curve, p, n);
        std::size_t minimal = n;
        for (std::size_t d = 1; d < n; ++d)
            if (n % d == 0 && phase_distance(tr.points[d], tr.points[0], L) <= 1e-8) {
                minimal = d;
                break;
            }
        const OrbitTrace once = iterate(curve, p, minimal);
        const Mat2 m = trace_differential(once);
        const Stability cls = classify_monodromy(m, opt.classify);
        Vec2 t = Vec2::Zero();
        if (cls == Stability::Parabolic && m.trace() > 0.0) {
            const Eigen::JacobiSVD<Mat2> svd(m - Mat2::Identity(), Eigen::ComputeFullV);
            t = svd.matrixV().col(1);
        }
        for (std::size_t k = 0; k < minimal; ++k) {
            AtlasPoint ap;
            ap.point = {wrap(tr.points[k].s, L), tr.points[k].alpha};
            ap.n = n;
            ap.minimal_period = minimal;
            ap.classification = cls;
            ap.residual = residual;
            if (t.norm() > 0.0)
                ap.tangent = t.normalized();
            t = jacobian_from_chord(once.chords[k], once.curvatures[k], once.curvatures[k + 1]) * t;
            out.push_back(ap);
        }
    };

    struct CellResult {
        std::vector<AtlasPoint> found;
        bool failed = false;
    };
    const std::size_t cells = grid_s * grid_alpha;
    auto results = parallel_map<CellResult>(cells, opt.jobs, [&](std::size_t c) {
        CellResult out;
        const std::size_t i = c / grid_alpha, j = c % grid_alpha;
        const PhasePoint centre{(static_cast<double>(i) + 0.5) * cell_s, (static_cast<double>(j) + 0.5) * cell_a};
        for (std::size_t n = 2; n <= n_max; ++n) {
            std::optional<PhasePoint> p;
            double residual = 0.0;
            try {
                p = detail::refine_periodic(curve, centre, n, opt, 4.0 * std::hypot(cell_s, cell_a), &residual);
            } catch (const Error&) {
            }
            if (!p)
                continue;
            try {
                orbit_points(*p, n, residual, out.found);
            } catch (const Error&) {
                out.failed = true;
            }
        }
        return out;
    });
    if (opt.variational_seeds) {
        FindOptions fo;
        fo.offsets = opt.variational_offsets;
        fo.jobs = opt.jobs;
        fo.classify = opt.classify;
        CellResult extra;
        for (std::size_t n = 2; n <= n_max; ++n)
            for (const auto& o : find_periodic(curve, n, fo).orbits)
                try {
                    // the search merges an orbit with its reversal; the atlas keeps both
                    orbit_points(o.points.front(), n, o.closure_residual, extra.found);
                    orbit_points(reversed(o.points.front()), n, o.closure_residual, extra.found);
                } catch (const Error&) {
                }
        results.push_back(std::move(extra));
    }

    std::vector<bool> occupied(cells, false);
    std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
    for (const auto& r : results) {
        if (r.failed)
            ++atlas.failed_cells;
        for (const auto& ap : r.found) {
            // one representative per (minimal period, cell)
            const std::size_t i = std::min(grid_s - 1, static_cast<std::size_t>(wrap(ap.point.s, L) / cell_s));
            const std::size_t j = std::min(grid_alpha - 1, static_cast<std::size_t>(ap.point.alpha / cell_a));
            occupied[i * grid_alpha + j] = true;
            const auto key = std::make_tuple(ap.minimal_period, i, j);
            if (seen.insert(key).second)
                atlas.points.push_back(ap);
        }
    }
    atlas.occupied_cells = static_cast<std::size_t>(std::count(occupied.begin(), occupied.end(), true));
    atlas.occupied_fraction = static_cast<double>(atlas.occupied_cells) / static_cast<double>(cells);
    detail::analyse_clusters(atlas, cell_s, cell_a, L);
    return atlas;
}

} // namespace billiards
