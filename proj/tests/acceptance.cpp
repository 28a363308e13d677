// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "billiards/beam.hpp"
#include "billiards/identity.hpp"
#include "billiards/periodic.hpp"
#include "billiards/sphere.hpp"
#include "billiards/torus_map.hpp"
#include "test_tables.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

using namespace billiards;
using namespace billiards::testing;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

OrbitTrace random_orbit(const BoundaryCurve& c, std::size_t k, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> us(0.0, c.length()), ua(0.2, pi - 0.2);
    for (;;) {
        try {
            return iterate(c, {us(rng), ua(rng)}, k);
        } catch (const Error&) {
        }
    }
}

// 1
Verdict measure_identity()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t points = 0;
    double worst_forward = 0.0, worst_inverse = 0.0;
    std::mt19937_64 rng(1);
    for (const auto& c : {unit_circle(), ellipse21(), nonconvex_table()}) {
        std::uniform_real_distribution<double> us(0.0, c.length()), ua(0.05, pi - 0.05);
        std::size_t done = 0;
        while (done < 1000) {
            const PhasePoint p{us(rng), ua(rng)};
            try {
                const StepResult r = step_chord(c, p);
                const double forward = jacobian_from_chord(r.chord, r.kappa0, r.kappa1).determinant();
                // the inverse map is the reversed chord, F^-1 = R F R with R(s, a) = (s, pi - a)
                const double inverse = jacobian(c, {r.next.s, pi - r.next.alpha}).determinant();
                const double s0 = std::sin(p.alpha), s1 = std::sin(r.next.alpha);
                worst_forward = std::max(worst_forward, std::abs(forward - s0 / s1));
                worst_inverse = std::max(worst_inverse, std::abs(inverse - s1 / s0));
                ++done;
            } catch (const Error&) {
            }
        }
        points += done;
    }
    const double t = seconds_since(t0);
    return {points >= 3000 && worst_forward <= 1e-8 && worst_inverse <= 1e-8 && t < 5.0,
            fmt("%zu points on circle/ellipse/nonconvex; max |det DF - sin a0/sin a1| = %.2e, "
                "max |det DF^-1 - sin a1/sin a0| = %.2e; %.2f s",
                points, worst_forward, worst_inverse, t)};
}

// 2
Verdict derivative_product_formula()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ux(-1.0, 1.0);
    std::size_t orbits = 0, compared = 0, skipped = 0;
    double worst_map = 0.0, worst_fd = 0.0;
    for (const auto& c : {ellipse21(), perturbed_circle(), nonconvex_table()}) {
        int done = 0;
        while (done < 20) {
            const OrbitTrace tr = random_orbit(c, 20, rng);
            ++done;
            ++orbits;
            for (std::size_t k : {1u, 2u, 5u, 10u, 20u}) {
                const double x0 = ux(rng);
                const auto dp = derivative_product(tr, ProjPoint::finite(x0), k);
                const auto xs = propagate(tr, ProjPoint::finite(x0));
                bool near_pole = dp.pole_chart;
                for (std::size_t i = 0; i <= k; ++i)
                    near_pole = near_pole || std::abs(xs[i].value()) > 1e3 * c.diameter();
                if (near_pole) {
                    ++skipped;
                    continue;
                }
                // (a) composed projective map
                const double an = focusing_map(tr, k).derivative(x0);
                worst_map = std::max(worst_map, std::abs(dp.value - an) / std::abs(an));
                // (b) five-point differences of each mirror step x_i -> x_{i+1}, chained; the
                // composed map alone contracts below what differences of doubles can resolve
                double fd = 1.0;
                bool resolved = true;
                for (std::size_t i = 0; i < k && resolved; ++i) {
                    const ProjectiveMap b = step_map(tr, i);
                    const double x = xs[i].value();
                    const double pole_gap = b.c() == 0.0 ? HUGE_VAL : std::abs(x + b.d() / b.c());
                    const double h = 1e-3 * std::min(std::max(1.0, std::abs(x)), pole_gap);
                    double f[4];
                    const double offsets[4] = {2 * h, h, -h, -2 * h};
                    for (int m = 0; m < 4; ++m) {
                        const ProjPoint y = b(ProjPoint::finite(x + offsets[m]));
                        resolved = resolved && !y.is_infinite() && std::abs(y.value()) <= 1e3 * c.diameter();
                        f[m] = resolved ? y.value() : 0.0;
                    }
                    fd *= (-f[0] + 8 * f[1] - 8 * f[2] + f[3]) / (12 * h);
                }
                if (!resolved) {
                    ++skipped;
                    continue;
                }
                worst_fd = std::max(worst_fd, std::abs(dp.value - fd) / std::abs(fd));
                ++compared;
            }
        }
    }
    const double t = seconds_since(t0);
    return {orbits >= 50 && worst_map <= 1e-6 && worst_fd <= 1e-6 && t < 10.0,
            fmt("%zu orbits, %zu (orbit, k<=20) samples, %zu near poles skipped; max rel. error vs composed map %.2e, "
                "vs finite differences %.2e; %.2f s",
                orbits, compared, skipped, worst_map, worst_fd, t)};
}

// 3
Verdict linearity_lemma()
{
    std::mt19937_64 rng(3);
    std::size_t steps = 0, violations = 0;
    for (const auto& c : {unit_circle(), ellipse21(), perturbed_circle(), nonconvex_table()}) {
        for (int n = 0; n < 125; ++n) {
            const auto prof = linearity_profile(random_orbit(c, 20, rng), 20);
            violations += prof.empty() || prof[0];
            for (std::size_t i = 1; i < prof.size(); ++i)
                violations += prof[i] && prof[i - 1];
            steps += prof.size();
        }
    }
    return {steps >= 10000 && violations == 0,
            fmt("%zu orbit-steps on circle/ellipse/perturbed circle/nonconvex (curved pieces); %zu violations", steps,
                violations)};
}

// 4
Verdict circle_identity()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto circle = unit_circle();
    const auto scan = identity_scan(circle, {0.0, two_pi}, {0.0, two_pi}, 0.0, 200, 200);
    double weakest = HUGE_VAL;
    std::size_t pairs = 0;
    for (const auto& c : {ellipse21(), perturbed_circle()}) {
        const double L = c.length();
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                const auto w = identity_scan(c, {i * L / 4, (i + 1) * L / 4}, {j * L / 4, (j + 1) * L / 4}, 1.0, 25, 25);
                weakest = std::min(weakest, w.max_abs);
                ++pairs;
            }
    }
    const double t = seconds_since(t0);
    return {scan.max_abs <= 1e-10 && weakest > 1e-3 && t < 10.0,
            fmt("circle c=0 200x200 max residual %.2e (%zu chords); c=1 on ellipse and perturbed circle: smallest "
                "window-pair max %.3e over %zu window pairs; %.2f s",
                scan.max_abs, scan.evaluated, weakest, pairs, t)};
}

// 5
Verdict variational_equivalence()
{
    std::mt19937_64 rng(5);
    std::size_t forward = 0, backward = 0, negatives = 0, bad = 0;
    double worst_closure = 0.0, worst_gradient = 0.0;
    for (const auto& c : {ellipse21(), perturbed_circle()}) {
        const double L = c.length();
        std::uniform_real_distribution<double> jitter(-0.03, 0.03), us(0.0, L), ua(0.1, pi - 0.1);
        for (std::size_t n : {2u, 3u, 4u, 5u}) {
            // critical configuration => closed orbit
            for (int k = 0; k < 15; ++k) {
                TorusConfiguration cfg;
                const long p = 1 + static_cast<long>(k % std::max<std::size_t>(1, n / 2));
                for (std::size_t i = 0; i < n; ++i)
                    cfg.s.push_back(wrap(L * (static_cast<double>(i * p) / n + jitter(rng)), L));
                const auto cp = find_critical_point(c, cfg);
                if (!cp.converged)
                    continue;
                try {
                    const auto o = orbit_from_configuration(c, cp.cfg, 1e-8);
                    worst_closure = std::max(worst_closure, o.closure_residual);
                    ++forward;
                } catch (const Error&) {
                    ++bad;
                }
            }
            // closed orbit (Newton on F^n - id in phase space) => critical configuration
            ScanOptions opt;
            for (int k = 0; k < 40 && backward < 200; ++k) {
                double residual = 0.0;
                const auto pp = detail::refine_periodic(c, {us(rng), ua(rng)}, n, opt, 0.2, &residual);
                if (!pp)
                    continue;
                const auto tr = iterate(c, *pp, n);
                TorusConfiguration cfg;
                for (std::size_t i = 0; i < n; ++i)
                    cfg.s.push_back(tr.points[i].s);
                try {
                    const double g = perimeter_gradient(c, cfg).norm();
                    worst_gradient = std::max(worst_gradient, g);
                    ++backward;
                } catch (const Error&) {
                }
            }
            // neither: generic configurations are not critical and do not close
            for (int k = 0; k < 10; ++k) {
                TorusConfiguration cfg;
                for (std::size_t i = 0; i < n; ++i)
                    cfg.s.push_back(wrap(L * (static_cast<double>(i) / n + 3 * jitter(rng)), L));
                try {
                    const double g = perimeter_gradient(c, cfg).norm();
                    bool closes = true;
                    try {
                        orbit_from_configuration(c, cfg, 1e-8);
                    } catch (const Error&) {
                        closes = false;
                    }
                    if (g > 1e-8 && !closes)
                        ++negatives;
                    else
                        ++bad;
                } catch (const Error&) {
                }
            }
        }
    }
    return {forward + backward >= 100 && forward >= 50 && backward >= 50 && bad == 0 && worst_closure <= 1e-8 &&
                worst_gradient <= 1e-8,
            fmt("gradient-zero => closure on %zu configurations (max closure residual %.2e); closure => gradient-zero "
                "on %zu orbits (max |grad| %.2e); %zu generic configurations neither; %zu contradictions",
                forward, worst_closure, backward, worst_gradient, negatives, bad)};
}

// 6
Verdict birkhoff_orbits()
{
    const auto tri = find_periodic(unit_circle(), 3).orbits;
    double tri_err = tri.empty() ? HUGE_VAL : 0.0;
    for (const auto& o : tri)
        tri_err = std::max(tri_err, std::abs(o.perimeter - 3 * std::sqrt(3.0)));
    const auto axes = find_periodic(ellipse21(), 2).orbits;
    std::vector<double> per;
    for (const auto& o : axes)
        per.push_back(o.perimeter);
    std::sort(per.begin(), per.end());
    const bool axes_ok = per.size() == 2 && std::abs(per[0] - 4.0) <= 1e-8 && std::abs(per[1] - 8.0) <= 1e-8;
    return {tri_err <= 1e-8 && axes_ok,
            fmt("circle n=3: %zu orbits, max |perimeter - 3 sqrt 3| = %.2e; ellipse n=2: %zu orbits, perimeters %s",
                tri.size(), tri_err, axes.size(),
                per.size() == 2 ? fmt("%.10f, %.10f", per[0], per[1]).c_str() : "?")};
}

// 7 and 8
struct DetectorStats {
    std::size_t orbits = 0, odd = 0, disagreements = 0, odd_violations = 0, degenerate = 0, circle = 0,
                circle_bad = 0;
};

DetectorStats run_detectors()
{
    const std::vector<double> x_samples{-0.83, -0.21, 0.37, 0.94, 1.61};
    DetectorStats st;
    auto check = [&](const BoundaryCurve& c, const PeriodicOrbit& o, bool is_circle) {
        const bool spectral = is_degenerate(o.classification);
        const bool geo = degeneracy_geometric(c, o).degenerate;
        const bool foc = degeneracy_focusing(c, o, x_samples).degenerate;
        ++st.orbits;
        st.disagreements += spectral != geo || spectral != foc;
        st.degenerate += spectral && geo && foc;
        if (o.n % 2 == 1) {
            ++st.odd;
            st.odd_violations += spectral || geo || foc;
        }
        if (is_circle) {
            ++st.circle;
            st.circle_bad += !(o.classification == Stability::Parabolic && std::abs(std::abs(o.trace) - 2.0) <= 1e-6 &&
                               o.distance_to_identity >= 1e-3);
        }
    };
    const std::vector<std::pair<BoundaryCurve, bool>> tables{{unit_circle(), true},      {ellipse21(), false},
                                                             {perturbed_circle(), false}, {stadium(), false},
                                                             {nonconvex_table(), false}};
    for (const auto& [c, is_circle] : tables)
        for (std::size_t n = 2; n <= 7; ++n) {
            FindOptions opt;
            opt.offsets = 2;
            for (const auto& o : find_periodic(c, n, opt).orbits)
                check(c, o, is_circle);
        }
    // positive control: the lens 2-orbit is degenerate
    const auto l = lens();
    TorusConfiguration cfg;
    cfg.s = {lens_right_midpoint(), lens_left_midpoint()};
    check(l, orbit_from_configuration(l, cfg), false);
    return st;
}

Verdict classification_coherence(const DetectorStats& st)
{
    return {st.orbits > 0 && st.disagreements == 0 && st.degenerate >= 1 && st.circle > 0 && st.circle_bad == 0,
            fmt("%zu orbits (n=2..7 on circle/ellipse/perturbed circle/stadium/nonconvex, plus the lens control): "
                "%zu disagreements, %zu degenerate by all three; %zu circle orbits, %zu not parabolic",
                st.orbits, st.disagreements, st.degenerate, st.circle, st.circle_bad)};
}

Verdict odd_period(const DetectorStats& st)
{
    return {st.odd > 0 && st.odd_violations == 0,
            fmt("%zu odd-period orbits tested; %zu flagged degenerate by any detector", st.odd, st.odd_violations)};
}

// 9
Verdict empty_interior()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    for (const auto& [name, c] : {std::pair{"circle", unit_circle()}, std::pair{"ellipse", ellipse21()}}) {
        const auto atlas = scan_phase_space(c, 5, 200, 200);
        std::size_t area = 0, curves = 0, points = 0;
        double thickest = 0.0;
        for (const auto& cl : atlas.clusters) {
            area += cl.shape == ClusterShape::Area;
            curves += cl.shape == ClusterShape::Curve;
            points += cl.shape == ClusterShape::Point;
            thickest = std::max(thickest, cl.thickness);
        }
        ok = ok && area == 0 && thickest <= 1.0 && !atlas.clusters.empty();
        detail += fmt("%s: %zu points located, %zu point / %zu curve / %zu area clusters, max thickness %.3f cells, "
                      "occupied %.2f%%; ",
                      name, atlas.points.size(), points, curves, area, thickest, 100 * atlas.occupied_fraction);
    }
    const double t = seconds_since(t0);
    return {ok && t < 120.0, detail + fmt("%.1f s", t)};
}

// 10
Verdict torus_fixed_sets()
{
    const std::vector<std::pair<CircleZeroSet, CircleZeroSet>> choices{
        {CircleZeroSet({{0.0, 0.0}}), CircleZeroSet({{0.0, 0.0}})},
        {CircleZeroSet({{0.1, 0.2}, {0.7, 0.7}}), CircleZeroSet({{0.5, 0.6}})},
        {CircleZeroSet({{0.25, 0.25}, {0.5, 0.8}}), CircleZeroSet({{0.05, 0.1}, {0.4, 0.4}, {0.9, 0.95}})},
    };
    std::size_t mismatches = 0;
    std::vector<std::size_t> sizes;
    for (const auto& [zf, zg] : choices) {
        const auto f = torus_fixed_points(TorusSkewMap(BumpFunction(zf), BumpFunction(zg)), 512);
        mismatches += f.mismatches;
        sizes.push_back(f.fixed.size());
    }
    return {mismatches == 0 && sizes[0] != sizes[1] && sizes[1] != sizes[2],
            fmt("3 zero-set choices on 512^2: %zu / %zu / %zu fixed grid points, %zu mismatches with Z_g x Z_f", sizes[0],
                sizes[1], sizes[2], mismatches)};
}

// 11
Verdict sphere_bigons()
{
    bool ok = true;
    std::string detail;
    for (auto [p, q] : {std::pair{1, 2}, std::pair{1, 3}, std::pair{2, 5}}) {
        const auto t0 = std::chrono::steady_clock::now();
        SphereBigonSpec spec;
        spec.p = p;
        spec.q = q;
        SphereCertificateOptions opt;
        const auto c = certify_open_set(SphereBigonTable(spec), opt);
        const auto d = certify_open_set(nonconvex_variant(spec, -0.3, -0.2), opt);
        const double t = seconds_since(t0);
        const bool same = c.min_period_histogram == d.min_period_histogram && c.eps == d.eps &&
                          c.max_length_error == d.max_length_error;
        std::string hist;
        for (const auto& [period, count] : c.min_period_histogram)
            hist += fmt(hist.empty() ? "%zu:%zu" : " %zu:%zu", period, count);
        ok = ok && c.samples >= 10000 && c.not_periodic == 0 && c.all_period_q && c.all_length_2ppi && same && t < 60.0;
        detail += fmt("%s(%d,%d) eps=%.3g, minimal periods {%s}, all minimal period q: %s, length 2p pi max err %.1e, "
                      "nonconvex identical: %s, %.1f s",
                      detail.empty() ? "" : "; ", p, q, c.eps, hist.c_str(), c.all_period_q ? "yes" : "no", c.max_length_error,
                      same ? "yes" : "no", t);
    }
    return {ok, detail};
}

} // namespace

int main()
{
    int failures = 0;
    auto report = [&](int id, const char* name, const Verdict& v) {
        std::printf("%s [%d] %s: %s\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str());
        std::fflush(stdout);
        failures += !v.pass;
    };
    auto guarded = [&](int id, const char* name, const std::function<Verdict()>& f) {
        try {
            report(id, name, f());
        } catch (const std::exception& e) {
            report(id, name, {false, std::string("threw ") + e.what()});
        }
    };
    guarded(1, "measure identity", measure_identity);
    guarded(2, "derivative product formula", derivative_product_formula);
    guarded(3, "linearity lemma", linearity_lemma);
    guarded(4, "circle identity and falsification", circle_identity);
    guarded(5, "variational equivalence", variational_equivalence);
    guarded(6, "Birkhoff orbits", birkhoff_orbits);
    DetectorStats st;
    try {
        st = run_detectors();
    } catch (const std::exception&) {
    }
    guarded(7, "classification coherence", [&] { return classification_coherence(st); });
    guarded(8, "odd periods are never degenerate", [&] { return odd_period(st); });
    guarded(9, "periodic set has empty interior (atlas proxy)", empty_interior);
    guarded(10, "torus skew-map fixed sets", torus_fixed_sets);
    guarded(11, "spherical bigon open sets", sphere_bigons);
    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
