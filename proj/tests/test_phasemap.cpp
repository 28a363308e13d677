#include "billiards/phasemap.hpp"
#include "test_tables.hpp"

#include <gtest/gtest.h>

using namespace billiards;
using namespace billiards::testing;

namespace {

Mat2 finite_difference_jacobian(const BoundaryCurve& c, PhasePoint p, double h)
{
    const double L = c.length();
    Mat2 j;
    const PhasePoint sp = step(c, {p.s + h, p.alpha}), sm = step(c, {p.s - h, p.alpha});
    j(0, 0) = wrapped_diff(sp.s, sm.s, L) / (2 * h);
    j(1, 0) = (sp.alpha - sm.alpha) / (2 * h);
    const PhasePoint ap = step(c, {p.s, p.alpha + h}), am = step(c, {p.s, p.alpha - h});
    j(0, 1) = wrapped_diff(ap.s, am.s, L) / (2 * h);
    j(1, 1) = (ap.alpha - am.alpha) / (2 * h);
    return j;
}

// Samples interior phase points away from corners, tangency and piece junctions.
std::vector<PhasePoint> sample_points(const BoundaryCurve& c, std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> us(0.0, c.length()), ua(0.15, pi - 0.15);
    std::vector<PhasePoint> out;
    while (out.size() < n) {
        const PhasePoint p{us(rng), ua(rng)};
        if (c.corner_distance(p.s) < 1e-3)
            continue;
        try {
            const auto r = step_chord(c, p);
            if (std::min(r.next.alpha, pi - r.next.alpha) < 0.05 || c.corner_distance(r.next.s) < 1e-3)
                continue;
            bool near_junction = false;
            if (!c.is_smooth_loop()) {
                double start = 0.0;
                for (const auto& a : c.arcs()) {
                    for (double s : {p.s, r.next.s})
                        if (std::abs(wrapped_diff(s, start, c.length())) < 1e-3)
                            near_junction = true;
                    start += a.length;
                }
            }
            if (!near_junction)
                out.push_back(p);
        } catch (const Error&) {
        }
    }
    return out;
}

} // namespace

TEST(Step, CircleDiameterAndTriangle)
{
    const auto c = unit_circle();
    const PhasePoint d = step(c, {0.0, pi / 2});
    EXPECT_NEAR(d.s, pi, 1e-12);
    EXPECT_NEAR(d.alpha, pi / 2, 1e-12);
    const PhasePoint t = step(c, {0.0, pi / 3});
    EXPECT_NEAR(t.s, 2 * pi / 3, 1e-12);
    EXPECT_NEAR(t.alpha, pi / 3, 1e-12);
}

TEST(Step, CircleKeepsAngle)
{
    const auto c = unit_circle();
    for (double a : {0.1, 0.7, 1.3, 2.9}) {
        const auto tr = iterate(c, {0.4, a}, 50);
        for (const auto& p : tr.points)
            EXPECT_NEAR(p.alpha, a, 1e-10);
        EXPECT_NEAR(wrap(tr.points.back().s - 0.4, two_pi), wrap(50 * 2 * a, two_pi), 1e-8);
    }
}

TEST(Step, EllipseAxes)
{
    const auto e = ellipse21();
    const PhasePoint p = step(e, {0.0, pi / 2});
    EXPECT_NEAR(p.s, e.length() / 2, 1e-9);
    EXPECT_NEAR(p.alpha, pi / 2, 1e-9);
    const PhasePoint q = step(e, {e.length() / 4, pi / 2});
    EXPECT_NEAR(q.s, 3 * e.length() / 4, 1e-9);
}

TEST(Step, Reversibility)
{
    for (const auto& c : builtin_tables())
        for (const auto& p : sample_points(c, 40, 5)) {
            const PhasePoint q = step_back(c, step(c, p));
            EXPECT_LT(phase_distance(p, q, c.length()), 1e-10) << c.kind();
        }
}

TEST(Step, Errors)
{
    const auto c = unit_circle();
    for (double a : {0.0, pi, -0.2, 3.5}) {
        try {
            step(c, {0.0, a});
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::TangentialInput);
            EXPECT_EQ(e.name(), "tangential-input");
        }
    }
    // Aim exactly at a corner of the square-ish table.
    const auto nc = nonconvex_table();
    const double corner = nc.corners()[2].s;
    const Chord ch = chord_unchecked(nc, 0.5 * nc.arcs()[0].length, corner);
    try {
        step(nc, {ch.s0, ch.alpha0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::CornerHit);
    }
    try {
        step(nc, {corner, 1.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::CornerHit);
    }
}

TEST(Iterate, ReportsFailingIndex)
{
    const auto nc = nonconvex_table();
    const double corner = nc.corners()[1].s;
    // Reach a corner at the second step: start from the reverse of a corner-bound chord.
    const Chord ch = chord_unchecked(nc, 0.5 * nc.arcs()[3].length + nc.arcs()[0].length + nc.arcs()[1].length +
                                             nc.arcs()[2].length,
                                     corner);
    const PhasePoint target{ch.s0, ch.alpha0};
    const PhasePoint start = step_back(nc, target);
    try {
        iterate(nc, start, 5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::CornerHit);
        ASSERT_TRUE(e.index().has_value());
        EXPECT_EQ(*e.index(), 1u);
    }
}

TEST(Jacobian, CircleIsShear)
{
    const auto c = unit_circle();
    const Mat2 j = jacobian(c, {0.0, pi / 2});
    EXPECT_NEAR(j(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(j(0, 1), 2.0, 1e-12);
    EXPECT_NEAR(j(1, 0), 0.0, 1e-12);
    EXPECT_NEAR(j(1, 1), 1.0, 1e-12);
}

TEST(Jacobian, MatchesFiniteDifferences)
{
    for (const auto& c : builtin_tables())
        for (const auto& p : sample_points(c, 60, 9)) {
            const Mat2 an = jacobian(c, p);
            const Mat2 fd = finite_difference_jacobian(c, p, 1e-6);
            EXPECT_LE((an - fd).cwiseAbs().maxCoeff(), 1e-5 * std::max(1.0, fd.cwiseAbs().maxCoeff()))
                << c.kind() << " at s=" << p.s << " alpha=" << p.alpha;
        }
}

TEST(Jacobian, DeterminantIsSineRatio)
{
    for (const auto& c : builtin_tables())
        for (const auto& p : sample_points(c, 60, 13)) {
            const auto r = step_chord(c, p);
            const Mat2 j = jacobian_from_chord(c, r.chord);
            EXPECT_NEAR(j.determinant(), std::sin(p.alpha) / std::sin(r.next.alpha), 1e-10) << c.kind();
            // and the inverse map at the image has the reciprocal determinant
            const Mat2 jb = finite_difference_jacobian(c, reversed(r.next), 1e-6);
            const Mat2 r2{{1, 0}, {0, -1}};
            const Mat2 inv = r2 * jb * r2;
            EXPECT_NEAR(inv.determinant(), std::sin(r.next.alpha) / std::sin(p.alpha), 1e-5) << c.kind();
        }
}

TEST(OrbitTrace, FocalData)
{
    const auto st = stadium();
    // bounce between the two flat sides: all lambdas infinite, mu zero
    const auto tr = iterate(st, {1.0, pi / 2}, 4);
    for (std::size_t i = 0; i < tr.points.size(); ++i) {
        EXPECT_TRUE(std::isinf(tr.lambdas[i]));
        EXPECT_EQ(tr.inverse_focals[i], 0.0);
    }
    const auto c = unit_circle();
    const auto tc = iterate(c, {0.0, pi / 6}, 3);
    for (double lam : tc.lambdas)
        EXPECT_NEAR(lam, 0.25, 1e-12);
    const Mat2 m = trace_differential(tc);
    EXPECT_NEAR(m.determinant(), 1.0, 1e-12);
}

TEST(InvariantMeasure, DriftWithinTwoPercent)
{
    for (const auto& c : {ellipse21(), perturbed_circle(), nonconvex_table()}) {
        const double L = c.length();
        const PhaseRegion region{0.1 * L, 0.18 * L, 1.0, 1.4};
        const auto rep = invariant_measure_check(c, region, 5, 20000, 17);
        EXPECT_LT(std::abs(rep.drift), 0.02) << c.kind() << " drift " << rep.drift << " sigma " << rep.sigma;
        EXPECT_GT(rep.region_measure, 0.0);
    }
}

TEST(InvariantMeasure, LebesgueIsNotPreserved)
{
    // A region near grazing angles is stretched in alpha; the plain area changes.
    const auto e = ellipse21();
    const double L = e.length();
    const auto tr = iterate(e, {0.05 * L, 0.3}, 1);
    const Mat2 j = trace_differential(tr);
    EXPECT_GT(std::abs(j.determinant() - 1.0), 1e-3);
}

TEST(Jacobian, EllipseAxisSquareTwoWays)
{
    const auto e = ellipse21();
    const auto tr = iterate(e, {0.0, pi / 2}, 2);
    EXPECT_LT(phase_distance(tr.points[0], tr.points[2], e.length()), 1e-9);
    const Mat2 product = trace_differential(tr);
    const double h = 1e-6, L = e.length();
    auto f2 = [&](PhasePoint p) { return step(e, step(e, p)); };
    Mat2 fd;
    const PhasePoint sp = f2({h, pi / 2}), sm = f2({-h, pi / 2});
    const PhasePoint ap = f2({0.0, pi / 2 + h}), am = f2({0.0, pi / 2 - h});
    fd << wrapped_diff(sp.s, sm.s, L) / (2 * h), wrapped_diff(ap.s, am.s, L) / (2 * h), (sp.alpha - sm.alpha) / (2 * h),
        (ap.alpha - am.alpha) / (2 * h);
    EXPECT_NEAR(product.trace(), fd.trace(), 1e-5);
    EXPECT_GT(std::abs(product.trace()), 2.0); // the major axis is unstable
}

TEST(Iterate, CircleTriangleCloses)
{
    const auto tr = iterate(unit_circle(), {0.0, pi / 3}, 3);
    const double expected[] = {0.0, 2 * pi / 3, 4 * pi / 3, 0.0};
    for (int i = 0; i < 4; ++i)
        EXPECT_NEAR(std::abs(wrapped_diff(tr.points[i].s, expected[i], two_pi)), 0.0, 1e-12);
    for (double lam : tr.lambdas)
        EXPECT_NEAR(lam, std::sqrt(3.0) / 4, 1e-14);
}

TEST(InvariantMeasure, CircleAndZeroRegion)
{
    const auto c = unit_circle();
    const auto rep = invariant_measure_check(c, {0.5, 1.5, 0.4, 0.9}, 5, 100000, 3);
    EXPECT_LT(std::abs(rep.drift), 0.02);
    EXPECT_LT(std::abs(rep.drift), 3 * rep.sigma + 1e-3);
    const auto zero = invariant_measure_check(c, {0.5, 0.5, 0.4, 0.9}, 5, 1000, 3);
    EXPECT_EQ(zero.drift, 0.0);
}
