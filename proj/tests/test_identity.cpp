#include "billiards/identity.hpp"
#include "test_tables.hpp"

#include <gtest/gtest.h>

using namespace billiards;
using namespace billiards::testing;

namespace {

std::vector<std::pair<double, double>> random_pairs(const BoundaryCurve& c, std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> us(0.0, c.length());
    std::vector<std::pair<double, double>> out;
    while (out.size() < n) {
        const double s0 = us(rng), s1 = us(rng);
        try {
            const Chord ch = chord(c, s0, s1);
            if (std::min(ch.alpha0, pi - ch.alpha0) > 0.1 && std::min(ch.alpha1, pi - ch.alpha1) > 0.1)
                out.emplace_back(s0, s1);
        } catch (const Error&) {
        }
    }
    return out;
}

} // namespace

TEST(ResidualR, CircleHoldsWithZeroAndFailsByChordWithOne)
{
    for (const auto& c : {unit_circle(), make_table(CircleSpec{2.5, Vec2(1.0, -3.0)})}) {
        for (const auto& [s0, s1] : random_pairs(c, 200, 3)) {
            EXPECT_NEAR(residual_R(c, s0, s1, 0.0), 0.0, 1e-12);
            EXPECT_NEAR(residual_R(c, s0, s1, 1.0), -chord(c, s0, s1).l, 1e-12);
        }
    }
}

TEST(ResidualR, EllipseIsGenericallyNonzero)
{
    const auto e = ellipse21();
    const double L = e.length();
    // from near one vertex to near the opposite side
    EXPECT_GT(std::abs(residual_R(e, 0.02 * L, 0.45 * L, 0.0)), 1e-3);
    std::size_t nonzero = 0;
    const auto pairs = random_pairs(e, 100, 5);
    for (const auto& [s0, s1] : pairs)
        if (std::abs(residual_R(e, s0, s1, 0.0)) > 1e-6)
            ++nonzero;
    EXPECT_GT(nonzero, 90u);
}

TEST(ResidualR, FlatEndpoint)
{
    const auto st = stadium();
    const double on_flat = 0.5 * st.arcs()[0].length;
    const double on_arc = st.arcs()[0].length + 0.5 * st.arcs()[1].length;
    try {
        residual_R(st, on_flat, on_arc, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::FlatEndpoint);
        EXPECT_EQ(e.name(), "flat-endpoint");
    }
    EXPECT_THROW(differential_identity_check(st, on_arc, on_flat), Error);
    EXPECT_NO_THROW(residual_R(st, on_arc, on_arc + 0.5 * st.length(), 0.0));
}

TEST(RadiusOfCurvature, TwoWaysAgree)
{
    for (const auto& c : {ellipse21(), perturbed_circle(), nonconvex_table(), unit_circle()}) {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> us(0.0, c.length());
        std::size_t checked = 0;
        for (int n = 0; n < 200; ++n) {
            const double s = us(rng);
            const RadiusCheck rc = radius_cross_check(c, s);
            if (rc.skipped)
                continue;
            EXPECT_LE(rc.relative_error, 1e-7) << c.kind() << " s=" << s;
            ++checked;
            if (c.is_smooth_loop()) {
                const double h = 1e-4 * c.length();
                const double fd = radius_derivative_by_differences(c, s, h);
                EXPECT_NEAR(c.radius_derivative(s), fd, 1e-6 * std::max(1.0, std::abs(fd))) << c.kind();
            }
        }
        EXPECT_GT(checked, 150u);
    }
    // ellipse closed form: kappa at the ends of the major axis is a/b^2
    EXPECT_NEAR(radius_cross_check(ellipse21(), 0.0).by_differences, 0.5, 1e-9);
}

TEST(IdentityScan, CircleGridVanishes)
{
    const auto c = unit_circle();
    const auto scan = identity_scan(c, {0.0, two_pi}, {0.0, two_pi}, 0.0, 200, 200);
    EXPECT_TRUE(scan.radius_verified);
    EXPECT_LE(scan.max_abs, 1e-10);
    EXPECT_GT(scan.evaluated, 39000u);
    EXPECT_EQ(scan.heatmap.size(), 40000u);
    EXPECT_NEAR(scan.radius0.min, 1.0, 1e-12);
    EXPECT_NEAR(scan.radius1.max, 1.0, 1e-12);
}

TEST(IdentityScan, FalsifiedOnNonCircularTables)
{
    const auto e = ellipse21();
    const auto full = identity_scan(e, {0.0, e.length()}, {0.0, e.length()}, 1.0, 100, 100);
    EXPECT_GE(full.max_abs, 0.1);
    for (const auto& c : {ellipse21(), perturbed_circle()}) {
        const double L = c.length();
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                const ArcWindow w0{i * L / 4, (i + 1) * L / 4}, w1{j * L / 4, (j + 1) * L / 4};
                const auto scan = identity_scan(c, w0, w1, 1.0, 20, 20);
                EXPECT_GT(scan.max_abs, 1e-3 * c.diameter()) << c.kind() << " windows " << i << "," << j;
            }
    }
}

TEST(IdentityScan, ShrinksAsTheEllipseRounds)
{
    double previous = HUGE_VAL;
    for (double a : {1.2, 1.1, 1.05, 1.01}) {
        const auto e = make_table(EllipseSpec{a, 1.0});
        const auto scan = identity_scan(e, {0.0, e.length()}, {0.0, e.length()}, 0.0, 60, 60);
        EXPECT_GT(scan.max_abs, 1e-6);
        EXPECT_LT(scan.max_abs, previous);
        previous = scan.max_abs;
    }
}

TEST(IdentityScan, JobsDoNotChangeTheResult)
{
    const auto e = ellipse21();
    const auto a = identity_scan(e, {0.0, 3.0}, {4.0, 7.0}, 0.3, 30, 30);
    const auto b = identity_scan(e, {0.0, 3.0}, {4.0, 7.0}, 0.3, 30, 30, 3);
    ASSERT_EQ(a.heatmap.size(), b.heatmap.size());
    for (std::size_t i = 0; i < a.heatmap.size(); ++i)
        EXPECT_TRUE(a.heatmap[i].residual == b.heatmap[i].residual ||
                    (std::isnan(a.heatmap[i].residual) && std::isnan(b.heatmap[i].residual)));
}

TEST(DifferentialIdentities, VanishOnTheCircle)
{
    const auto c = unit_circle();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ua(0.05, pi / 2 - 0.05), us(0.0, two_pi);
    for (int n = 0; n < 50; ++n) {
        const double alpha = ua(rng), s0 = us(rng);
        const double s1 = s0 + 2 * alpha; // chord making angle alpha with the circle
        const auto d = differential_identity_check(c, s0, s1);
        EXPECT_NEAR(d.eq0, 0.0, 1e-12);
        EXPECT_NEAR(d.eq1, 0.0, 1e-12);
        EXPECT_NEAR(d.eq2, 0.0, 1e-12);
        // the same numbers by direct arithmetic on the uncleared form
        const double l = 2 * std::sin(alpha);
        const double rhs = -1.0 / (l * std::cos(alpha)) + std::cos(2 * alpha) / (l * std::cos(alpha)) + std::tan(alpha);
        EXPECT_NEAR(rhs, 0.0, 1e-12);
    }
}

TEST(DifferentialIdentities, AreDerivativesOfTheLengthResidual)
{
    // Independent oracle: central differences of residual_R and of eq0.
    for (const auto& c : {ellipse21(), perturbed_circle()}) {
        for (double cc : {0.0, 1.0, -0.4}) {
            for (const auto& [s0, s1] : random_pairs(c, 30, 17)) {
                const Chord ch = chord(c, s0, s1);
                const auto d = differential_identity_check(c, s0, s1, cc);
                const double h = 1e-5;
                const double dR0 = (residual_R(c, s0 + h, s1, cc) - residual_R(c, s0 - h, s1, cc)) / (2 * h);
                const double dR1 = (residual_R(c, s0, s1 + h, cc) - residual_R(c, s0, s1 - h, cc)) / (2 * h);
                EXPECT_NEAR(d.eq0, dR0 / std::sin(ch.alpha0), 1e-6 * std::max(1.0, std::abs(d.eq0))) << c.kind();
                EXPECT_NEAR(d.eq1, dR1 / std::sin(ch.alpha1), 1e-6 * std::max(1.0, std::abs(d.eq1))) << c.kind();
                const double dE0 = (differential_identity_check(c, s0, s1 + h, cc).eq0 -
                                    differential_identity_check(c, s0, s1 - h, cc).eq0) /
                                   (2 * h);
                EXPECT_NEAR(d.eq2, -ch.l * ch.l * dE0, 1e-5 * std::max(1.0, std::abs(d.eq2))) << c.kind();
            }
        }
    }
    // and they do not vanish on the ellipse
    const auto e = ellipse21();
    EXPECT_GT(std::abs(differential_identity_check(e, 0.3, 4.0).eq0), 1e-3);
}
