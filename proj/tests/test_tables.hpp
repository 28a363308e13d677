#pragma once

// Shared fixtures: the tables used across the unit and acceptance suites.

#include "billiards/boundary.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace billiards::testing {

inline BoundaryCurve unit_circle() { return make_table(CircleSpec{1.0, Vec2::Zero()}); }
inline BoundaryCurve ellipse21() { return make_table(EllipseSpec{2.0, 1.0}); }

/// Generic smooth convex perturbation of the unit circle.
inline BoundaryCurve perturbed_circle()
{
    PolarGraphSpec spec;
    spec.a0 = 1.0;
    spec.harmonics = {{2, 0.03, 0.01}, {3, 0.02, -0.015}, {5, 0.0, 0.004}};
    return make_table(spec);
}

/// Square-ish table with one concave side and three convex sides.
inline BoundaryCurve nonconvex_table()
{
    PiecewiseSpec spec;
    spec.vertices = {{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}};
    spec.curvatures = {0.3, 0.25, -0.45, 0.35};
    return make_table(spec);
}

/// Stadium: two unit semicircles joined by straight segments of length 2.
inline BoundaryCurve stadium()
{
    PiecewiseSpec spec;
    spec.vertices = {{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}};
    spec.curvatures = {0.0, 1.0, 0.0, 1.0};
    return make_table(spec);
}

/// Intersection of two unit disks centred at (0,0) and (1,0). Its 2-orbit
/// along the x axis joins the two arc midpoints, each the centre of the
/// opposite arc.
inline BoundaryCurve lens()
{
    PiecewiseSpec spec;
    spec.vertices = {{0.5, -std::sqrt(3.0) / 2.0}, {0.5, std::sqrt(3.0) / 2.0}};
    spec.curvatures = {1.0, 1.0};
    return make_table(spec);
}

/// Arclength of the lens boundary point (1, 0), the midpoint of its first arc.
inline double lens_right_midpoint() { return pi / 3.0; }
inline double lens_left_midpoint() { return pi; }

inline std::vector<BoundaryCurve> builtin_tables()
{
    return {unit_circle(), ellipse21(), perturbed_circle(), nonconvex_table(), stadium()};
}

} // namespace billiards::testing
