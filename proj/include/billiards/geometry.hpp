#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace billiards {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// counterclockwise quarter turn
inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

inline Vec2 unit_from_angle(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// Reduce s into [0, period).
inline double wrap(double s, double period)
{
    double r = std::fmod(s, period);
    if (r < 0.0)
        r += period;
    if (r >= period)
        r -= period;
    return r;
}

/// Signed difference a - b reduced into [-period/2, period/2).
inline double wrapped_diff(double a, double b, double period)
{
    return wrap(a - b + 0.5 * period, period) - 0.5 * period;
}

inline double frobenius_distance(const Mat2& a, const Mat2& b) { return (a - b).norm(); }

} // namespace billiards
