#pragma once

#include "billiards/error.hpp"
#include "billiards/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace billiards {

/// Closed subset of the unit circle R/Z: a finite union of closed intervals
/// (a point is an interval of zero length), or the whole circle.
class CircleZeroSet {
public:
    static CircleZeroSet whole()
    {
        CircleZeroSet z;
        z.whole_ = true;
        return z;
    }

    /// Intervals [a, b] with 0 <= a <= b < 1; a wrapping interval is given as two.
    explicit CircleZeroSet(std::vector<std::pair<double, double>> intervals)
        : intervals_(std::move(intervals))
    {
        if (intervals_.empty())
            throw Error(ErrorKind::InvalidSpec, "zero set must not be empty");
        for (const auto& [a, b] : intervals_)
            if (!(0.0 <= a && a <= b && b < 1.0))
                throw Error(ErrorKind::InvalidSpec, "zero set intervals must satisfy 0 <= a <= b < 1");
        std::sort(intervals_.begin(), intervals_.end());
        for (std::size_t i = 1; i < intervals_.size(); ++i)
            if (intervals_[i].first <= intervals_[i - 1].second)
                throw Error(ErrorKind::InvalidSpec, "zero set intervals must be disjoint");
    }

    bool is_whole() const { return whole_; }
    const std::vector<std::pair<double, double>>& intervals() const { return intervals_; }

    bool contains(double x) const
    {
        if (whole_)
            return true;
        x = wrap(x, 1.0);
        for (const auto& [a, b] : intervals_)
            if (a <= x && x <= b)
                return true;
        return false;
    }

    /// Complementary open gaps (a, b) with b possibly past 1 for the wrapping gap.
    std::vector<std::pair<double, double>> gaps() const
    {
        std::vector<std::pair<double, double>> out;
        if (whole_)
            return out;
        for (std::size_t i = 0; i < intervals_.size(); ++i) {
            const double a = intervals_[i].second;
            const double b = i + 1 < intervals_.size() ? intervals_[i + 1].first : intervals_[0].first + 1.0;
            if (b > a)
                out.emplace_back(a, b);
        }
        return out;
    }

private:
    CircleZeroSet() = default;

    std::vector<std::pair<double, double>> intervals_;
    bool whole_ = false;
};

/// Smooth 1-periodic function vanishing exactly on a zero set: on every gap
/// (a, b) it is amplitude * exp(-width/(x-a) - width/(b-x)).
class BumpFunction {
public:
    explicit BumpFunction(CircleZeroSet zeros, double amplitude = 0.5, double width = 1e-3)
        : zeros_(std::move(zeros))
        , amplitude_(amplitude)
        , width_(width)
    {
        if (!(std::abs(amplitude) < 1.0))
            throw Error(ErrorKind::InvalidSpec, "bump amplitude must lie in (-1, 1)");
        if (!(width > 0.0))
            throw Error(ErrorKind::InvalidSpec, "bump width must be positive");
        gaps_ = zeros_.gaps();
    }

    const CircleZeroSet& zeros() const { return zeros_; }

    double operator()(double x) const
    {
        if (zeros_.contains(x))
            return 0.0;
        x = wrap(x, 1.0);
        for (const auto& [a, b] : gaps_) {
            for (double y : {x, x + 1.0})
                if (a < y && y < b)
                    return amplitude_ * std::exp(-width_ / (y - a) - width_ / (b - y));
        }
        return 0.0;
    }

private:
    CircleZeroSet zeros_;
    double amplitude_;
    double width_;
    std::vector<std::pair<double, double>> gaps_;
};

/// H = G o F on R^2/Z^2 with F(x, y) = (x + f(y), y) and G(x, y) = (x, y + g(x)),
/// i.e. H(x, y) = (x + f(y), y + g(x + f(y))). Each factor is a shear, so H is
/// a diffeomorphism, and its fixed points are {(x, y) : x in Z_g, y in Z_f}.
class TorusSkewMap {
public:
    TorusSkewMap(BumpFunction f, BumpFunction g)
        : f_(std::move(f))
        , g_(std::move(g))
    {
    }

    /// f == 0 identically (Z_f is the whole circle).
    static TorusSkewMap with_zero_f(BumpFunction g)
    {
        return TorusSkewMap(BumpFunction(CircleZeroSet::whole()), std::move(g));
    }

    const BumpFunction& f() const { return f_; }
    const BumpFunction& g() const { return g_; }

    Vec2 operator()(Vec2 p) const
    {
        const double x = p.x() + f_(p.y());
        const double y = p.y() + g_(x);
        return {wrap(x, 1.0), wrap(y, 1.0)};
    }

    Vec2 inverse(Vec2 p) const
    {
        const double y = p.y() - g_(p.x());
        const double x = p.x() - f_(y);
        return {wrap(x, 1.0), wrap(y, 1.0)};
    }

    /// Closed-form membership in the declared fixed set.
    bool declared_fixed(Vec2 p) const { return g_.zeros().contains(p.x()) && f_.zeros().contains(p.y()); }

private:
    BumpFunction f_;
    BumpFunction g_;
};

inline double torus_distance(Vec2 a, Vec2 b)
{
    return std::hypot(wrapped_diff(a.x(), b.x(), 1.0), wrapped_diff(a.y(), b.y(), 1.0));
}

struct TorusFixedSet {
    std::size_t grid = 0;
    std::vector<std::pair<std::size_t, std::size_t>> fixed;    // grid indices (i, j) at (i/grid, j/grid)
    std::size_t mismatches = 0;                                // computed vs declared membership
    double max_round_trip = 0.0;                               // max |H^-1(H(p)) - p|
};

/// Grid points with |H(p) - p| <= tol, compared cell by cell with the declared product.
inline TorusFixedSet torus_fixed_points(const TorusSkewMap& h, std::size_t grid, double tol = 1e-10)
{
    if (grid == 0)
        throw Error(ErrorKind::InvalidInput, "grid must be nonempty");
    TorusFixedSet out;
    out.grid = grid;
    const double step = 1.0 / static_cast<double>(grid);
    for (std::size_t i = 0; i < grid; ++i)
        for (std::size_t j = 0; j < grid; ++j) {
            const Vec2 p(i * step, j * step);
            const Vec2 q = h(p);
            const bool fixed = torus_distance(p, q) <= tol;
            if (fixed)
                out.fixed.emplace_back(i, j);
            if (fixed != h.declared_fixed(p))
                ++out.mismatches;
            out.max_round_trip = std::max(out.max_round_trip, torus_distance(h.inverse(q), p));
        }
    return out;
}

} // namespace billiards
