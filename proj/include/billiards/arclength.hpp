#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace billiards {

/// Arclength of a regular parametrized curve, tabulated by panel-wise
/// Gauss-Legendre quadrature of the speed, with a Newton inverse s -> t.
class ArclengthTable {
public:
    using SpeedFn = std::function<double(double)>;

    ArclengthTable() = default;

    ArclengthTable(SpeedFn speed, double t_begin, double t_end, int panels = 256)
        : speed_(std::move(speed))
        , t_begin_(t_begin)
        , step_((t_end - t_begin) / panels)
        , cumulative_(static_cast<std::size_t>(panels) + 1, 0.0)
    {
        for (int k = 0; k < panels; ++k) {
            const double a = t_begin_ + k * step_;
            cumulative_[k + 1] = cumulative_[k] + integrate(a, a + step_);
        }
    }

    double length() const { return cumulative_.back(); }
    double speed(double t) const { return speed_(t); }

    /// Arclength from t_begin to t; t is clamped to the tabulated range.
    double arclength_at(double t) const
    {
        const int panels = static_cast<int>(cumulative_.size()) - 1;
        const double u = (t - t_begin_) / step_;
        int k = std::clamp(static_cast<int>(std::floor(u)), 0, panels - 1);
        const double a = t_begin_ + k * step_;
        return cumulative_[k] + integrate(a, std::clamp(t, a, a + step_));
    }

    /// Parameter t with arclength_at(t) == s; s is clamped to [0, length].
    double parameter_at(double s) const
    {
        s = std::clamp(s, 0.0, length());
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
        const int panels = static_cast<int>(cumulative_.size()) - 1;
        const int k = std::clamp(static_cast<int>(it - cumulative_.begin()) - 1, 0, panels - 1);
        const double a = t_begin_ + k * step_;
        const double span = cumulative_[k + 1] - cumulative_[k];
        double t = a + step_ * (span > 0.0 ? (s - cumulative_[k]) / span : 0.0);
        for (int iter = 0; iter < 12; ++iter) {
            const double residual = cumulative_[k] + integrate(a, t) - s;
            const double v = speed_(t);
            if (v <= 0.0)
                break;
            const double dt = residual / v;
            t = std::clamp(t - dt, a, a + step_);
            if (std::abs(dt) <= 1e-15 * (1.0 + std::abs(t)))
                break;
        }
        return t;
    }

private:
    double integrate(double a, double b) const
    {
        if (b <= a)
            return 0.0;
        return boost::math::quadrature::gauss<double, 10>::integrate(speed_, a, b);
    }

    SpeedFn speed_;
    double t_begin_ = 0.0;
    double step_ = 1.0;
    std::vector<double> cumulative_;
};

} // namespace billiards
