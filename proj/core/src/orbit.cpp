#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gyreplan/analysis.hpp"

namespace gyreplan {

Vec2 state_at(const Trajectory& traj, double t) {
    const auto& ts = traj.times;
    if (ts.empty()) {
        throw RangeError("empty trajectory");
    }
    if (t <= ts.front()) {
        return traj.states.front();
    }
    if (t >= ts.back()) {
        return traj.states.back();
    }
    const auto upper = std::upper_bound(ts.begin(), ts.end(), t);
    const auto k = static_cast<std::size_t>(upper - ts.begin());
    const double w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
    return (1.0 - w) * traj.states[k - 1] + w * traj.states[k];
}

OrbitSummary detect_orbit(const Trajectory& traj, const Vec2& goal, double ref_period, double tolerance) {
    if (!(ref_period > 0.0)) {
        throw DomainError(fmt::format("reference period must be > 0, got {}", ref_period));
    }
    if (traj.times.size() < 2) {
        throw DomainError("orbit detection needs at least two samples");
    }
    const double t_first = traj.times.front();
    const double t_end = traj.times.back();
    const double span = t_end - t_first;
    if (span < 3.0 * ref_period * (1.0 - 1e-9)) {
        throw DomainError(fmt::format("trajectory spans {} time units, orbit detection needs {}", span, 3.0 * ref_period));
    }
    const double slack = 1e-9 * std::max(1.0, span);

    OrbitSummary summary;
    for (int m = 1; m <= 3; ++m) {
        const double period = m * ref_period;
        const int count = std::max(1, static_cast<int>(std::floor(span / 3.0 / period + 1e-9)));
        if (t_end - count * period < t_first - slack) {
            continue;
        }
        bool recurrent = true;
        Vec2 previous = state_at(traj, t_end);
        for (int j = 1; j <= count && recurrent; ++j) {
            const Vec2 current = state_at(traj, t_end - j * period);
            recurrent = (current - previous).norm() < tolerance;
            previous = current;
        }
        if (!recurrent) {
            continue;
        }

        // The recurrent regime starts after the last sample whose state one
        // period later differs by more than the tolerance.
        double onset = t_first;
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            const double t = traj.times[k];
            if (t + period > t_end + slack) {
                break;
            }
            if ((traj.states[k] - state_at(traj, t + period)).norm() >= tolerance) {
                onset = k + 1 < traj.times.size() ? traj.times[k + 1] : t_end;
            }
        }
        if (!(onset < t_end - 2.0 * period)) {
            continue;
        }

        double radius = 0.0;
        std::size_t samples = 0;
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            if (traj.times[k] >= t_end - period - slack) {
                radius += (traj.states[k] - goal).norm();
                ++samples;
            }
        }
        summary.is_periodic = true;
        summary.period = period;
        summary.multiple = m;
        summary.mean_radius = samples > 0 ? radius / static_cast<double>(samples) : 0.0;
        summary.onset_time = onset;
        return summary;
    }

    double radius = 0.0;
    std::size_t samples = 0;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        if (traj.times[k] >= t_end - span / 3.0 - slack) {
            radius += (traj.states[k] - goal).norm();
            ++samples;
        }
    }
    summary.mean_radius = samples > 0 ? radius / static_cast<double>(samples) : 0.0;
    summary.onset_time = t_end;
    return summary;
}

} // namespace gyreplan
