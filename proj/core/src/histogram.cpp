#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "gyreplan/analysis.hpp"

namespace gyreplan {

namespace {

std::vector<std::size_t> bin_counts(const std::vector<double>& values, const std::vector<double>& edges) {
    const std::size_t bins = edges.size() - 1;
    const double lo = edges.front();
    const double width = edges.back() - lo;
    std::vector<std::size_t> counts(bins, 0);
    for (const double v : values) {
        const double u = (v - lo) / width * static_cast<double>(bins);
        const auto idx = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, static_cast<double>(bins - 1)));
        ++counts[idx];
    }
    return counts;
}

std::vector<double> make_edges(double lo, double hi, int bins) {
    if (!(hi > lo)) {
        hi = lo + 1.0;
    }
    std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) {
        edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / bins;
    }
    return edges;
}

HistogramPair make_pair(std::string name, const std::vector<double>& sensor, const std::vector<double>& flow,
                        std::vector<double> edges) {
    HistogramPair pair;
    pair.quantity = std::move(name);
    pair.sensor_counts = bin_counts(sensor, edges);
    pair.flow_counts = bin_counts(flow, edges);
    pair.edges = std::move(edges);
    return pair;
}

double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (const double v : a) {
        m = std::max(m, std::abs(v));
    }
    for (const double v : b) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

} // namespace

std::vector<HistogramPair> control_histograms(const Trajectory& traj, const FlowField& field, int bins) {
    if (traj.controls.empty()) {
        throw DomainError("control histograms need a non-empty trajectory");
    }
    if (bins < 1) {
        throw DomainError(fmt::format("histogram bin count must be >= 1, got {}", bins));
    }
    const std::size_t n = traj.controls.size();
    std::vector<double> u_mag(n), v_mag(n), u_head(n), v_head(n), ux(n), vx(n), uy(n), vy(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2& u = traj.controls[k];
        const Vec2 v = field.velocity(traj.states[k], traj.times[k]);
        const Vec2 motion = v + u;
        u_mag[k] = u.norm();
        v_mag[k] = v.norm();
        u_head[k] = std::atan2(motion.y(), motion.x());
        v_head[k] = std::atan2(v.y(), v.x());
        ux[k] = u.x();
        vx[k] = v.x();
        uy[k] = u.y();
        vy[k] = v.y();
    }

    const double pi = std::numbers::pi;
    const double mag_hi = max_abs(u_mag, v_mag);
    const double x_hi = max_abs(ux, vx);
    const double y_hi = max_abs(uy, vy);

    std::vector<HistogramPair> out;
    out.push_back(make_pair("magnitude", u_mag, v_mag, make_edges(0.0, mag_hi, bins)));
    out.push_back(make_pair("heading", u_head, v_head, make_edges(-pi, pi, bins)));
    out.push_back(make_pair("x_component", ux, vx, make_edges(-x_hi, x_hi, bins)));
    out.push_back(make_pair("y_component", uy, vy, make_edges(-y_hi, y_hi, bins)));
    return out;
}

} // namespace gyreplan
