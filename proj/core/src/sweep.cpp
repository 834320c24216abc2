#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>

#include <fmt/format.h>

#include "gyreplan/analysis.hpp"

namespace gyreplan {

std::vector<SweepPoint> SweepSpec::points() const {
    std::vector<SweepPoint> out;
    out.reserve(horizons.size() * r_over_q.size() * omegas.size());
    for (const double h : horizons) {
        for (const double r : r_over_q) {
            for (const double w : omegas) {
                out.push_back({h, r, w});
            }
        }
    }
    return out;
}

TrajectoryTotals trajectory_totals(const Trajectory& traj, const Vec2& goal, double dt) {
    TrajectoryTotals totals;
    for (std::size_t k = 1; k < traj.states.size(); ++k) {
        totals.state_error += (traj.states[k] - goal).squaredNorm() * dt;
    }
    for (const double e : traj.inst_energy) {
        totals.energy += e * dt;
    }
    if (!traj.horizons.empty()) {
        const auto converged = std::count_if(traj.horizons.begin(), traj.horizons.end(),
                                             [](const HorizonSummary& h) { return h.converged; });
        totals.converged_frac = static_cast<double>(converged) / static_cast<double>(traj.horizons.size());
    }
    return totals;
}

SweepRecord run_sweep_point(const SweepSpec& spec, const SweepPoint& point) {
    SweepRecord rec;
    rec.point = point;
    rec.run_duration = spec.duration;
    try {
        if (!(point.r_over_q > 0.0)) {
            throw ConfigError(fmt::format("sweep R/Q must be > 0, got {}", point.r_over_q));
        }
        DoubleGyreParams field_params = spec.field;
        field_params.omega = point.omega;
        const DoubleGyre field(field_params);

        MpcConfig cfg = spec.mpc;
        cfg.horizon = point.horizon;
        cfg.Q = 1.0;
        cfg.R = point.r_over_q;

        const Trajectory traj = run_mpc(field, spec.start, spec.t_start, cfg, spec.integrator, spec.duration);
        const TrajectoryTotals totals = trajectory_totals(traj, cfg.goal, cfg.dt);
        rec.total_state_error = totals.state_error;
        rec.total_energy = totals.energy;
        rec.weighted_Je = cfg.Q * totals.state_error;
        rec.weighted_Ju = cfg.R * totals.energy;
        rec.weighted_J = rec.weighted_Je + rec.weighted_Ju;
        rec.converged_frac = totals.converged_frac;
    } catch (const Error& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    return rec;
}

std::vector<SweepRecord> sweep(const SweepSpec& spec, std::span<const SweepPoint> points) {
    std::vector<SweepRecord> records(points.size());
    const auto count = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t n = 0; n < count; ++n) {
        records[static_cast<std::size_t>(n)] = run_sweep_point(spec, points[static_cast<std::size_t>(n)]);
    }
    return records;
}

std::vector<SweepRecord> sweep(const SweepSpec& spec) {
    const std::vector<SweepPoint> pts = spec.points();
    return sweep(spec, pts);
}

std::vector<double> log_spaced(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
        throw DomainError(fmt::format("log spacing needs 0 < lo <= hi and count >= 1, got [{}, {}] x {}", lo, hi, count));
    }
    if (count == 1) {
        return {lo};
    }
    std::vector<double> out(static_cast<std::size_t>(count));
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

namespace {

bool dominates(const SweepRecord& a, const SweepRecord& b) {
    return a.total_energy <= b.total_energy && a.total_state_error <= b.total_state_error &&
           (a.total_energy < b.total_energy || a.total_state_error < b.total_state_error);
}

} // namespace

std::vector<std::size_t> pareto_front(std::span<const SweepRecord> records) {
    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].ok) {
            continue;
        }
        bool dominated = false;
        for (std::size_t j = 0; j < records.size() && !dominated; ++j) {
            dominated = j != i && records[j].ok && dominates(records[j], records[i]);
        }
        if (!dominated) {
            front.push_back(i);
        }
    }
    return front;
}

std::vector<bool> pareto_membership(std::span<const SweepRecord> records) {
    std::map<std::pair<double, double>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < records.size(); ++i) {
        groups[{records[i].point.horizon, records[i].point.omega}].push_back(i);
    }
    std::vector<bool> member(records.size(), false);
    for (const auto& [key, indices] : groups) {
        std::vector<SweepRecord> group;
        group.reserve(indices.size());
        for (const std::size_t i : indices) {
            group.push_back(records[i]);
        }
        for (const std::size_t local : pareto_front(group)) {
            member[indices[local]] = true;
        }
    }
    return member;
}

} // namespace gyreplan
