#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gyreplan/flowfield.hpp"
#include "gyreplan/types.hpp"

namespace gyreplan {

enum class Scheme { rk4 };

struct IntegratorConfig {
    double dt_int = 0.01;
    Scheme scheme = Scheme::rk4;

    void validate() const;
};

/// Uniform rectangular lattice of nx * ny nodes, stored row-major in j then i
/// (index = j * nx + i).
struct GridSpec {
    double x_min = 0.0;
    double x_max = 2.0;
    double y_min = 0.0;
    double y_max = 1.0;
    int nx = 201;
    int ny = 101;

    void validate() const;

    double dx() const noexcept { return (x_max - x_min) / (nx - 1); }
    double dy() const noexcept { return (y_max - y_min) / (ny - 1); }
    std::size_t size() const noexcept { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
    std::size_t index(int i, int j) const noexcept {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
    }
    double x(int i) const noexcept { return x_min + i * dx(); }
    double y(int j) const noexcept { return y_min + j * dy(); }
    Vec2 node(int i, int j) const noexcept { return {x(i), y(j)}; }
    bool interior(int i, int j) const noexcept { return i >= 1 && i <= nx - 2 && j >= 1 && j <= ny - 2; }
};

/// Flow map sampled on a grid: positions[index(i,j)] is where node (i,j),
/// released at t0, sits at t0 + T.
struct FlowMapGrid {
    GridSpec spec;
    double t0 = 0.0;
    double T = 0.0;
    std::vector<Vec2> positions;

    const Vec2& at(int i, int j) const { return positions[spec.index(i, j)]; }
};

/// Decomposition of a signed duration into fixed steps plus one partial step.
struct StepPlan {
    std::int64_t full_steps = 0;
    double step = 0.0;      // signed
    double remainder = 0.0; // signed, zero when the duration is a whole multiple
};

StepPlan plan_steps(double duration, double dt_int);

/// One classical RK4 step of dx/dt = v(x, t) + control. A negative dt
/// integrates backward in time.
Vec2 step(const FlowField& field, const Vec2& x, double t, double dt, const Vec2& control = Vec2::Zero());

/// Integrates x' = v(x,t) + control over [t0, t0 + duration] with the fixed
/// step of cfg, no minimum-duration requirement.
Vec2 integrate(const FlowField& field, const Vec2& x0, double t0, double duration, const IntegratorConfig& cfg,
               const Vec2& control = Vec2::Zero());

/// Flow map of a single point: x0 at t0 to its position at t0 + T.
Vec2 advect_point(const FlowField& field, const Vec2& x0, double t0, double T, const IntegratorConfig& cfg);

FlowMapGrid flow_map(const FlowField& field, const GridSpec& spec, double t0, double T, const IntegratorConfig& cfg);

} // namespace gyreplan
