#include "gyreplan/advect.hpp"

#include <cmath>
#include <exception>
#include <limits>

#include <fmt/format.h>

#include "gyreplan/errors.hpp"

namespace gyreplan {

void IntegratorConfig::validate() const {
    if (!std::isfinite(dt_int) || dt_int <= 0.0) {
        throw ConfigError(fmt::format("integration step dt_int must be > 0, got {}", dt_int));
    }
}

void GridSpec::validate() const {
    if (nx < 3 || ny < 3) {
        throw ConfigError(fmt::format("grid needs at least 3x3 nodes, got {}x{}", nx, ny));
    }
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min)) {
        throw ConfigError(fmt::format("grid x range [{}, {}] is empty", x_min, x_max));
    }
    if (!std::isfinite(y_min) || !std::isfinite(y_max) || !(y_max > y_min)) {
        throw ConfigError(fmt::format("grid y range [{}, {}] is empty", y_min, y_max));
    }
}

StepPlan plan_steps(double duration, double dt_int) {
    StepPlan plan;
    const double length = std::abs(duration);
    const double sign = duration < 0.0 ? -1.0 : 1.0;
    plan.step = sign * dt_int;
    // Tolerate representation error so that e.g. 1.0 / 0.01 counts as 100 steps.
    const double ratio = length / dt_int;
    auto n = static_cast<std::int64_t>(std::floor(ratio + 1e-9));
    double rest = length - static_cast<double>(n) * dt_int;
    if (rest < 0.0 && n > 0 && -rest > 1e-9 * dt_int) {
        --n;
        rest = length - static_cast<double>(n) * dt_int;
    }
    if (std::abs(rest) <= 1e-9 * dt_int) {
        rest = 0.0;
    }
    plan.full_steps = n;
    plan.remainder = sign * rest;
    return plan;
}

Vec2 step(const FlowField& field, const Vec2& x, double t, double dt, const Vec2& control) {
    Vec2 next;
    try {
        const double half = 0.5 * dt;
        const Vec2 k1 = field.velocity(x, t) + control;
        const Vec2 k2 = field.velocity(x + half * k1, t + half) + control;
        const Vec2 k3 = field.velocity(x + half * k2, t + half) + control;
        const Vec2 k4 = field.velocity(x + dt * k3, t + dt) + control;
        next = x + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4);
    } catch (const DomainError& e) {
        throw IntegrationError(fmt::format("integration step failed at ({}, {}), t = {}: {}", x.x(), x.y(), t, e.what()),
                               x, t);
    }
    if (!next.allFinite()) {
        throw IntegrationError(fmt::format("integration step from ({}, {}), t = {} produced a non-finite state", x.x(),
                                           x.y(), t),
                               x, t);
    }
    return next;
}

Vec2 integrate(const FlowField& field, const Vec2& x0, double t0, double duration, const IntegratorConfig& cfg,
               const Vec2& control) {
    const StepPlan plan = plan_steps(duration, cfg.dt_int);
    Vec2 x = x0;
    for (std::int64_t k = 0; k < plan.full_steps; ++k) {
        x = step(field, x, t0 + static_cast<double>(k) * plan.step, plan.step, control);
    }
    if (plan.remainder != 0.0) {
        x = step(field, x, t0 + static_cast<double>(plan.full_steps) * plan.step, plan.remainder, control);
    }
    return x;
}

Vec2 advect_point(const FlowField& field, const Vec2& x0, double t0, double T, const IntegratorConfig& cfg) {
    cfg.validate();
    if (!x0.allFinite() || !std::isfinite(t0) || !std::isfinite(T)) {
        throw DomainError("advect_point called with non-finite arguments");
    }
    if (std::abs(T) < cfg.dt_int) {
        throw DomainError(fmt::format("advection horizon |T| = {} is shorter than dt_int = {}", std::abs(T), cfg.dt_int));
    }
    return integrate(field, x0, t0, T, cfg);
}

FlowMapGrid flow_map(const FlowField& field, const GridSpec& spec, double t0, double T, const IntegratorConfig& cfg) {
    spec.validate();
    FlowMapGrid map{spec, t0, T, std::vector<Vec2>(spec.size())};
    const auto count = static_cast<std::int64_t>(spec.size());
    std::int64_t first_failure = std::numeric_limits<std::int64_t>::max();
    std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t n = 0; n < count; ++n) {
        const int i = static_cast<int>(n % spec.nx);
        const int j = static_cast<int>(n / spec.nx);
        try {
            map.positions[static_cast<std::size_t>(n)] = advect_point(field, spec.node(i, j), t0, T, cfg);
        } catch (...) {
#pragma omp critical(gyreplan_flow_map_failure)
            {
                // Report the lowest failing node so the error does not depend on scheduling.
                if (n < first_failure) {
                    first_failure = n;
                    failure = std::current_exception();
                }
            }
        }
    }

    if (failure) {
        const auto node = static_cast<std::size_t>(first_failure);
        try {
            std::rethrow_exception(failure);
        } catch (const IntegrationError& e) {
            throw IntegrationError(fmt::format("flow map node {}: {}", node, e.what()), e.position(), e.time(), node);
        } catch (const Error& e) {
            const int i = static_cast<int>(first_failure % spec.nx);
            const int j = static_cast<int>(first_failure / spec.nx);
            throw IntegrationError(fmt::format("flow map node {}: {}", node, e.what()), spec.node(i, j), t0, node);
        }
    }
    return map;
}

} // namespace gyreplan
