#include "gyreplan/flowfield.hpp"

#include <cmath>

#include <fmt/format.h>

#include "gyreplan/errors.hpp"

namespace gyreplan {

namespace {

constexpr double pi = std::numbers::pi;

void require_finite(const FieldQuery& q) {
    if (!std::isfinite(q.x) || !std::isfinite(q.y) || !std::isfinite(q.t)) {
        throw DomainError(fmt::format("double gyre evaluated at non-finite point ({}, {}, {})", q.x, q.y, q.t));
    }
}

// f(x,t) and df/dx for the oscillating gyre boundary.
struct Forcing {
    double f;
    double dfdx;
    double d2fdx2;
};

Forcing forcing(double x, double t, const DoubleGyreParams& p) {
    const double a = p.epsilon * std::sin(p.omega * t);
    const double b = 1.0 - 2.0 * a;
    return {a * x * x + b * x, 2.0 * a * x + b, 2.0 * a};
}

} // namespace

void DoubleGyreParams::validate() const {
    if (!std::isfinite(A) || A < 0.0) {
        throw ConfigError(fmt::format("double gyre amplitude A must be >= 0, got {}", A));
    }
    if (!std::isfinite(epsilon) || epsilon < 0.0 || epsilon > 0.5) {
        throw ConfigError(fmt::format("double gyre epsilon must lie in [0, 0.5], got {}", epsilon));
    }
    if (!std::isfinite(omega) || omega < 0.0) {
        throw ConfigError(fmt::format("double gyre omega must be >= 0, got {}", omega));
    }
}

double stream_function(const FieldQuery& q, const DoubleGyreParams& p) {
    require_finite(q);
    const Forcing fx = forcing(q.x, q.t, p);
    return p.A * std::sin(pi * fx.f) * std::sin(pi * q.y);
}

Vec2 velocity(const FieldQuery& q, const DoubleGyreParams& p) {
    require_finite(q);
    const Forcing fx = forcing(q.x, q.t, p);
    const double scale = pi * p.A;
    return {-scale * std::sin(pi * fx.f) * std::cos(pi * q.y),
            scale * std::cos(pi * fx.f) * std::sin(pi * q.y) * fx.dfdx};
}

Mat2 velocity_gradient(const FieldQuery& q, const DoubleGyreParams& p) {
    require_finite(q);
    const Forcing fx = forcing(q.x, q.t, p);
    const double scale = pi * pi * p.A;
    const double sf = std::sin(pi * fx.f);
    const double cf = std::cos(pi * fx.f);
    const double sy = std::sin(pi * q.y);
    const double cy = std::cos(pi * q.y);
    // d(vy)/dx picks up the curvature of f as well
    const double dvydx = (-scale * sf * fx.dfdx * fx.dfdx + pi * p.A * cf * fx.d2fdx2) * sy;
    Mat2 g;
    g << -scale * cf * fx.dfdx * cy, scale * sf * sy,
        dvydx, scale * cf * fx.dfdx * cy;
    return g;
}

double max_speed(const DoubleGyreParams& p) { return pi * p.A; }

DoubleGyre::DoubleGyre(const DoubleGyreParams& params) : params_(params) { params_.validate(); }

Vec2 DoubleGyre::velocity(const Vec2& x, double t) const {
    return gyreplan::velocity(FieldQuery{x.x(), x.y(), t}, params_);
}

Mat2 DoubleGyre::gradient(const Vec2& x, double t) const {
    return velocity_gradient(FieldQuery{x.x(), x.y(), t}, params_);
}

void DoubleGyre::evaluate(const Vec2& x, double t, Vec2& v, Mat2& grad) const {
    const FieldQuery q{x.x(), x.y(), t};
    require_finite(q);
    const Forcing fx = forcing(q.x, q.t, params_);
    const double sf = std::sin(pi * fx.f);
    const double cf = std::cos(pi * fx.f);
    const double sy = std::sin(pi * q.y);
    const double cy = std::cos(pi * q.y);
    const double vs = pi * params_.A;
    const double gs = pi * pi * params_.A;
    v << -vs * sf * cy, vs * cf * sy * fx.dfdx;
    grad << -gs * cf * fx.dfdx * cy, gs * sf * sy,
        (-gs * sf * fx.dfdx * fx.dfdx + vs * cf * fx.d2fdx2) * sy, gs * cf * fx.dfdx * cy;
}

Vec2 UniformFlow::velocity(const Vec2&, double) const { return v_; }

Mat2 UniformFlow::gradient(const Vec2&, double) const { return Mat2::Zero(); }

Vec2 LinearSaddle::velocity(const Vec2& x, double) const { return {rate_ * x.x(), -rate_ * x.y()}; }

Mat2 LinearSaddle::gradient(const Vec2&, double) const {
    Mat2 g;
    g << rate_, 0.0, 0.0, -rate_;
    return g;
}

} // namespace gyreplan
