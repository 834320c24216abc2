#pragma once

#include <numbers>

#include "gyreplan/types.hpp"

namespace gyreplan {

/// Parameters of the analytic time-periodic double gyre on [0,2]x[0,1].
struct DoubleGyreParams {
    double A = 0.1;
    double epsilon = 0.25;
    double omega = 2.0 * std::numbers::pi / 10.0;

    /// Throws ConfigError when a field is out of range. A = 0 is accepted and
    /// yields the null field.
    void validate() const;
};

struct FieldQuery {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;
};

/// phi(x, y, t) = A sin(pi f(x,t)) sin(pi y), f = a(t) x^2 + b(t) x.
double stream_function(const FieldQuery& q, const DoubleGyreParams& p);

/// (-dphi/dy, dphi/dx).
Vec2 velocity(const FieldQuery& q, const DoubleGyreParams& p);

/// Spatial Jacobian of the velocity, rows are (vx, vy), columns (d/dx, d/dy).
Mat2 velocity_gradient(const FieldQuery& q, const DoubleGyreParams& p);

/// Peak speed of the double gyre, pi * A.
double max_speed(const DoubleGyreParams& p);

/// Time-varying 2-D velocity field. Implementations must be pure and safe to
/// evaluate concurrently.
class FlowField {
  public:
    virtual ~FlowField() = default;

    virtual Vec2 velocity(const Vec2& x, double t) const = 0;

    /// d v / d x at (x, t); needed by the discrete adjoint in the controller.
    virtual Mat2 gradient(const Vec2& x, double t) const = 0;

    /// Both of the above; fields override when the two share work.
    virtual void evaluate(const Vec2& x, double t, Vec2& v, Mat2& grad) const {
        v = velocity(x, t);
        grad = gradient(x, t);
    }
};

class DoubleGyre final : public FlowField {
  public:
    DoubleGyre() = default;
    explicit DoubleGyre(const DoubleGyreParams& params);

    const DoubleGyreParams& params() const noexcept { return params_; }

    Vec2 velocity(const Vec2& x, double t) const override;
    Mat2 gradient(const Vec2& x, double t) const override;
    void evaluate(const Vec2& x, double t, Vec2& v, Mat2& grad) const override;

  private:
    DoubleGyreParams params_;
};

/// Spatially and temporally constant velocity.
class UniformFlow final : public FlowField {
  public:
    explicit UniformFlow(const Vec2& v) : v_(v) {}

    Vec2 velocity(const Vec2& x, double t) const override;
    Mat2 gradient(const Vec2& x, double t) const override;

  private:
    Vec2 v_;
};

/// Hyperbolic saddle v = (rate * x, -rate * y) with flow map
/// (x e^{rate T}, y e^{-rate T}).
class LinearSaddle final : public FlowField {
  public:
    explicit LinearSaddle(double rate = 1.0) : rate_(rate) {}

    double rate() const noexcept { return rate_; }

    Vec2 velocity(const Vec2& x, double t) const override;
    Mat2 gradient(const Vec2& x, double t) const override;

  private:
    double rate_;
};

} // namespace gyreplan
