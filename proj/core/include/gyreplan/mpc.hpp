#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "gyreplan/advect.hpp"
#include "gyreplan/errors.hpp"
#include "gyreplan/flowfield.hpp"
#include "gyreplan/types.hpp"

namespace gyreplan {

/// Settings of the projected quasi-Newton horizon solver.
struct SolverConfig {
    double tol_g = 1e-6;     // projected-gradient infinity norm at convergence
    int max_iter = 500;
    int memory = 10;         // stored curvature pairs
    double armijo = 1e-4;    // sufficient-decrease constant
    int max_backtracks = 40;

    void validate() const;
};

/// Finite-horizon problem: minimise
///   sum_{k=1..N} Q |x_k - goal|^2 dt + sum_{k=0..N-1} R |u_k|^2 dt + Q2 |x_N - goal|^2
/// over piecewise-constant controls with |u| <= u_max componentwise.
struct MpcConfig {
    double horizon = 4.0; // T_H
    double dt = 0.1;
    double Q = 1.0;
    double R = 1.0;
    double Q2 = 0.0;
    double u_max = 0.1;
    Vec2 goal{0.5, 0.5};
    SolverConfig solver;
    bool warm_start = true;

    /// Number of control intervals N = horizon / dt.
    int steps() const;

    void validate() const;
};

struct ControlSequence {
    std::vector<Vec2> u;
    double t0 = 0.0;

    std::size_t size() const noexcept { return u.size(); }
};

struct CostBreakdown {
    double J = 0.0;
    double J_e = 0.0;
    double J_u = 0.0;
    double J_terminal = 0.0;
};

struct HorizonSolution {
    ControlSequence controls;
    std::vector<Vec2> predicted; // N + 1 states, predicted[0] is the initial state
    CostBreakdown cost;
    int iterations = 0;
    bool converged = false;
    std::vector<double> cost_history; // J of every accepted iterate, starting point first
};

struct HorizonSummary {
    double J = 0.0;
    double J_e = 0.0;
    double J_u = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Closed-loop record. states and times have one more entry than controls.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec2> states;
    std::vector<Vec2> controls;
    std::vector<double> inst_energy; // u_k . u_k
    std::vector<HorizonSummary> horizons;

    std::size_t steps() const noexcept { return controls.size(); }
};

/// A receding-horizon run stopped early; holds everything recorded so far.
class MpcAborted : public SolverError {
  public:
    MpcAborted(const std::string& what, Trajectory partial) : SolverError(what), partial_(std::move(partial)) {}

    const Trajectory& partial() const noexcept { return partial_; }

  private:
    Trajectory partial_;
};

/// States x_0..x_N under dx/dt = v(x,t) + u_k on [t0 + k dt, t0 + (k+1) dt].
std::vector<Vec2> rollout(const FlowField& field, const Vec2& x0, const ControlSequence& seq, const MpcConfig& cfg,
                          const IntegratorConfig& icfg);

CostBreakdown cost(const FlowField& field, const Vec2& x0, const ControlSequence& seq, const MpcConfig& cfg,
                   const IntegratorConfig& icfg);

/// dJ/du_k for every interval, by the discrete adjoint of the RK4 rollout.
std::vector<Vec2> cost_gradient(const FlowField& field, const Vec2& x0, const ControlSequence& seq,
                                const MpcConfig& cfg, const IntegratorConfig& icfg);

/// Locally optimal controls for one horizon starting at (x0, t0). Cold starts
/// begin from u = 0; a warm sequence must hold N entries and is clipped into
/// the box. Exhausting max_iter is reported through converged, not thrown.
HorizonSolution solve_horizon(const FlowField& field, const Vec2& x0, double t0, const MpcConfig& cfg,
                              const IntegratorConfig& icfg, const std::optional<ControlSequence>& warm = std::nullopt);

/// Drops the first control and repeats the last one.
ControlSequence shift_controls(const ControlSequence& seq, double dt);

/// Receding-horizon loop over [t_start, t_start + duration]. Throws
/// MpcAborted with the partial trajectory when a solve fails.
Trajectory run_mpc(const FlowField& field, const Vec2& x_start, double t_start, const MpcConfig& cfg,
                   const IntegratorConfig& icfg, double duration);

/// Columns t,x,y,ux,uy,inst_energy,J_pred,Je_pred,Ju_pred,converged. The last
/// row holds the final state and leaves the per-step columns empty.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Inverse of write_trajectory_csv. Throws DomainError on schema mismatch.
Trajectory read_trajectory_csv(std::istream& in);

} // namespace gyreplan
