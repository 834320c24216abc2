#include "gyreplan/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <ostream>
#include <span>

#include <fmt/format.h>

#include "gyreplan/csv.hpp"

namespace gyreplan {

void SolverConfig::validate() const {
    if (!(tol_g > 0.0)) {
        throw ConfigError(fmt::format("solver tol_g must be > 0, got {}", tol_g));
    }
    if (max_iter < 0) {
        throw ConfigError(fmt::format("solver max_iter must be >= 0, got {}", max_iter));
    }
    if (memory < 1) {
        throw ConfigError(fmt::format("solver memory must be >= 1, got {}", memory));
    }
    if (!(armijo > 0.0 && armijo < 1.0)) {
        throw ConfigError(fmt::format("solver armijo constant must lie in (0, 1), got {}", armijo));
    }
    if (max_backtracks < 1) {
        throw ConfigError(fmt::format("solver max_backtracks must be >= 1, got {}", max_backtracks));
    }
}

int MpcConfig::steps() const {
    const double ratio = horizon / dt;
    return static_cast<int>(std::llround(ratio));
}

void MpcConfig::validate() const {
    if (!std::isfinite(horizon) || horizon <= 0.0) {
        throw ConfigError(fmt::format("horizon T_H must be > 0, got {}", horizon));
    }
    if (!std::isfinite(dt) || dt <= 0.0) {
        throw ConfigError(fmt::format("control step dt must be > 0, got {}", dt));
    }
    const double ratio = horizon / dt;
    if (std::llround(ratio) < 1 || std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
        throw ConfigError(fmt::format("horizon T_H = {} is not a whole multiple of dt = {}", horizon, dt));
    }
    for (const auto& [name, w] : {std::pair{"Q", Q}, std::pair{"R", R}, std::pair{"Q2", Q2}}) {
        if (!std::isfinite(w) || w < 0.0) {
            throw ConfigError(fmt::format("weight {} must be >= 0, got {}", name, w));
        }
    }
    if (Q == 0.0 && R == 0.0 && Q2 == 0.0) {
        throw ConfigError("weights Q, R and Q2 are all zero");
    }
    if (!std::isfinite(u_max) || u_max < 0.0) {
        throw ConfigError(fmt::format("control bound u_max must be >= 0, got {}", u_max));
    }
    if (!goal.allFinite()) {
        throw ConfigError("goal state must be finite");
    }
    solver.validate();
}

namespace {

/// Single-shooting transcription of one horizon. Controls are flattened as
/// (ux_0, uy_0, ux_1, ...).
class HorizonModel {
  public:
    HorizonModel(const FlowField& field, const Vec2& x0, double t0, const MpcConfig& cfg, const IntegratorConfig& icfg)
        : field_(field), x0_(x0), t0_(t0), cfg_(cfg), steps_(cfg.steps()), plan_(plan_steps(cfg.dt, icfg.dt_int)) {}

    int steps() const noexcept { return steps_; }

    CostBreakdown value(std::span<const double> u, std::vector<Vec2>* states = nullptr) const {
        if (states != nullptr) {
            states->assign(1, x0_);
        }
        CostBreakdown c;
        Vec2 x = x0_;
        for (int k = 0; k < steps_; ++k) {
            const Vec2 uk(u[2 * k], u[2 * k + 1]);
            x = advance(x, interval_start(k), uk, nullptr);
            c.J_e += cfg_.Q * (x - cfg_.goal).squaredNorm() * cfg_.dt;
            c.J_u += cfg_.R * uk.squaredNorm() * cfg_.dt;
            if (states != nullptr) {
                states->push_back(x);
            }
        }
        c.J_terminal = cfg_.Q2 * (x - cfg_.goal).squaredNorm();
        c.J = c.J_e + c.J_u + c.J_terminal;
        return c;
    }

    CostBreakdown value_and_gradient(std::span<const double> u, std::span<double> grad) const {
        // Forward sweep, keeping the start of every RK4 substep.
        substeps_.clear();
        std::vector<Vec2> boundary;
        boundary.reserve(static_cast<std::size_t>(steps_) + 1);
        boundary.push_back(x0_);
        CostBreakdown c;
        Vec2 x = x0_;
        for (int k = 0; k < steps_; ++k) {
            const Vec2 uk(u[2 * k], u[2 * k + 1]);
            x = advance(x, interval_start(k), uk, &substeps_);
            boundary.push_back(x);
            c.J_e += cfg_.Q * (x - cfg_.goal).squaredNorm() * cfg_.dt;
            c.J_u += cfg_.R * uk.squaredNorm() * cfg_.dt;
        }
        c.J_terminal = cfg_.Q2 * (x - cfg_.goal).squaredNorm();
        c.J = c.J_e + c.J_u + c.J_terminal;

        // Reverse sweep. lambda holds dJ/dx at the end of the current interval.
        const std::size_t per_interval = substeps_.size() / static_cast<std::size_t>(steps_);
        Vec2 lambda = (2.0 * cfg_.Q * cfg_.dt + 2.0 * cfg_.Q2) * (x - cfg_.goal);
        for (int k = steps_ - 1; k >= 0; --k) {
            const Vec2 uk(u[2 * k], u[2 * k + 1]);
            Vec2 u_bar = Vec2::Zero();
            const std::size_t first = static_cast<std::size_t>(k) * per_interval;
            for (std::size_t m = per_interval; m-- > 0;) {
                const Substep& s = substeps_[first + m];
                lambda = rk4_adjoint(s, uk, lambda, u_bar);
            }
            const Vec2 gk = u_bar + 2.0 * cfg_.R * cfg_.dt * uk;
            grad[2 * k] = gk.x();
            grad[2 * k + 1] = gk.y();
            if (k >= 1) {
                lambda += 2.0 * cfg_.Q * cfg_.dt * (boundary[static_cast<std::size_t>(k)] - cfg_.goal);
            }
        }
        return c;
    }

  private:
    struct Substep {
        Vec2 x;
        double t;
        double h;
    };

    double interval_start(int k) const noexcept { return t0_ + static_cast<double>(k) * cfg_.dt; }

    Vec2 advance(Vec2 x, double t, const Vec2& uk, std::vector<Substep>* tape) const {
        for (std::int64_t m = 0; m < plan_.full_steps; ++m) {
            const double ts = t + static_cast<double>(m) * plan_.step;
            if (tape != nullptr) {
                tape->push_back({x, ts, plan_.step});
            }
            x = step(field_, x, ts, plan_.step, uk);
        }
        if (plan_.remainder != 0.0) {
            const double ts = t + static_cast<double>(plan_.full_steps) * plan_.step;
            if (tape != nullptr) {
                tape->push_back({x, ts, plan_.remainder});
            }
            x = step(field_, x, ts, plan_.remainder, uk);
        }
        return x;
    }

    // Reverse-mode derivative of one RK4 step with constant control. Returns
    // dJ/dx at the step start and accumulates dJ/du into u_bar.
    Vec2 rk4_adjoint(const Substep& s, const Vec2& uk, const Vec2& lambda, Vec2& u_bar) const {
        const double h = s.h;
        const double half = 0.5 * h;
        Vec2 v;
        Mat2 a1, a2, a3, a4;
        field_.evaluate(s.x, s.t, v, a1);
        const Vec2 k1 = v + uk;
        const Vec2 y2 = s.x + half * k1;
        field_.evaluate(y2, s.t + half, v, a2);
        const Vec2 k2 = v + uk;
        const Vec2 y3 = s.x + half * k2;
        field_.evaluate(y3, s.t + half, v, a3);
        const Vec2 k3 = v + uk;
        const Vec2 y4 = s.x + h * k3;
        field_.evaluate(y4, s.t + h, v, a4);

        Vec2 x_bar = lambda;
        Vec2 k1_bar = (h / 6.0) * lambda;
        Vec2 k2_bar = (h / 3.0) * lambda;
        Vec2 k3_bar = (h / 3.0) * lambda;
        const Vec2 k4_bar = (h / 6.0) * lambda;

        const Vec2 y4_bar = a4.transpose() * k4_bar;
        u_bar += k4_bar;
        x_bar += y4_bar;
        k3_bar += h * y4_bar;

        const Vec2 y3_bar = a3.transpose() * k3_bar;
        u_bar += k3_bar;
        x_bar += y3_bar;
        k2_bar += half * y3_bar;

        const Vec2 y2_bar = a2.transpose() * k2_bar;
        u_bar += k2_bar;
        x_bar += y2_bar;
        k1_bar += half * y2_bar;

        u_bar += k1_bar;
        x_bar += a1.transpose() * k1_bar;
        return x_bar;
    }

    const FlowField& field_;
    Vec2 x0_;
    double t0_;
    const MpcConfig& cfg_;
    int steps_;
    StepPlan plan_;
    mutable std::vector<Substep> substeps_;
};

std::vector<double> flatten(const ControlSequence& seq) {
    std::vector<double> flat(2 * seq.size());
    for (std::size_t k = 0; k < seq.size(); ++k) {
        flat[2 * k] = seq.u[k].x();
        flat[2 * k + 1] = seq.u[k].y();
    }
    return flat;
}

ControlSequence unflatten(std::span<const double> flat, double t0) {
    ControlSequence seq;
    seq.t0 = t0;
    seq.u.reserve(flat.size() / 2);
    for (std::size_t k = 0; k + 1 < flat.size(); k += 2) {
        seq.u.emplace_back(flat[k], flat[k + 1]);
    }
    return seq;
}

void check_sequence(const ControlSequence& seq, const MpcConfig& cfg) {
    cfg.validate();
    if (seq.size() != static_cast<std::size_t>(cfg.steps())) {
        throw DomainError(fmt::format("control sequence holds {} intervals, horizon needs {}", seq.size(), cfg.steps()));
    }
}

double dot(std::span<const double> a, std::span<const double> b, const std::vector<char>& mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (mask[i] != 0) {
            s += a[i] * b[i];
        }
    }
    return s;
}

struct CurvaturePair {
    std::vector<double> s;
    std::vector<double> y;
};

/// Box-constrained minimiser: L-BFGS direction on the variables not held at
/// an active bound, projected backtracking line search, steepest-descent
/// fallback when the quasi-Newton step fails.
class ProjectedQuasiNewton {
  public:
    ProjectedQuasiNewton(const HorizonModel& model, const MpcConfig& cfg)
        : model_(model), cfg_(cfg), lo_(-cfg.u_max), hi_(cfg.u_max) {}

    HorizonSolution solve(std::vector<double> x, double t0) {
        const std::size_t n = x.size();
        for (double& xi : x) {
            xi = std::clamp(xi, lo_, hi_);
        }
        std::vector<double> g(n);
        CostBreakdown f = evaluate(x, g);

        HorizonSolution sol;
        sol.cost_history.push_back(f.J);
        std::deque<CurvaturePair> memory;
        std::vector<char> free(n);
        std::vector<double> d(n);
        std::vector<double> x_trial(n);
        std::vector<double> g_trial(n);

        while (true) {
            if (projected_gradient_norm(x, g) <= cfg_.solver.tol_g) {
                sol.converged = true;
                break;
            }
            if (sol.iterations >= cfg_.solver.max_iter) {
                break;
            }
            for (std::size_t i = 0; i < n; ++i) {
                const bool held = (x[i] <= lo_ && g[i] > 0.0) || (x[i] >= hi_ && g[i] < 0.0);
                free[i] = held ? 0 : 1;
            }

            bool accepted = false;
            CostBreakdown f_trial;
            for (const bool quasi_newton : {true, false}) {
                if (quasi_newton && memory.empty()) {
                    continue;
                }
                if (quasi_newton) {
                    lbfgs_direction(memory, g, free, d);
                } else {
                    steepest_direction(memory, g, free, d);
                }
                if (dot(d, g, free) >= 0.0) {
                    continue;
                }
                if (line_search(x, f.J, g, d, x_trial, g_trial, f_trial)) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                break; // no decrease available at working precision
            }

            CurvaturePair pair{std::vector<double>(n), std::vector<double>(n)};
            double sy = 0.0;
            double yy = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                pair.s[i] = x_trial[i] - x[i];
                pair.y[i] = g_trial[i] - g[i];
                sy += pair.s[i] * pair.y[i];
                yy += pair.y[i] * pair.y[i];
            }
            if (sy > 1e-12 * yy && sy > 0.0) {
                memory.push_back(std::move(pair));
                if (memory.size() > static_cast<std::size_t>(cfg_.solver.memory)) {
                    memory.pop_front();
                }
            }
            x.swap(x_trial);
            g.swap(g_trial);
            f = f_trial;
            ++sol.iterations;
            sol.cost_history.push_back(f.J);
        }

        sol.controls = unflatten(x, t0);
        model_.value(x, &sol.predicted);
        sol.cost = f;
        return sol;
    }

  private:
    CostBreakdown evaluate(std::span<const double> x, std::span<double> g) const {
        CostBreakdown c;
        try {
            c = model_.value_and_gradient(x, g);
        } catch (const IntegrationError& e) {
            throw SolverError(fmt::format("horizon rollout failed during optimisation: {}", e.what()));
        }
        if (!std::isfinite(c.J)) {
            throw SolverError("non-finite horizon cost during optimisation");
        }
        for (const double gi : g) {
            if (!std::isfinite(gi)) {
                throw SolverError("non-finite horizon gradient during optimisation");
            }
        }
        return c;
    }

    double projected_gradient_norm(std::span<const double> x, std::span<const double> g) const {
        double norm = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            norm = std::max(norm, std::abs(std::clamp(x[i] - g[i], lo_, hi_) - x[i]));
        }
        return norm;
    }

    void lbfgs_direction(const std::deque<CurvaturePair>& memory, std::span<const double> g,
                         const std::vector<char>& free, std::vector<double>& d) const {
        const std::size_t n = g.size();
        std::vector<double> q(n);
        for (std::size_t i = 0; i < n; ++i) {
            q[i] = free[i] != 0 ? g[i] : 0.0;
        }
        std::vector<double> alpha(memory.size(), 0.0);
        std::vector<double> rho(memory.size(), 0.0);
        for (std::size_t m = memory.size(); m-- > 0;) {
            const double sy = dot(memory[m].s, memory[m].y, free);
            if (sy <= 0.0) {
                continue; // pair carries no curvature on the free subspace
            }
            rho[m] = 1.0 / sy;
            alpha[m] = rho[m] * dot(memory[m].s, q, free);
            for (std::size_t i = 0; i < n; ++i) {
                if (free[i] != 0) {
                    q[i] -= alpha[m] * memory[m].y[i];
                }
            }
        }
        const double gamma = initial_scaling(memory, free);
        for (std::size_t i = 0; i < n; ++i) {
            q[i] *= gamma;
        }
        for (std::size_t m = 0; m < memory.size(); ++m) {
            if (rho[m] == 0.0) {
                continue;
            }
            const double beta = rho[m] * dot(memory[m].y, q, free);
            for (std::size_t i = 0; i < n; ++i) {
                if (free[i] != 0) {
                    q[i] += memory[m].s[i] * (alpha[m] - beta);
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = free[i] != 0 ? -q[i] : 0.0;
        }
    }

    void steepest_direction(const std::deque<CurvaturePair>& memory, std::span<const double> g,
                            const std::vector<char>& free, std::vector<double>& d) const {
        double scale = 1.0;
        if (!memory.empty()) {
            scale = initial_scaling(memory, free);
        } else {
            // First step: a unit trial moves the largest component by at most u_max.
            double g_max = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (free[i] != 0) {
                    g_max = std::max(g_max, std::abs(g[i]));
                }
            }
            if (g_max > 0.0 && hi_ > 0.0) {
                scale = hi_ / g_max;
            }
        }
        for (std::size_t i = 0; i < g.size(); ++i) {
            d[i] = free[i] != 0 ? -scale * g[i] : 0.0;
        }
    }

    static double initial_scaling(const std::deque<CurvaturePair>& memory, const std::vector<char>& free) {
        for (std::size_t m = memory.size(); m-- > 0;) {
            const double sy = dot(memory[m].s, memory[m].y, free);
            const double yy = dot(memory[m].y, memory[m].y, free);
            if (sy > 0.0 && yy > 0.0) {
                return sy / yy;
            }
        }
        return 1.0;
    }

    bool line_search(std::span<const double> x, double f0, std::span<const double> g, std::span<const double> d,
                     std::vector<double>& x_trial, std::vector<double>& g_trial, CostBreakdown& f_trial) const {
        double step_length = 1.0;
        for (int attempt = 0; attempt < cfg_.solver.max_backtracks; ++attempt, step_length *= 0.5) {
            double decrease = 0.0;
            bool moved = false;
            for (std::size_t i = 0; i < x.size(); ++i) {
                x_trial[i] = std::clamp(x[i] + step_length * d[i], lo_, hi_);
                const double s = x_trial[i] - x[i];
                moved = moved || s != 0.0;
                decrease += g[i] * s;
            }
            if (!moved) {
                return false;
            }
            f_trial = evaluate(x_trial, g_trial);
            if (f_trial.J <= f0 + cfg_.solver.armijo * decrease) {
                return f_trial.J <= f0;
            }
        }
        return false;
    }

    const HorizonModel& model_;
    const MpcConfig& cfg_;
    double lo_;
    double hi_;
};

} // namespace

std::vector<Vec2> rollout(const FlowField& field, const Vec2& x0, const ControlSequence& seq, const MpcConfig& cfg,
                          const IntegratorConfig& icfg) {
    check_sequence(seq, cfg);
    icfg.validate();
    const HorizonModel model(field, x0, seq.t0, cfg, icfg);
    std::vector<Vec2> states;
    model.value(flatten(seq), &states);
    return states;
}

CostBreakdown cost(const FlowField& field, const Vec2& x0, const ControlSequence& seq, const MpcConfig& cfg,
                   const IntegratorConfig& icfg) {
    check_sequence(seq, cfg);
    icfg.validate();
    const HorizonModel model(field, x0, seq.t0, cfg, icfg);
    return model.value(flatten(seq));
}

std::vector<Vec2> cost_gradient(const FlowField& field, const Vec2& x0, const ControlSequence& seq,
                                const MpcConfig& cfg, const IntegratorConfig& icfg) {
    check_sequence(seq, cfg);
    icfg.validate();
    const HorizonModel model(field, x0, seq.t0, cfg, icfg);
    const std::vector<double> flat = flatten(seq);
    std::vector<double> grad(flat.size());
    model.value_and_gradient(flat, grad);
    return unflatten(grad, seq.t0).u;
}

HorizonSolution solve_horizon(const FlowField& field, const Vec2& x0, double t0, const MpcConfig& cfg,
                              const IntegratorConfig& icfg, const std::optional<ControlSequence>& warm) {
    cfg.validate();
    icfg.validate();
    if (!x0.allFinite() || !std::isfinite(t0)) {
        throw DomainError("solve_horizon called with a non-finite initial state or time");
    }
    const int n = cfg.steps();
    std::vector<double> start(2 * static_cast<std::size_t>(n), 0.0);
    if (warm) {
        if (warm->size() != static_cast<std::size_t>(n)) {
            throw DomainError(fmt::format("warm start holds {} intervals, horizon needs {}", warm->size(), n));
        }
        start = flatten(*warm);
    }
    const HorizonModel model(field, x0, t0, cfg, icfg);
    ProjectedQuasiNewton solver(model, cfg);
    return solver.solve(std::move(start), t0);
}

ControlSequence shift_controls(const ControlSequence& seq, double dt) {
    ControlSequence shifted;
    shifted.t0 = seq.t0 + dt;
    if (seq.u.empty()) {
        return shifted;
    }
    shifted.u.assign(seq.u.begin() + 1, seq.u.end());
    shifted.u.push_back(seq.u.back());
    return shifted;
}

Trajectory run_mpc(const FlowField& field, const Vec2& x_start, double t_start, const MpcConfig& cfg,
                   const IntegratorConfig& icfg, double duration) {
    cfg.validate();
    icfg.validate();
    if (!std::isfinite(duration) || duration < cfg.dt * (1.0 - 1e-9)) {
        throw DomainError(fmt::format("duration {} is shorter than one control step {}", duration, cfg.dt));
    }
    const auto total = static_cast<int>(std::floor(duration / cfg.dt + 1e-9));

    Trajectory traj;
    traj.times.push_back(t_start);
    traj.states.push_back(x_start);

    // One interval of the same dynamics the horizon model uses.
    MpcConfig single = cfg;
    single.horizon = cfg.dt;

    std::optional<ControlSequence> warm;
    Vec2 x = x_start;
    for (int k = 0; k < total; ++k) {
        const double t = t_start + static_cast<double>(k) * cfg.dt;
        try {
            HorizonSolution sol = solve_horizon(field, x, t, cfg, icfg, cfg.warm_start ? warm : std::nullopt);
            const Vec2 u0 = sol.controls.u.front();
            x = rollout(field, x, ControlSequence{{u0}, t}, single, icfg).back();

            traj.controls.push_back(u0);
            traj.inst_energy.push_back(u0.squaredNorm());
            traj.horizons.push_back({sol.cost.J, sol.cost.J_e, sol.cost.J_u, sol.iterations, sol.converged});
            traj.times.push_back(t_start + static_cast<double>(k + 1) * cfg.dt);
            traj.states.push_back(x);
            warm = shift_controls(sol.controls, cfg.dt);
        } catch (const Error& e) {
            throw MpcAborted(fmt::format("receding-horizon step {} at t = {} failed: {}", k, t, e.what()),
                             std::move(traj));
        }
    }
    return traj;
}

namespace {
constexpr const char* trajectory_header = "t,x,y,ux,uy,inst_energy,J_pred,Je_pred,Ju_pred,converged";
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << trajectory_header << '\n';
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        out << format_number(traj.times[k]) << ',' << format_number(traj.states[k].x()) << ','
            << format_number(traj.states[k].y());
        if (k < traj.controls.size()) {
            const HorizonSummary& h = traj.horizons[k];
            out << ',' << format_number(traj.controls[k].x()) << ',' << format_number(traj.controls[k].y()) << ','
                << format_number(traj.inst_energy[k]) << ',' << format_number(h.J) << ',' << format_number(h.J_e)
                << ',' << format_number(h.J_u) << ',' << (h.converged ? 1 : 0);
        } else {
            out << ",,,,,,,";
        }
        out << '\n';
    }
}

Trajectory read_trajectory_csv(std::istream& in) {
    const CsvTable table = CsvTable::read(in);
    const std::vector<std::string> expected = split_csv_line(trajectory_header);
    if (table.header() != expected) {
        throw DomainError(fmt::format("trajectory CSV header must be '{}'", trajectory_header));
    }
    if (table.rows() == 0) {
        throw DomainError("trajectory CSV has no rows");
    }
    Trajectory traj;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        traj.times.push_back(table.number(r, 0));
        traj.states.emplace_back(table.number(r, 1), table.number(r, 2));
        const bool last = r + 1 == table.rows();
        if (last) {
            for (std::size_t c = 3; c < expected.size(); ++c) {
                if (!table.cell(r, c).empty()) {
                    throw DomainError("final trajectory row must leave the per-step columns empty");
                }
            }
            break;
        }
        traj.controls.emplace_back(table.number(r, 3), table.number(r, 4));
        traj.inst_energy.push_back(table.number(r, 5));
        const std::string& flag = table.cell(r, 9);
        if (flag != "0" && flag != "1") {
            throw DomainError(fmt::format("converged column must be 0 or 1, got '{}'", flag));
        }
        traj.horizons.push_back({table.number(r, 6), table.number(r, 7), table.number(r, 8), 0, flag == "1"});
    }
    return traj;
}

} // namespace gyreplan
