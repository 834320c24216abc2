#include "gyreplan/cli/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "gyreplan/analysis.hpp"
#include "gyreplan/errors.hpp"

namespace gyreplan::cli {

using nlohmann::json;

namespace {

double number(const json& cfg, const char* key, double fallback) {
    if (!cfg.contains(key)) {
        return fallback;
    }
    const json& v = cfg.at(key);
    if (!v.is_number()) {
        throw ConfigError(fmt::format("config key '{}' must be a number", key));
    }
    return v.get<double>();
}

int integer(const json& cfg, const char* key, int fallback) {
    if (!cfg.contains(key)) {
        return fallback;
    }
    const json& v = cfg.at(key);
    if (!v.is_number_integer()) {
        throw ConfigError(fmt::format("config key '{}' must be an integer", key));
    }
    return v.get<int>();
}

bool boolean(const json& cfg, const char* key, bool fallback) {
    if (!cfg.contains(key)) {
        return fallback;
    }
    const json& v = cfg.at(key);
    if (!v.is_boolean()) {
        throw ConfigError(fmt::format("config key '{}' must be true or false", key));
    }
    return v.get<bool>();
}

std::string text(const json& cfg, const char* key, const std::string& fallback) {
    if (!cfg.contains(key)) {
        return fallback;
    }
    const json& v = cfg.at(key);
    if (!v.is_string()) {
        throw ConfigError(fmt::format("config key '{}' must be a string", key));
    }
    return v.get<std::string>();
}

std::vector<double> number_list(const json& cfg, const char* key, std::vector<double> fallback) {
    if (!cfg.contains(key)) {
        return fallback;
    }
    const json& v = cfg.at(key);
    if (v.is_number()) {
        return {v.get<double>()};
    }
    if (!v.is_array() || v.empty()) {
        throw ConfigError(fmt::format("config key '{}' must be a non-empty list of numbers", key));
    }
    std::vector<double> out;
    for (const json& item : v) {
        if (!item.is_number()) {
            throw ConfigError(fmt::format("config key '{}' must be a non-empty list of numbers", key));
        }
        out.push_back(item.get<double>());
    }
    return out;
}

} // namespace

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "A",           "epsilon",        "omega",         "T_H",          "dt",
        "Q",           "R",              "Q2",            "u_max",        "goal_x",
        "goal_y",      "tol_g",          "max_iter",      "lbfgs_memory", "warm_start",
        "start_x",     "start_y",        "t_start",       "duration",     "dt_int",
        "ftle_x_min",  "ftle_x_max",     "ftle_y_min",    "ftle_y_max",   "ftle_nx",
        "ftle_ny",     "ftle_T",         "ftle_t0",       "ridge_quantile", "ftle_cadence",
        "sweep_T_H",   "sweep_R_over_Q", "sweep_omega",   "discard_fraction", "hist_bins",
        "orbit_tolerance", "out_dir"};
    return keys;
}

std::vector<std::string> required_keys(Command cmd) {
    std::vector<std::string> keys{"A", "epsilon", "omega"};
    if (cmd == Command::plan) {
        keys.insert(keys.end(), {"T_H", "Q", "R"});
    } else if (cmd == Command::sweep) {
        keys.insert(keys.end(), {"sweep_T_H", "sweep_R_over_Q", "sweep_omega"});
    }
    return keys;
}

json read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
    }
    json cfg;
    try {
        in >> cfg;
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("config file '{}' is not valid JSON: {}", path.string(), e.what()));
    }
    if (!cfg.is_object()) {
        throw ConfigError(fmt::format("config file '{}' must hold a JSON object", path.string()));
    }
    return cfg;
}

void apply_override(json& config, std::string_view assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError(fmt::format("override '{}' is not of the form key=value", assignment));
    }
    const std::string key(assignment.substr(0, eq));
    const std::string value(assignment.substr(eq + 1));
    json parsed = json::parse(value, nullptr, false);
    config[key] = parsed.is_discarded() ? json(value) : parsed;
}

void RunConfig::validate(Command cmd) const {
    field.validate();
    integrator.validate();
    if (!start.allFinite() || !std::isfinite(t_start)) {
        throw ConfigError("start state and time must be finite");
    }
    if (cmd == Command::plan || cmd == Command::sweep) {
        mpc.validate();
        if (!(duration >= mpc.dt)) {
            throw ConfigError(fmt::format("duration {} must cover at least one control step dt = {}", duration, mpc.dt));
        }
    }
    if (cmd == Command::ftle || cmd == Command::analyze) {
        ftle_grid.validate();
        if (ftle_T == 0.0 || !std::isfinite(ftle_T)) {
            throw ConfigError("ftle_T must be finite and non-zero");
        }
        if (!(ridge_quantile > 0.0 && ridge_quantile < 1.0)) {
            throw ConfigError(fmt::format("ridge_quantile must lie in (0, 1), got {}", ridge_quantile));
        }
    }
    if (cmd == Command::analyze) {
        if (!(discard_fraction >= 0.0 && discard_fraction < 1.0)) {
            throw ConfigError(fmt::format("discard_fraction must lie in [0, 1), got {}", discard_fraction));
        }
        if (hist_bins < 1) {
            throw ConfigError(fmt::format("hist_bins must be >= 1, got {}", hist_bins));
        }
        if (!(ftle_cadence > 0.0)) {
            throw ConfigError(fmt::format("ftle_cadence must be > 0, got {}", ftle_cadence));
        }
        if (!(orbit_tolerance > 0.0)) {
            throw ConfigError(fmt::format("orbit_tolerance must be > 0, got {}", orbit_tolerance));
        }
    }
    if (cmd == Command::sweep) {
        for (const double r : sweep_r_over_q) {
            if (!(r > 0.0)) {
                throw ConfigError(fmt::format("sweep_R_over_Q values must be > 0, got {}", r));
            }
        }
        for (const double h : sweep_horizons) {
            if (!(h > 0.0)) {
                throw ConfigError(fmt::format("sweep_T_H values must be > 0, got {}", h));
            }
        }
        for (const double w : sweep_omegas) {
            if (!(w >= 0.0)) {
                throw ConfigError(fmt::format("sweep_omega values must be >= 0, got {}", w));
            }
        }
    }
}

RunConfig parse_config(const json& config, Command cmd) {
    if (!config.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    const auto& keys = known_keys();
    for (const auto& item : config.items()) {
        if (std::find(keys.begin(), keys.end(), item.key()) == keys.end()) {
            throw ConfigError(fmt::format("unknown config key '{}'", item.key()));
        }
    }
    for (const auto& key : required_keys(cmd)) {
        if (!config.contains(key)) {
            throw ConfigError(fmt::format("missing required config key '{}'", key));
        }
    }

    RunConfig rc;
    rc.field.A = number(config, "A", rc.field.A);
    rc.field.epsilon = number(config, "epsilon", rc.field.epsilon);
    rc.field.omega = number(config, "omega", rc.field.omega);

    rc.mpc.horizon = number(config, "T_H", rc.mpc.horizon);
    rc.mpc.dt = number(config, "dt", rc.mpc.dt);
    rc.mpc.Q = number(config, "Q", rc.mpc.Q);
    rc.mpc.R = number(config, "R", rc.mpc.R);
    rc.mpc.Q2 = number(config, "Q2", rc.mpc.Q2);
    rc.mpc.u_max = number(config, "u_max", rc.mpc.u_max);
    rc.mpc.goal = Vec2(number(config, "goal_x", rc.mpc.goal.x()), number(config, "goal_y", rc.mpc.goal.y()));
    rc.mpc.solver.tol_g = number(config, "tol_g", rc.mpc.solver.tol_g);
    rc.mpc.solver.max_iter = integer(config, "max_iter", rc.mpc.solver.max_iter);
    rc.mpc.solver.memory = integer(config, "lbfgs_memory", rc.mpc.solver.memory);
    rc.mpc.warm_start = boolean(config, "warm_start", rc.mpc.warm_start);

    rc.start = Vec2(number(config, "start_x", rc.start.x()), number(config, "start_y", rc.start.y()));
    rc.t_start = number(config, "t_start", rc.t_start);
    rc.duration = number(config, "duration", rc.duration);
    rc.integrator.dt_int = number(config, "dt_int", rc.integrator.dt_int);

    rc.ftle_grid.x_min = number(config, "ftle_x_min", rc.ftle_grid.x_min);
    rc.ftle_grid.x_max = number(config, "ftle_x_max", rc.ftle_grid.x_max);
    rc.ftle_grid.y_min = number(config, "ftle_y_min", rc.ftle_grid.y_min);
    rc.ftle_grid.y_max = number(config, "ftle_y_max", rc.ftle_grid.y_max);
    rc.ftle_grid.nx = integer(config, "ftle_nx", rc.ftle_grid.nx);
    rc.ftle_grid.ny = integer(config, "ftle_ny", rc.ftle_grid.ny);
    rc.ftle_T = number(config, "ftle_T", rc.ftle_T);
    rc.ftle_t0 = number(config, "ftle_t0", rc.ftle_t0);
    rc.ridge_quantile = number(config, "ridge_quantile", rc.ridge_quantile);
    rc.ftle_cadence = number(config, "ftle_cadence", rc.ftle_cadence);

    const double pi = std::numbers::pi;
    rc.sweep_horizons = number_list(config, "sweep_T_H", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    rc.sweep_r_over_q = number_list(config, "sweep_R_over_Q", log_spaced(1.0, 100.0, 9));
    rc.sweep_omegas = number_list(config, "sweep_omega", {2 * pi / 14, 2 * pi / 12, 2 * pi / 10, 2 * pi / 8,
                                                          2 * pi / 6, 2 * pi / 4});

    rc.discard_fraction = number(config, "discard_fraction", rc.discard_fraction);
    rc.hist_bins = integer(config, "hist_bins", rc.hist_bins);
    rc.orbit_tolerance = number(config, "orbit_tolerance", rc.orbit_tolerance);
    rc.out_dir = text(config, "out_dir", rc.out_dir);

    rc.validate(cmd);
    return rc;
}

} // namespace gyreplan::cli
