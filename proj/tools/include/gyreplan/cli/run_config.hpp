#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gyreplan/advect.hpp"
#include "gyreplan/flowfield.hpp"
#include "gyreplan/mpc.hpp"

namespace gyreplan::cli {

enum class Command { ftle, plan, sweep, analyze };

/// Everything one run needs, read from a flat JSON object. Every key is
/// optional except the ones required_keys() lists for the command.
struct RunConfig {
    DoubleGyreParams field;
    MpcConfig mpc;
    IntegratorConfig integrator;
    Vec2 start{2.0, 1.0};
    double t_start = 0.0;
    double duration = 60.0;

    GridSpec ftle_grid{0.0, 2.0, 0.0, 1.0, 201, 101};
    double ftle_T = 15.0;
    double ftle_t0 = 0.0;
    double ridge_quantile = 0.9;
    double ftle_cadence = 0.5;

    std::vector<double> sweep_horizons;
    std::vector<double> sweep_r_over_q;
    std::vector<double> sweep_omegas;

    double discard_fraction = 0.4;
    int hist_bins = 30;
    double orbit_tolerance = 0.02;

    std::string out_dir = "out";

    void validate(Command cmd) const;
};

/// Keys recognised in a config file.
const std::vector<std::string>& known_keys();

std::vector<std::string> required_keys(Command cmd);

nlohmann::json read_config_file(const std::filesystem::path& path);

/// Applies "key=value"; the value is parsed as JSON when possible, otherwise
/// kept as a string.
void apply_override(nlohmann::json& config, std::string_view assignment);

/// Throws ConfigError on unknown keys, missing required keys, wrong types or
/// out-of-range values.
RunConfig parse_config(const nlohmann::json& config, Command cmd);

} // namespace gyreplan::cli
