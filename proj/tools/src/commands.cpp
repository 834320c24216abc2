#include "gyreplan/cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gyreplan/analysis.hpp"
#include "gyreplan/csv.hpp"
#include "gyreplan/errors.hpp"
#include "gyreplan/ftle.hpp"
#include "gyreplan/mpc.hpp"

namespace gyreplan::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* sweep_header =
    "T_H,R_over_Q,omega,total_state_error,total_energy,weighted_J,weighted_Je,weighted_Ju,converged_frac,pareto,status";

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(fmt::format("cannot write '{}'", path.string()));
    }
    return out;
}

// Writes through a temporary file so an interrupted run never leaves a truncated result.
template <typename Writer>
void write_atomically(const fs::path& path, Writer&& writer) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out = open_output(tmp);
        writer(out);
        out.flush();
        if (!out) {
            throw Error(fmt::format("failed writing '{}'", tmp.string()));
        }
    }
    fs::rename(tmp, path);
}

std::string sweep_key(const SweepPoint& p) {
    return format_number(p.horizon) + '|' + format_number(p.r_over_q) + '|' + format_number(p.omega);
}

std::map<std::string, SweepRecord> read_existing_sweep(const fs::path& path) {
    std::map<std::string, SweepRecord> rows;
    if (!fs::exists(path)) {
        return rows;
    }
    std::ifstream in(path);
    const CsvTable table = CsvTable::read(in);
    if (table.header() != split_csv_line(sweep_header)) {
        throw ConfigError(fmt::format("existing '{}' does not match the sweep schema", path.string()));
    }
    for (std::size_t r = 0; r < table.rows(); ++r) {
        SweepRecord rec;
        rec.point = {table.number(r, 0), table.number(r, 1), table.number(r, 2)};
        rec.total_state_error = table.number(r, 3);
        rec.total_energy = table.number(r, 4);
        rec.weighted_J = table.number(r, 5);
        rec.weighted_Je = table.number(r, 6);
        rec.weighted_Ju = table.number(r, 7);
        rec.converged_frac = table.number(r, 8);
        rec.ok = table.cell(r, 10) == "ok";
        if (rec.ok) {
            rows.emplace(sweep_key(rec.point), rec);
        }
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
    const std::vector<bool> pareto = pareto_membership(records);
    out << sweep_header << '\n';
    for (std::size_t i = 0; i < records.size(); ++i) {
        const SweepRecord& r = records[i];
        out << format_number(r.point.horizon) << ',' << format_number(r.point.r_over_q) << ','
            << format_number(r.point.omega) << ',';
        if (r.ok) {
            out << format_number(r.total_state_error) << ',' << format_number(r.total_energy) << ','
                << format_number(r.weighted_J) << ',' << format_number(r.weighted_Je) << ','
                << format_number(r.weighted_Ju) << ',' << format_number(r.converged_frac);
        } else {
            out << "nan,nan,nan,nan,nan,nan";
        }
        out << ',' << (pareto[i] ? 1 : 0) << ',' << (r.ok ? "ok" : "failed") << '\n';
    }
}

void write_histogram(const fs::path& path, const std::vector<double>& edges, const std::vector<std::size_t>& counts) {
    write_atomically(path, [&](std::ostream& out) {
        out << "bin_center,count\n";
        for (std::size_t b = 0; b < counts.size(); ++b) {
            out << format_number(0.5 * (edges[b] + edges[b + 1])) << ',' << counts[b] << '\n';
        }
    });
}

} // namespace

int cmd_ftle(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    const DoubleGyre field(cfg.field);
    const double horizon = std::abs(cfg.ftle_T);
    for (const double T : {horizon, -horizon}) {
        const FtleField f = ftle_field(field, cfg.ftle_grid, cfg.ftle_t0, T, cfg.integrator);
        const fs::path path = out_dir / fmt::format("ftle_{}.csv", to_string(f.direction));
        write_atomically(path, [&](std::ostream& out) { write_ftle_csv(out, f); });
        log << "wrote " << path.string() << '\n';
    }
    return exit_ok;
}

int cmd_plan(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    const DoubleGyre field(cfg.field);
    const fs::path path = out_dir / "trajectory.csv";
    Trajectory traj;
    int code = exit_ok;
    try {
        traj = run_mpc(field, cfg.start, cfg.t_start, cfg.mpc, cfg.integrator, cfg.duration);
    } catch (const MpcAborted& e) {
        traj = e.partial();
        log << "error: " << e.what() << '\n';
        code = exit_failure;
    }
    write_atomically(path, [&](std::ostream& out) { write_trajectory_csv(out, traj); });

    const TrajectoryTotals totals = trajectory_totals(traj, cfg.mpc.goal, cfg.mpc.dt);
    log << fmt::format("final_distance={:.6g} total_energy={:.6g} total_state_error={:.6g} steps={} "
                       "converged_frac={:.4g} output={}\n",
                       (traj.states.back() - cfg.mpc.goal).norm(), totals.energy, totals.state_error, traj.steps(),
                       totals.converged_frac, path.string());
    return code;
}

int cmd_sweep(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    SweepSpec spec;
    spec.field = cfg.field;
    spec.mpc = cfg.mpc;
    spec.integrator = cfg.integrator;
    spec.start = cfg.start;
    spec.t_start = cfg.t_start;
    spec.duration = cfg.duration;
    spec.horizons = cfg.sweep_horizons;
    spec.r_over_q = cfg.sweep_r_over_q;
    spec.omegas = cfg.sweep_omegas;

    const fs::path path = out_dir / "sweep.csv";
    const std::map<std::string, SweepRecord> existing = read_existing_sweep(path);

    const std::vector<SweepPoint> points = spec.points();
    std::vector<SweepPoint> todo;
    for (const SweepPoint& p : points) {
        if (existing.find(sweep_key(p)) == existing.end()) {
            todo.push_back(p);
        }
    }
    log << fmt::format("sweep: {} tuples, {} already done, {} to run\n", points.size(), points.size() - todo.size(),
                       todo.size());

    const std::vector<SweepRecord> fresh = sweep(spec, todo);
    std::map<std::string, SweepRecord> computed;
    for (const SweepRecord& r : fresh) {
        if (!r.ok) {
            log << fmt::format("tuple T_H={} R/Q={} omega={} failed: {}\n", r.point.horizon, r.point.r_over_q,
                               r.point.omega, r.error);
        }
        computed.emplace(sweep_key(r.point), r);
    }

    std::vector<SweepRecord> records;
    records.reserve(points.size());
    std::size_t succeeded = 0;
    for (const SweepPoint& p : points) {
        const std::string key = sweep_key(p);
        const auto it = existing.find(key);
        records.push_back(it != existing.end() ? it->second : computed.at(key));
        succeeded += records.back().ok ? 1 : 0;
    }
    write_atomically(path, [&](std::ostream& out) { write_sweep_csv(out, records); });
    log << fmt::format("wrote {} ({} of {} rows ok)\n", path.string(), succeeded, records.size());
    return succeeded > 0 ? exit_ok : exit_failure;
}

int cmd_analyze(const RunConfig& cfg, const AnalyzeOptions& options, const fs::path& out_dir, std::ostream& log) {
    for (const std::string& name : options.analyses) {
        if (name != "spectrum" && name != "histogram" && name != "orbit" && name != "correlation") {
            throw ConfigError(fmt::format("unknown analysis '{}'", name));
        }
    }
    std::ifstream in(options.input);
    if (!in) {
        throw ConfigError(fmt::format("cannot open trajectory '{}'", options.input.string()));
    }
    Trajectory traj;
    try {
        traj = read_trajectory_csv(in);
    } catch (const DomainError& e) {
        throw ConfigError(fmt::format("'{}' is not a trajectory CSV: {}", options.input.string(), e.what()));
    }
    if (traj.controls.empty()) {
        throw ConfigError(fmt::format("'{}' holds no control steps", options.input.string()));
    }
    const DoubleGyre field(cfg.field);
    const double span = traj.times.back() - traj.times.front();

    if (options.analyses.count("spectrum") != 0) {
        const SpectrumResult s = energy_spectrum(traj, cfg.discard_fraction * span);
        write_atomically(out_dir / "spectrum.csv", [&](std::ostream& out) {
            out << "omega,magnitude\n";
            for (std::size_t m = 0; m < s.freqs.size(); ++m) {
                out << format_number(s.freqs[m]) << ',' << format_number(s.magnitude[m]) << '\n';
            }
        });
        write_atomically(out_dir / "spectrum_peaks.csv", [&](std::ostream& out) {
            out << "rank,omega\n";
            for (std::size_t p = 0; p < s.peaks.size(); ++p) {
                out << p + 1 << ',' << format_number(s.peaks[p]) << '\n';
            }
        });
        log << fmt::format("spectrum: {} bins, {} peaks", s.freqs.size(), s.peaks.size());
        if (!s.peaks.empty()) {
            log << fmt::format(", dominant omega={:.6g}", s.peaks.front());
        }
        log << '\n';
    }

    if (options.analyses.count("histogram") != 0) {
        for (const HistogramPair& h : control_histograms(traj, field, cfg.hist_bins)) {
            write_histogram(out_dir / fmt::format("hist_{}_sensor.csv", h.quantity), h.edges, h.sensor_counts);
            write_histogram(out_dir / fmt::format("hist_{}_flow.csv", h.quantity), h.edges, h.flow_counts);
        }
        log << "histograms: magnitude, heading, x_component, y_component\n";
    }

    if (options.analyses.count("orbit") != 0) {
        if (!(cfg.field.omega > 0.0)) {
            throw ConfigError("orbit detection needs omega > 0 for the forcing period");
        }
        const double ref_period = 2.0 * std::numbers::pi / cfg.field.omega;
        const OrbitSummary o = detect_orbit(traj, cfg.mpc.goal, ref_period, cfg.orbit_tolerance);
        write_atomically(out_dir / "orbit.csv", [&](std::ostream& out) {
            out << "is_periodic,period,multiple,mean_radius,onset_time\n"
                << (o.is_periodic ? 1 : 0) << ',' << format_number(o.period) << ',' << o.multiple << ','
                << format_number(o.mean_radius) << ',' << format_number(o.onset_time) << '\n';
        });
        log << fmt::format("orbit: periodic={} period={:.6g} mean_radius={:.6g} onset={:.6g}\n",
                           o.is_periodic ? "yes" : "no", o.period, o.mean_radius, o.onset_time);
    }

    if (options.analyses.count("correlation") != 0) {
        FtleSeriesConfig fc;
        fc.grid = cfg.ftle_grid;
        fc.T = std::abs(cfg.ftle_T);
        fc.integrator = cfg.integrator;
        fc.cadence = cfg.ftle_cadence;
        fc.quantile = cfg.ridge_quantile;
        OnDemandFtle ftle(field, fc, traj.times.front());
        const CorrelationReport rep = ridge_energy_correlation(traj, ftle);
        write_atomically(out_dir / "correlation.csv", [&](std::ostream& out) {
            out << "t,sigma,inst_energy,crossing\n";
            for (const CorrelationSample& s : rep.samples) {
                out << format_number(s.t) << ',' << format_number(s.sigma) << ',' << format_number(s.energy) << ','
                    << (s.crossing ? 1 : 0) << '\n';
            }
        });
        write_atomically(out_dir / "correlation_summary.csv", [&](std::ostream& out) {
            out << "pearson,mean_inside,mean_outside,inside_count,outside_count,excluded\n"
                << format_number(rep.pearson) << ',' << format_number(rep.mean_inside) << ','
                << format_number(rep.mean_outside) << ',' << rep.inside_count << ',' << rep.outside_count << ','
                << rep.excluded << '\n';
        });
        log << fmt::format("correlation: pearson={:.4g} mean_inside={:.6g} mean_outside={:.6g} excluded={}\n",
                           rep.pearson, rep.mean_inside, rep.mean_outside, rep.excluded);
    }
    return exit_ok;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Energy-efficient sensor trajectories and FTLE analysis in an unsteady double gyre"};
    app.require_subcommand(1);

    struct Common {
        std::string config;
        std::string out;
        std::vector<std::string> overrides;
    };
    std::map<std::string, Common> common;
    AnalyzeOptions analyze_opts;
    std::string input;
    std::string only;

    const std::vector<std::pair<std::string, std::string>> subcommands{
        {"ftle", "Forward and backward FTLE fields of the configured flow"},
        {"plan", "Closed-loop MPC trajectory from the start state"},
        {"sweep", "T_H x R/Q x omega parameter sweep with Pareto flags"},
        {"analyze", "Spectrum, histograms, orbit and FTLE correlation of a trajectory CSV"},
    };
    for (const auto& [name, description] : subcommands) {
        CLI::App* sub = app.add_subcommand(name, description);
        Common& c = common[name];
        sub->add_option("--config", c.config, "JSON run configuration");
        sub->add_option("--out", c.out, "Output directory (overrides out_dir)");
        sub->add_option("--set", c.overrides, "Override a config key, key=value")->take_all();
        if (name == "analyze") {
            sub->add_option("--input", input, "Trajectory CSV produced by plan")->required();
            sub->add_option("--only", only, "Comma-separated subset of spectrum,histogram,orbit,correlation");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    std::string chosen;
    Command cmd = Command::ftle;
    for (const auto& [name, description] : subcommands) {
        if (app.got_subcommand(name)) {
            chosen = name;
        }
    }
    if (chosen == "plan") {
        cmd = Command::plan;
    } else if (chosen == "sweep") {
        cmd = Command::sweep;
    } else if (chosen == "analyze") {
        cmd = Command::analyze;
    }

    try {
        const Common& c = common.at(chosen);
        nlohmann::json raw = c.config.empty() ? nlohmann::json::object() : read_config_file(c.config);
        for (const std::string& assignment : c.overrides) {
            apply_override(raw, assignment);
        }
        const RunConfig cfg = parse_config(raw, cmd);
        const fs::path out_dir = c.out.empty() ? fs::path(cfg.out_dir) : fs::path(c.out);
        fs::create_directories(out_dir);

        switch (cmd) {
        case Command::ftle:
            return cmd_ftle(cfg, out_dir, out);
        case Command::plan:
            return cmd_plan(cfg, out_dir, out);
        case Command::sweep:
            return cmd_sweep(cfg, out_dir, out);
        case Command::analyze: {
            analyze_opts.input = input;
            if (!only.empty()) {
                analyze_opts.analyses.clear();
                std::stringstream list(only);
                std::string item;
                while (std::getline(list, item, ',')) {
                    if (!item.empty()) {
                        analyze_opts.analyses.insert(item);
                    }
                }
            }
            return cmd_analyze(cfg, analyze_opts, out_dir, out);
        }
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_failure;
    }
    return exit_failure;
}

} // namespace gyreplan::cli
