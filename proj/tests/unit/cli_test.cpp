#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "gyreplan/advect.hpp"
#include "gyreplan/cli/commands.hpp"
#include "gyreplan/csv.hpp"
#include "gyreplan/mpc.hpp"
#include "oracles.hpp"

using namespace gyreplan;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "gyreplan");
    std::vector<const char*> argv;
    for (const std::string& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

CsvTable table(const fs::path& p) {
    std::ifstream in(p);
    return CsvTable::read(in);
}

Trajectory load(const fs::path& p) {
    std::ifstream in(p);
    return read_trajectory_csv(in);
}

const std::vector<std::string> gyre{"--set", "A=0.1", "epsilon=0.25", "omega=0.62831853071795862"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

TEST(Cli, MissingRequiredKey) {
    const fs::path dir = oracle::scratch_dir("missing_key");
    const Result r = run({"plan", "--out", dir.string(), "--set", "A=0.1", "epsilon=0.25", "omega=0.6", "Q=1", "R=2"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("T_H"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "trajectory.csv"));
}

TEST(Cli, UnknownKeyAndBadValues) {
    const fs::path dir = oracle::scratch_dir("bad_keys");
    EXPECT_EQ(run(cat({"ftle", "--out", dir.string()}, cat(gyre, {"bogus=1"}))).code, 2);
    EXPECT_EQ(run({"ftle", "--out", dir.string(), "--set", "A=-1", "epsilon=0.25", "omega=0.6"}).code, 2);
    EXPECT_EQ(run({"ftle", "--out", dir.string(), "--set", "A=\"x\"", "epsilon=0.25", "omega=0.6"}).code, 2);
    EXPECT_EQ(run({"nonsense"}).code, 2);
    EXPECT_EQ(run({"analyze", "--out", dir.string()}).code, 2);
}

TEST(Cli, ConfigFileAndOverrides) {
    const fs::path dir = oracle::scratch_dir("config_file");
    {
        std::ofstream cfg(dir / "run.json");
        cfg << R"({"A": 0.0, "epsilon": 0.25, "omega": 0.6, "ftle_nx": 11, "ftle_ny": 6, "ftle_T": 1.0})";
    }
    const Result r = run({"ftle", "--config", (dir / "run.json").string(), "--out", dir.string(), "--set", "ftle_nx=21"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(table(dir / "ftle_forward.csv").rows(), 19u * 4u);
    EXPECT_EQ(run({"ftle", "--config", (dir / "absent.json").string()}).code, 2);
}

TEST(Cli, NullFieldFtleIsZero) {
    const fs::path dir = oracle::scratch_dir("ftle_null");
    const Result r = run({"ftle", "--out", dir.string(), "--set", "A=0", "epsilon=0.25", "omega=0.6", "ftle_nx=41",
                          "ftle_ny=21", "ftle_T=2"});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* name : {"ftle_forward.csv", "ftle_backward.csv"}) {
        const CsvTable t = table(dir / name);
        EXPECT_EQ(t.header(), (std::vector<std::string>{"x", "y", "sigma", "direction", "t0", "T"}));
        ASSERT_EQ(t.rows(), 39u * 19u);
        for (std::size_t k = 0; k < t.rows(); ++k) {
            EXPECT_EQ(t.number(k, 2), 0.0);
        }
    }
    EXPECT_EQ(table(dir / "ftle_backward.csv").cell(0, 3), "backward");
    EXPECT_EQ(table(dir / "ftle_backward.csv").number(0, 5), -2.0);
}

TEST(Cli, SteadyGyreForwardRowMaxNearSeparatrix) {
    const fs::path dir = oracle::scratch_dir("ftle_steady");
    const Result r = run({"ftle", "--out", dir.string(), "--set", "A=0.1", "epsilon=0", "omega=0.62831853071795862"});
    ASSERT_EQ(r.code, 0) << r.err;
    const CsvTable t = table(dir / "ftle_forward.csv");
    // Rows arrive j-major; find each row's argmax.
    std::map<double, std::pair<double, double>> best; // y -> (sigma, x)
    for (std::size_t k = 0; k < t.rows(); ++k) {
        const double x = t.number(k, 0), y = t.number(k, 1), s = t.number(k, 2);
        auto it = best.find(y);
        if (it == best.end() || s > it->second.first) {
            best[y] = {s, x};
        }
    }
    for (const auto& [y, entry] : best) {
        if (std::abs(y - 0.5) <= 0.05 + 1e-12) {
            EXPECT_LE(std::abs(entry.second - 1.0), 0.05) << "row y = " << y;
        }
    }
}

TEST(Cli, PlanAtGoalInNullField) {
    const fs::path dir = oracle::scratch_dir("plan_goal");
    const Result r = run({"plan", "--out", dir.string(), "--set", "A=0", "epsilon=0.25", "omega=0.6", "T_H=1", "Q=1",
                          "R=2", "start_x=0.5", "start_y=0.5", "duration=3"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("final_distance="), std::string::npos);
    const Trajectory tr = load(dir / "trajectory.csv");
    EXPECT_EQ(tr.steps(), 30u);
    for (const Vec2& u : tr.controls) {
        EXPECT_LE(u.cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Cli, PlanWithZeroBoundDrifts) {
    const fs::path dir = oracle::scratch_dir("plan_drift");
    const Result r = run(cat({"plan", "--out", dir.string()}, cat(gyre, {"T_H=2", "Q=1", "R=2", "u_max=0", "duration=5"})));
    ASSERT_EQ(r.code, 0) << r.err;
    const Trajectory tr = load(dir / "trajectory.csv");
    const DoubleGyre g;
    for (std::size_t k = 0; k < tr.steps(); ++k) {
        EXPECT_EQ(tr.controls[k], Vec2::Zero());
        EXPECT_EQ(tr.inst_energy[k], 0.0);
    }
    EXPECT_LE((tr.states.back() - advect_point(g, Vec2(2, 1), 0.0, 5.0, IntegratorConfig{})).norm(), 1e-12);
}

TEST(Cli, PlanReachesTightOrbitAndAnalyzes) {
    const fs::path dir = oracle::scratch_dir("plan_default");
    const Result r = run(cat({"plan", "--out", dir.string()}, cat(gyre, {"T_H=4", "Q=1", "R=2"})));
    ASSERT_EQ(r.code, 0) << r.err;
    const Trajectory tr = load(dir / "trajectory.csv");
    const Vec2 goal(0.5, 0.5);
    double worst = 0.0;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        if (tr.times[k] >= tr.times.back() - 10.0 - 1e-9) {
            worst = std::max(worst, (tr.states[k] - goal).norm());
        }
    }
    EXPECT_LT(worst, (tr.states.front() - goal).norm());

    const Result a = run(cat({"analyze", "--out", dir.string(), "--input", (dir / "trajectory.csv").string()},
                             cat(gyre, {"ftle_nx=41", "ftle_ny=21", "ftle_T=5", "ftle_cadence=5"})));
    ASSERT_EQ(a.code, 0) << a.err;
    for (const char* name : {"spectrum.csv", "spectrum_peaks.csv", "orbit.csv", "correlation.csv",
                             "correlation_summary.csv", "hist_magnitude_sensor.csv", "hist_heading_flow.csv",
                             "hist_x_component_sensor.csv", "hist_y_component_flow.csv"}) {
        EXPECT_TRUE(fs::exists(dir / name)) << name;
    }
    const CsvTable orbit = table(dir / "orbit.csv");
    EXPECT_EQ(orbit.cell(0, 0), "1");
    EXPECT_EQ(orbit.number(0, 1), 10.0);
    const CsvTable hist = table(dir / "hist_magnitude_sensor.csv");
    EXPECT_EQ(hist.header(), (std::vector<std::string>{"bin_center", "count"}));
    double total = 0.0;
    for (std::size_t k = 0; k < hist.rows(); ++k) {
        total += hist.number(k, 1);
    }
    EXPECT_EQ(total, static_cast<double>(tr.steps()));
}

TEST(Cli, SweepSingleTupleIsIdempotent) {
    const fs::path dir = oracle::scratch_dir("sweep_single");
    const std::vector<std::string> args =
        cat({"sweep", "--out", dir.string()}, cat(gyre, {"sweep_T_H=[2]", "sweep_R_over_Q=[2]",
                                                          "sweep_omega=[0.62831853071795862]", "duration=5"}));
    const Result r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
    const CsvTable t = table(dir / "sweep.csv");
    ASSERT_EQ(t.rows(), 1u);
    EXPECT_EQ(t.header().front(), "T_H");
    EXPECT_EQ(t.cell(0, t.column("status")), "ok");
    EXPECT_EQ(t.cell(0, t.column("pareto")), "1");
    const std::string first = oracle::slurp(dir / "sweep.csv");

    const Result again = run(args);
    ASSERT_EQ(again.code, 0) << again.err;
    EXPECT_EQ(oracle::slurp(dir / "sweep.csv"), first);
    EXPECT_NE(again.out.find("0 to run"), std::string::npos) << again.out;
}

TEST(Cli, SweepResumesPartialOutput) {
    const fs::path full = oracle::scratch_dir("sweep_full");
    const fs::path part = oracle::scratch_dir("sweep_part");
    const std::vector<std::string> base = cat(gyre, {"sweep_omega=[0.62831853071795862]", "duration=3"});
    ASSERT_EQ(run(cat({"sweep", "--out", full.string(), "--set", "sweep_T_H=[1,2]", "sweep_R_over_Q=[1,10]"}, base)).code, 0);
    ASSERT_EQ(run(cat({"sweep", "--out", part.string(), "--set", "sweep_T_H=[1]", "sweep_R_over_Q=[1,10]"}, base)).code, 0);
    const Result r = run(cat({"sweep", "--out", part.string(), "--set", "sweep_T_H=[1,2]", "sweep_R_over_Q=[1,10]"}, base));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("2 to run"), std::string::npos) << r.out;
    EXPECT_EQ(oracle::slurp(part / "sweep.csv"), oracle::slurp(full / "sweep.csv"));
}

TEST(Cli, SweepEnergyOrdering) {
    const fs::path dir = oracle::scratch_dir("sweep_ratio");
    const Result r = run(cat({"sweep", "--out", dir.string()},
                             cat(gyre, {"sweep_T_H=[4]", "sweep_R_over_Q=[2,100]", "sweep_omega=[0.62831853071795862]"})));
    ASSERT_EQ(r.code, 0) << r.err;
    const CsvTable t = table(dir / "sweep.csv");
    ASSERT_EQ(t.rows(), 2u);
    const std::size_t e = t.column("total_energy");
    EXPECT_EQ(t.number(0, t.column("R_over_Q")), 2.0);
    EXPECT_LT(t.number(1, e), t.number(0, e));
}

TEST(Cli, ByteDeterministicOutputs) {
    const fs::path a = oracle::scratch_dir("det_a");
    const fs::path b = oracle::scratch_dir("det_b");
    const std::vector<std::string> plan = cat(gyre, {"T_H=2", "Q=1", "R=5", "duration=4"});
    ASSERT_EQ(run(cat({"plan", "--out", a.string()}, plan)).code, 0);
    ASSERT_EQ(run(cat({"plan", "--out", b.string()}, plan)).code, 0);
    EXPECT_EQ(oracle::slurp(a / "trajectory.csv"), oracle::slurp(b / "trajectory.csv"));

    const std::vector<std::string> ftle = cat(gyre, {"ftle_nx=31", "ftle_ny=16", "ftle_T=3"});
    ASSERT_EQ(run(cat({"ftle", "--out", a.string()}, ftle)).code, 0);
    ASSERT_EQ(run(cat({"ftle", "--out", b.string()}, ftle)).code, 0);
    EXPECT_EQ(oracle::slurp(a / "ftle_forward.csv"), oracle::slurp(b / "ftle_forward.csv"));
    EXPECT_EQ(oracle::slurp(a / "ftle_backward.csv"), oracle::slurp(b / "ftle_backward.csv"));
}

void write_energy_trajectory(const fs::path& path, const std::vector<double>& energy) {
    Trajectory tr;
    for (std::size_t k = 0; k <= energy.size(); ++k) {
        tr.times.push_back(0.1 * static_cast<double>(k));
        tr.states.push_back(Vec2(0.5, 0.5));
        if (k < energy.size()) {
            tr.controls.push_back(Vec2(std::sqrt(energy[k]), 0.0));
            tr.inst_energy.push_back(energy[k]);
            tr.horizons.push_back(HorizonSummary{1.0, 0.5, 0.5, 3, true});
        }
    }
    std::ofstream out(path);
    write_trajectory_csv(out, tr);
}

TEST(Cli, AnalyzeConstantEnergyHasNoPeaks) {
    const fs::path dir = oracle::scratch_dir("analyze_const");
    write_energy_trajectory(dir / "in.csv", std::vector<double>(200, 0.01));
    const Result r = run(cat({"analyze", "--out", dir.string(), "--input", (dir / "in.csv").string(), "--only", "spectrum"},
                             gyre));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(table(dir / "spectrum_peaks.csv").rows(), 0u);
    EXPECT_FALSE(fs::exists(dir / "orbit.csv"));
}

TEST(Cli, AnalyzeToneInput) {
    const fs::path dir = oracle::scratch_dir("analyze_tone");
    const std::size_t n = 250;
    std::vector<double> e(n);
    // discard_fraction 0.4 of span 25 leaves samples 100..249: 150 samples, bin 15.
    const double w0 = 2.0 * std::numbers::pi * 15.0 / (150 * 0.1);
    for (std::size_t k = 0; k < n; ++k) {
        e[k] = 0.01 * (1.0 + std::cos(w0 * 0.1 * static_cast<double>(k)));
    }
    write_energy_trajectory(dir / "in.csv", e);
    const Result r = run(cat({"analyze", "--out", dir.string(), "--input", (dir / "in.csv").string(), "--only", "spectrum"},
                             gyre));
    ASSERT_EQ(r.code, 0) << r.err;
    const CsvTable peaks = table(dir / "spectrum_peaks.csv");
    ASSERT_GE(peaks.rows(), 1u);
    EXPECT_NEAR(peaks.number(0, 1), w0, 1e-9);
}

TEST(Cli, AnalyzeSchemaMismatch) {
    const fs::path dir = oracle::scratch_dir("analyze_schema");
    {
        std::ofstream bad(dir / "bad.csv");
        bad << "t,x,y\n0,1,2\n";
    }
    const Result r = run(cat({"analyze", "--out", dir.string(), "--input", (dir / "bad.csv").string()}, gyre));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("not a trajectory CSV"), std::string::npos) << r.err;
    EXPECT_EQ(run(cat({"analyze", "--out", dir.string(), "--input", (dir / "none.csv").string()}, gyre)).code, 2);
}

TEST(Cli, ParseConfigDefaults) {
    nlohmann::json raw{{"A", 0.1}, {"epsilon", 0.25}, {"omega", 0.6}};
    const cli::RunConfig c = cli::parse_config(raw, cli::Command::ftle);
    EXPECT_EQ(c.sweep_horizons.size(), 10u);
    EXPECT_EQ(c.sweep_r_over_q.size(), 9u);
    EXPECT_EQ(c.sweep_omegas.size(), 6u);
    EXPECT_EQ(c.mpc.goal, Vec2(0.5, 0.5));
    EXPECT_EQ(c.start, Vec2(2.0, 1.0));
    nlohmann::json override = raw;
    cli::apply_override(override, "out_dir=results");
    EXPECT_EQ(cli::parse_config(override, cli::Command::ftle).out_dir, "results");
    EXPECT_THROW(cli::apply_override(override, "=3"), ConfigError);
}

} // namespace
