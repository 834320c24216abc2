#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gyreplan/advect.hpp"
#include "gyreplan/flowfield.hpp"
#include "gyreplan/ftle.hpp"
#include "gyreplan/mpc.hpp"

namespace gyreplan {

// ---------------------------------------------------------------------------
// Parameter sweeps

struct SweepPoint {
    double horizon = 0.0;
    double r_over_q = 0.0;
    double omega = 0.0;
};

/// Base settings shared by every sweep tuple. Q is pinned to 1 and R set to
/// the tuple's ratio; the tuple also overrides the horizon and gyre frequency.
struct SweepSpec {
    DoubleGyreParams field;
    MpcConfig mpc;
    IntegratorConfig integrator;
    Vec2 start{2.0, 1.0};
    double t_start = 0.0;
    double duration = 60.0;
    std::vector<double> horizons;
    std::vector<double> r_over_q;
    std::vector<double> omegas;

    /// Tuples in deterministic order: horizon outermost, then R/Q, then omega.
    std::vector<SweepPoint> points() const;
};

struct SweepRecord {
    SweepPoint point;
    double total_state_error = 0.0; // sum |x_k - goal|^2 dt over k = 1..n
    double total_energy = 0.0;      // sum u_k . u_k dt
    double weighted_J = 0.0;
    double weighted_Je = 0.0;
    double weighted_Ju = 0.0;
    double converged_frac = 0.0;
    double run_duration = 0.0;
    bool ok = true;
    std::string error;
};

/// Unweighted integrals of a closed-loop trajectory.
struct TrajectoryTotals {
    double state_error = 0.0;
    double energy = 0.0;
    double converged_frac = 0.0;
};

TrajectoryTotals trajectory_totals(const Trajectory& traj, const Vec2& goal, double dt);

SweepRecord run_sweep_point(const SweepSpec& spec, const SweepPoint& point);

/// Runs every tuple; a failed tuple becomes a record with ok == false.
std::vector<SweepRecord> sweep(const SweepSpec& spec, std::span<const SweepPoint> points);
std::vector<SweepRecord> sweep(const SweepSpec& spec);

/// count values from lo to hi inclusive, evenly spaced in log10.
std::vector<double> log_spaced(double lo, double hi, int count);

/// Indices of the records not dominated under joint minimisation of
/// (total_energy, total_state_error). Ties are kept; failed rows are ignored.
std::vector<std::size_t> pareto_front(std::span<const SweepRecord> records);

/// Pareto membership per record, computed separately for each (horizon, omega) group.
std::vector<bool> pareto_membership(std::span<const SweepRecord> records);

// ---------------------------------------------------------------------------
// Spectra

struct SpectrumResult {
    std::vector<double> freqs;     // rad per time unit, 0 .. Nyquist
    std::vector<double> magnitude; // RMS amplitude per bin; squares sum to the series variance
    std::vector<double> peaks;     // local maxima above the median, largest first
};

/// One-sided spectrum of a mean-removed, uniformly sampled series.
SpectrumResult spectrum(std::span<const double> series, double dt);

/// Spectrum of inst_energy over samples with t >= t_first + discard.
/// Needs at least 64 samples after the discard.
SpectrumResult energy_spectrum(const Trajectory& traj, double discard);

// ---------------------------------------------------------------------------
// Periodic orbits

struct OrbitSummary {
    bool is_periodic = false;
    double period = 0.0;
    int multiple = 0; // period / ref_period
    double mean_radius = 0.0;
    double onset_time = 0.0;
};

/// Stroboscopic test at m * ref_period for m = 1, 2, 3 over the final third
/// of the run. tolerance bounds the distance between consecutive samples.
OrbitSummary detect_orbit(const Trajectory& traj, const Vec2& goal, double ref_period, double tolerance = 0.02);

/// Linear interpolation of the trajectory state at time t.
Vec2 state_at(const Trajectory& traj, double t);

// ---------------------------------------------------------------------------
// Control-vs-flow histograms

struct HistogramPair {
    std::string quantity; // magnitude, heading, x_component, y_component
    std::vector<double> edges;
    std::vector<std::size_t> sensor_counts;
    std::vector<std::size_t> flow_counts;
};

/// Sensor series: |u|, heading of v + u, u_x, u_y. Flow series: |v|, heading
/// of v, v_x, v_y, evaluated at the sensor's samples.
std::vector<HistogramPair> control_histograms(const Trajectory& traj, const FlowField& field, int bins = 30);

// ---------------------------------------------------------------------------
// FTLE ridges along trajectories

struct FtleSample {
    double sigma = 0.0;
    double threshold = 0.0;
};

/// Space-time source of forward FTLE values and their ridge thresholds.
class FtleProvider {
  public:
    virtual ~FtleProvider() = default;

    /// Empty when (x, t) lies outside the region where FTLE is defined.
    virtual std::optional<FtleSample> sample(const Vec2& x, double t) = 0;
};

/// One frozen field used at every time.
class StaticFtle final : public FtleProvider {
  public:
    StaticFtle(FtleField field, double quantile);

    std::optional<FtleSample> sample(const Vec2& x, double t) override;

  private:
    FtleField field_;
    double threshold_;
};

struct FtleSeriesConfig {
    GridSpec grid{0.0, 2.0, 0.0, 1.0, 101, 51};
    double T = 15.0;
    IntegratorConfig integrator;
    double cadence = 0.5; // time between computed fields
    double quantile = 0.9;
};

/// Fields computed lazily on the lattice t_ref + m * cadence and linearly
/// interpolated in time, thresholds included.
class OnDemandFtle final : public FtleProvider {
  public:
    OnDemandFtle(const FlowField& field, FtleSeriesConfig cfg, double t_ref);

    std::optional<FtleSample> sample(const Vec2& x, double t) override;

    std::size_t fields_computed() const noexcept { return cache_.size(); }

  private:
    struct Entry {
        FtleField field;
        double threshold;
    };
    const Entry& entry(long m);

    const FlowField& flow_;
    FtleSeriesConfig cfg_;
    double t_ref_;
    std::map<long, Entry> cache_;
};

struct CorrelationSample {
    double t = 0.0;
    double sigma = 0.0;
    double energy = 0.0;
    bool crossing = false;
};

struct CorrelationReport {
    std::vector<CorrelationSample> samples;
    double pearson = 0.0;
    double mean_inside = 0.0;
    double mean_outside = 0.0;
    std::size_t inside_count = 0;
    std::size_t outside_count = 0;
    std::size_t excluded = 0;
};

/// Per control step: sigma at the sensor, inst_energy, and whether sigma
/// clears that field's ridge threshold.
CorrelationReport ridge_energy_correlation(const Trajectory& traj, FtleProvider& ftle);

/// Pearson correlation; zero when either series has no variance.
double pearson(std::span<const double> a, std::span<const double> b);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

} // namespace gyreplan
