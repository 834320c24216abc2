#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <numeric>

#include <fftw3.h>
#include <fmt/format.h>

#include "gyreplan/analysis.hpp"

namespace gyreplan {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::vector<std::complex<double>> real_dft(std::span<const double> series) {
    const int n = static_cast<int>(series.size());
    std::vector<double> in(series.begin(), series.end());
    std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
    fftw_plan plan = nullptr;
    {
        const std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    }
    if (plan == nullptr) {
        throw NumericError(fmt::format("could not plan a length-{} FFT", n));
    }
    fftw_execute(plan);
    {
        const std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

SpectrumResult spectrum(std::span<const double> series, double dt) {
    if (series.size() < 2) {
        throw RangeError("spectrum needs at least two samples");
    }
    if (!(dt > 0.0)) {
        throw DomainError(fmt::format("sample spacing must be > 0, got {}", dt));
    }
    const std::size_t n = series.size();
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
    std::vector<double> centred(n);
    std::transform(series.begin(), series.end(), centred.begin(), [mean](double v) { return v - mean; });

    const auto coeffs = real_dft(centred);
    SpectrumResult result;
    result.freqs.resize(coeffs.size());
    result.magnitude.resize(coeffs.size());
    const double resolution = 2.0 * std::numbers::pi / (static_cast<double>(n) * dt);
    for (std::size_t m = 0; m < coeffs.size(); ++m) {
        // Bins other than DC and Nyquist stand for a conjugate pair.
        const bool paired = m != 0 && !(n % 2 == 0 && m == n / 2);
        result.freqs[m] = resolution * static_cast<double>(m);
        result.magnitude[m] = std::abs(coeffs[m]) / static_cast<double>(n) * (paired ? std::numbers::sqrt2 : 1.0);
    }

    const double floor = median(result.magnitude);
    std::vector<std::size_t> peak_bins;
    for (std::size_t m = 1; m + 1 < result.magnitude.size(); ++m) {
        const double a = result.magnitude[m];
        if (a > floor && a > result.magnitude[m - 1] && a >= result.magnitude[m + 1]) {
            peak_bins.push_back(m);
        }
    }
    std::stable_sort(peak_bins.begin(), peak_bins.end(), [&](std::size_t a, std::size_t b) {
        return result.magnitude[a] > result.magnitude[b];
    });
    for (const std::size_t m : peak_bins) {
        result.peaks.push_back(result.freqs[m]);
    }
    return result;
}

SpectrumResult energy_spectrum(const Trajectory& traj, double discard) {
    if (traj.inst_energy.size() < 2) {
        throw RangeError("trajectory too short for a spectrum");
    }
    const double start = traj.times.front() + discard;
    std::vector<double> series;
    for (std::size_t k = 0; k < traj.inst_energy.size(); ++k) {
        if (traj.times[k] >= start - 1e-9) {
            series.push_back(traj.inst_energy[k]);
        }
    }
    if (series.size() < 64) {
        throw RangeError(fmt::format("energy series after discarding {} time units has {} samples, need 64", discard,
                                     series.size()));
    }
    const double dt = (traj.times.back() - traj.times.front()) / static_cast<double>(traj.times.size() - 1);
    return spectrum(series, dt);
}

} // namespace gyreplan
