#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "gyreplan/analysis.hpp"

namespace gyreplan {

StaticFtle::StaticFtle(FtleField field, double quantile)
    : field_(std::move(field)), threshold_(defined_quantile(field_, quantile)) {}

std::optional<FtleSample> StaticFtle::sample(const Vec2& x, double) {
    if (!ftle_covers(field_, x)) {
        return std::nullopt;
    }
    return FtleSample{ftle_at(field_, x), threshold_};
}

OnDemandFtle::OnDemandFtle(const FlowField& field, FtleSeriesConfig cfg, double t_ref)
    : flow_(field), cfg_(std::move(cfg)), t_ref_(t_ref) {
    cfg_.grid.validate();
    cfg_.integrator.validate();
    if (!(cfg_.cadence > 0.0)) {
        throw ConfigError(fmt::format("FTLE cadence must be > 0, got {}", cfg_.cadence));
    }
    if (cfg_.T == 0.0 || !std::isfinite(cfg_.T)) {
        throw ConfigError("FTLE horizon T must be finite and non-zero");
    }
    if (!(cfg_.quantile > 0.0 && cfg_.quantile < 1.0)) {
        throw ConfigError(fmt::format("FTLE quantile must lie in (0, 1), got {}", cfg_.quantile));
    }
}

const OnDemandFtle::Entry& OnDemandFtle::entry(long m) {
    auto it = cache_.find(m);
    if (it == cache_.end()) {
        const double t0 = t_ref_ + static_cast<double>(m) * cfg_.cadence;
        FtleField field = ftle_field(flow_, cfg_.grid, t0, cfg_.T, cfg_.integrator);
        const double threshold = defined_quantile(field, cfg_.quantile);
        it = cache_.emplace(m, Entry{std::move(field), threshold}).first;
    }
    return it->second;
}

std::optional<FtleSample> OnDemandFtle::sample(const Vec2& x, double t) {
    const double u = (t - t_ref_) / cfg_.cadence;
    auto m = static_cast<long>(std::floor(u + 1e-9));
    double w = u - static_cast<double>(m);
    if (w < 1e-9) {
        w = 0.0;
    }
    const Entry& a = entry(m);
    if (!ftle_covers(a.field, x)) {
        return std::nullopt;
    }
    const double sigma_a = ftle_at(a.field, x);
    if (w == 0.0) {
        return FtleSample{sigma_a, a.threshold};
    }
    const Entry& b = entry(m + 1);
    const double sigma_b = ftle_at(b.field, x);
    return FtleSample{(1.0 - w) * sigma_a + w * sigma_b, (1.0 - w) * a.threshold + w * b.threshold};
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DomainError("pearson correlation needs series of equal length");
    }
    const std::size_t n = a.size();
    if (n < 2) {
        return 0.0;
    }
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    // Variance below rounding level of the means counts as none.
    const double tiny_a = 1e-24 * std::max(1.0, ma * ma) * static_cast<double>(n);
    const double tiny_b = 1e-24 * std::max(1.0, mb * mb) * static_cast<double>(n);
    if (saa <= tiny_a || sbb <= tiny_b) {
        return 0.0;
    }
    return sab / std::sqrt(saa * sbb);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> ranks(v.size());
    std::size_t start = 0;
    while (start < order.size()) {
        std::size_t end = start + 1;
        while (end < order.size() && v[order[end]] == v[order[start]]) {
            ++end;
        }
        const double rank = 0.5 * static_cast<double>(start + end - 1) + 1.0;
        for (std::size_t i = start; i < end; ++i) {
            ranks[order[i]] = rank;
        }
        start = end;
    }
    return ranks;
}

} // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DomainError("spearman correlation needs series of equal length");
    }
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    return pearson(ra, rb);
}

CorrelationReport ridge_energy_correlation(const Trajectory& traj, FtleProvider& ftle) {
    CorrelationReport report;
    std::vector<double> sigmas;
    std::vector<double> energies;
    double inside = 0.0;
    double outside = 0.0;
    for (std::size_t k = 0; k < traj.controls.size(); ++k) {
        const auto s = ftle.sample(traj.states[k], traj.times[k]);
        if (!s) {
            ++report.excluded;
            continue;
        }
        const double e = traj.inst_energy[k];
        const bool crossing = s->sigma >= s->threshold;
        report.samples.push_back({traj.times[k], s->sigma, e, crossing});
        sigmas.push_back(s->sigma);
        energies.push_back(e);
        if (crossing) {
            inside += e;
            ++report.inside_count;
        } else {
            outside += e;
            ++report.outside_count;
        }
    }
    report.pearson = pearson(sigmas, energies);
    report.mean_inside = report.inside_count > 0 ? inside / static_cast<double>(report.inside_count) : 0.0;
    report.mean_outside = report.outside_count > 0 ? outside / static_cast<double>(report.outside_count) : 0.0;
    return report;
}

} // namespace gyreplan
