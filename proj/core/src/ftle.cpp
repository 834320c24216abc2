#include "gyreplan/ftle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>

#include <Eigen/SVD>
#include <fmt/format.h>

#include "gyreplan/csv.hpp"
#include "gyreplan/errors.hpp"

namespace gyreplan {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

double largest_cauchy_green_eigenvalue(const Mat2& jac) {
    const Mat2 cg = jac.transpose() * jac;
    const double mean = 0.5 * (cg(0, 0) + cg(1, 1));
    const double half_diff = 0.5 * (cg(0, 0) - cg(1, 1));
    return mean + std::hypot(half_diff, cg(0, 1));
}

} // namespace

const char* to_string(Direction d) noexcept { return d == Direction::forward ? "forward" : "backward"; }

FtleField FtleField::from_values(const GridSpec& spec, double t0, double T, std::vector<double> values) {
    spec.validate();
    if (values.size() != spec.size()) {
        throw DomainError(fmt::format("FTLE values hold {} entries, grid has {}", values.size(), spec.size()));
    }
    if (T == 0.0 || !std::isfinite(T)) {
        throw DomainError("FTLE horizon T must be finite and non-zero");
    }
    for (int j = 0; j < spec.ny; ++j) {
        for (int i = 0; i < spec.nx; ++i) {
            double& v = values[spec.index(i, j)];
            if (!spec.interior(i, j)) {
                v = nan;
            } else if (!std::isfinite(v)) {
                throw NumericError(fmt::format("non-finite FTLE value at node ({}, {})", i, j));
            }
        }
    }
    return FtleField{spec, t0, T, T > 0.0 ? Direction::forward : Direction::backward, std::move(values)};
}

Mat2 jacobian(const FlowMapGrid& map, int i, int j) {
    const GridSpec& s = map.spec;
    if (!s.interior(i, j)) {
        throw RangeError(fmt::format("Jacobian requested at boundary node ({}, {}) of a {}x{} grid", i, j, s.nx, s.ny));
    }
    const Vec2& east = map.at(i + 1, j);
    const Vec2& west = map.at(i - 1, j);
    const Vec2& north = map.at(i, j + 1);
    const Vec2& south = map.at(i, j - 1);
    const double span_x = s.x(i + 1) - s.x(i - 1);
    const double span_y = s.y(j + 1) - s.y(j - 1);
    Mat2 jac;
    jac << (east.x() - west.x()) / span_x, (north.x() - south.x()) / span_y,
        (east.y() - west.y()) / span_x, (north.y() - south.y()) / span_y;
    return jac;
}

double ftle_from_jacobian(const Mat2& jac, double T, FtleMethod method) {
    if (T == 0.0) {
        throw DomainError("FTLE horizon T must be non-zero");
    }
    const double inv_t = 1.0 / std::abs(T);
    if (method == FtleMethod::svd) {
        const double s_max = Eigen::JacobiSVD<Mat2>(jac).singularValues()(0);
        if (!(s_max > 0.0) || !std::isfinite(s_max)) {
            throw NumericError(fmt::format("degenerate flow-map Jacobian, largest singular value {}", s_max));
        }
        return inv_t * std::log(s_max);
    }
    const double lambda_max = largest_cauchy_green_eigenvalue(jac);
    if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
        throw NumericError(fmt::format("degenerate Cauchy-Green tensor, largest eigenvalue {}", lambda_max));
    }
    return inv_t * std::log(std::sqrt(lambda_max));
}

FtleField ftle_from_flow_map(const FlowMapGrid& map, FtleMethod method) {
    const GridSpec& s = map.spec;
    std::vector<double> sigma(s.size(), nan);
    for (int j = 1; j <= s.ny - 2; ++j) {
        for (int i = 1; i <= s.nx - 2; ++i) {
            sigma[s.index(i, j)] = ftle_from_jacobian(jacobian(map, i, j), map.T, method);
        }
    }
    return FtleField::from_values(s, map.t0, map.T, std::move(sigma));
}

FtleField ftle_field(const FlowField& field, const GridSpec& spec, double t0, double T, const IntegratorConfig& cfg,
                     FtleMethod method) {
    if (T == 0.0 || !std::isfinite(T)) {
        throw DomainError("FTLE horizon T must be finite and non-zero");
    }
    return ftle_from_flow_map(flow_map(field, spec, t0, T, cfg), method);
}

double defined_quantile(const FtleField& f, double q) {
    if (!(q >= 0.0 && q <= 1.0)) {
        throw DomainError(fmt::format("quantile must lie in [0, 1], got {}", q));
    }
    std::vector<double> values;
    values.reserve(f.sigma.size());
    for (int j = 1; j <= f.spec.ny - 2; ++j) {
        for (int i = 1; i <= f.spec.nx - 2; ++i) {
            values.push_back(f.at(i, j));
        }
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

RidgeSet extract_ridges(const FtleField& f, double quantile) {
    const GridSpec& s = f.spec;
    if (s.nx < 5 || s.ny < 5) {
        throw DomainError(fmt::format("ridge extraction needs at least 3x3 defined nodes, grid is {}x{}", s.nx, s.ny));
    }
    if (!(quantile > 0.0 && quantile < 1.0)) {
        throw DomainError(fmt::format("ridge quantile must lie in (0, 1), got {}", quantile));
    }

    RidgeSet ridges;
    ridges.direction = f.direction;
    ridges.threshold = defined_quantile(f, quantile);

    const double lowest = defined_quantile(f, 0.0);
    const double highest = defined_quantile(f, 1.0);
    if (highest - lowest <= 1e-14 * std::max(1.0, std::abs(highest))) {
        return ridges;
    }

    const double dx = s.dx();
    const double dy = s.dy();
    for (int j = 2; j <= s.ny - 3; ++j) {
        for (int i = 2; i <= s.nx - 3; ++i) {
            const double c = f.at(i, j);
            if (c < ridges.threshold) {
                continue;
            }
            const double gx = (f.at(i + 1, j) - f.at(i - 1, j)) / (2.0 * dx);
            const double gy = (f.at(i, j + 1) - f.at(i, j - 1)) / (2.0 * dy);
            const double hxx = (f.at(i + 1, j) - 2.0 * c + f.at(i - 1, j)) / (dx * dx);
            const double hyy = (f.at(i, j + 1) - 2.0 * c + f.at(i, j - 1)) / (dy * dy);
            const double hxy =
                (f.at(i + 1, j + 1) - f.at(i + 1, j - 1) - f.at(i - 1, j + 1) + f.at(i - 1, j - 1)) / (4.0 * dx * dy);

            const double mean = 0.5 * (hxx + hyy);
            const double radius = std::hypot(0.5 * (hxx - hyy), hxy);
            const double lambda_min = mean - radius;
            if (!(lambda_min < 0.0)) {
                continue;
            }
            // Eigenvector of the most negative curvature: the ridge-transverse direction.
            Vec2 e = hxy != 0.0 ? Vec2(lambda_min - hyy, hxy) : (hxx <= hyy ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0));
            e.normalize();
            // Newton distance from the node to the maximum along e.
            const double offset = std::abs(gx * e.x() + gy * e.y()) / -lambda_min;
            const double cell = 1.0 / std::hypot(e.x() / dx, e.y() / dy);
            if (offset <= 0.5 * cell) {
                ridges.points.push_back({i, j, s.x(i), s.y(j), c});
            }
        }
    }
    return ridges;
}

bool ftle_covers(const FtleField& f, const Vec2& x) noexcept {
    const GridSpec& s = f.spec;
    return x.allFinite() && x.x() >= s.x(1) && x.x() <= s.x(s.nx - 2) && x.y() >= s.y(1) && x.y() <= s.y(s.ny - 2);
}

double ftle_at(const FtleField& f, const Vec2& x) {
    if (!ftle_covers(f, x)) {
        throw RangeError(fmt::format("FTLE query ({}, {}) lies outside the defined interior", x.x(), x.y()));
    }
    const GridSpec& s = f.spec;
    const auto locate = [](double coord, double origin, double spacing, int lo_cell, int hi_cell) {
        double u = (coord - origin) / spacing;
        const double nearest = std::round(u);
        if (std::abs(u - nearest) < 1e-12) {
            u = nearest;
        }
        if (hi_cell < lo_cell) {
            return std::pair<int, double>{lo_cell, 0.0}; // single interior line
        }
        const int cell = std::clamp(static_cast<int>(std::floor(u)), lo_cell, hi_cell);
        return std::pair<int, double>{cell, u - cell};
    };
    const auto lerp = [](double a, double b, double t) { return t == 0.0 ? a : (1.0 - t) * a + t * b; };
    const auto [i, fx] = locate(x.x(), s.x_min, s.dx(), 1, s.nx - 3);
    const auto [j, fy] = locate(x.y(), s.y_min, s.dy(), 1, s.ny - 3);
    const double bottom = lerp(f.at(i, j), fx == 0.0 ? 0.0 : f.at(i + 1, j), fx);
    if (fy == 0.0) {
        return bottom;
    }
    const double top = lerp(f.at(i, j + 1), fx == 0.0 ? 0.0 : f.at(i + 1, j + 1), fx);
    return lerp(bottom, top, fy);
}

void write_ftle_csv(std::ostream& out, const FtleField& f) {
    out << "x,y,sigma,direction,t0,T\n";
    const std::string dir = to_string(f.direction);
    const std::string t0 = format_number(f.t0);
    const std::string horizon = format_number(f.T);
    for (int j = 1; j <= f.spec.ny - 2; ++j) {
        for (int i = 1; i <= f.spec.nx - 2; ++i) {
            out << format_number(f.spec.x(i)) << ',' << format_number(f.spec.y(j)) << ','
                << format_number(f.at(i, j)) << ',' << dir << ',' << t0 << ',' << horizon << '\n';
        }
    }
}

} // namespace gyreplan
