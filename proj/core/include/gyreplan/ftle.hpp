#pragma once

#include <iosfwd>
#include <vector>

#include "gyreplan/advect.hpp"
#include "gyreplan/flowfield.hpp"
#include "gyreplan/types.hpp"

namespace gyreplan {

/// Forward-time FTLE ridges repel nearby drifters, backward-time ridges attract.
enum class Direction { forward, backward };

const char* to_string(Direction d) noexcept;

/// Which route turns a flow-map Jacobian into an exponent.
enum class FtleMethod {
    cauchy_green, // largest eigenvalue of J^T J
    svd,          // largest singular value of J
};

/// FTLE values on a grid at reference time t0. Only interior nodes carry a
/// value; boundary entries hold NaN and report defined() == false.
struct FtleField {
    GridSpec spec;
    double t0 = 0.0;
    double T = 0.0;
    Direction direction = Direction::forward;
    std::vector<double> sigma;

    bool defined(int i, int j) const noexcept { return spec.interior(i, j); }
    double at(int i, int j) const { return sigma[spec.index(i, j)]; }

    /// Wraps externally computed values. Boundary entries are overwritten
    /// with NaN; interior values must be finite.
    static FtleField from_values(const GridSpec& spec, double t0, double T, std::vector<double> values);
};

struct RidgePoint {
    int i = 0;
    int j = 0;
    double x = 0.0;
    double y = 0.0;
    double sigma = 0.0;
};

struct RidgeSet {
    std::vector<RidgePoint> points;
    double threshold = 0.0;
    Direction direction = Direction::forward;
};

/// Central-difference flow-map Jacobian at an interior node.
Mat2 jacobian(const FlowMapGrid& map, int i, int j);

double ftle_from_jacobian(const Mat2& jac, double T, FtleMethod method = FtleMethod::cauchy_green);

FtleField ftle_from_flow_map(const FlowMapGrid& map, FtleMethod method = FtleMethod::cauchy_green);

FtleField ftle_field(const FlowField& field, const GridSpec& spec, double t0, double T, const IntegratorConfig& cfg,
                     FtleMethod method = FtleMethod::cauchy_green);

/// q-quantile (linear interpolation between order statistics) of the defined values.
double defined_quantile(const FtleField& f, double q);

/// Curvature ridges above the given quantile of sigma. A node qualifies when
/// its sigma clears the threshold, the Hessian's smaller eigenvalue is
/// negative, and the local maximum along that eigenvector lies within half a
/// cell of the node. Nodes whose Hessian stencil touches the boundary are skipped.
RidgeSet extract_ridges(const FtleField& f, double quantile = 0.9);

/// Bilinear interpolation of sigma over the interior nodes.
double ftle_at(const FtleField& f, const Vec2& x);

/// Whether ftle_at accepts x.
bool ftle_covers(const FtleField& f, const Vec2& x) noexcept;

/// CSV with header x,y,sigma,direction,t0,T; defined nodes only, j outer, i inner.
void write_ftle_csv(std::ostream& out, const FtleField& f);

} // namespace gyreplan
