#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "gyreplan/csv.hpp"
#include "gyreplan/errors.hpp"
#include "gyreplan/ftle.hpp"
#include "oracles.hpp"

using namespace gyreplan;

namespace {

const double e = std::numbers::e;

FtleField field_from(const GridSpec& spec, double (*fn)(double, double)) {
    std::vector<double> v(spec.size());
    for (int j = 0; j < spec.ny; ++j) {
        for (int i = 0; i < spec.nx; ++i) {
            v[spec.index(i, j)] = fn(spec.x(i), spec.y(j));
        }
    }
    return FtleField::from_values(spec, 0.0, 1.0, v);
}

TEST(Jacobian, NullFieldIsIdentity) {
    const DoubleGyre g(DoubleGyreParams{0.0, 0.0, 0.0});
    const FlowMapGrid m = flow_map(g, GridSpec{0, 2, 0, 1, 11, 6}, 0.0, 1.0, IntegratorConfig{});
    for (int j = 1; j < 5; ++j) {
        for (int i = 1; i < 10; ++i) {
            EXPECT_LE((jacobian(m, i, j) - Mat2::Identity()).norm(), 1e-12);
        }
    }
}

TEST(Jacobian, TranslationIsIdentity) {
    const UniformFlow u(Vec2(0.3, -0.7));
    const FlowMapGrid m = flow_map(u, GridSpec{0, 2, 0, 1, 11, 6}, 0.0, 2.0, IntegratorConfig{});
    EXPECT_LE((jacobian(m, 4, 2) - Mat2::Identity()).norm(), 1e-12);
}

TEST(Jacobian, SaddleIsDiagonal) {
    const LinearSaddle s;
    const FlowMapGrid m = flow_map(s, GridSpec{-1, 1, -1, 1, 11, 11}, 0.0, 1.0, IntegratorConfig{});
    Mat2 want;
    want << e, 0.0, 0.0, 1.0 / e;
    for (int j = 1; j < 10; ++j) {
        for (int i = 1; i < 10; ++i) {
            EXPECT_LE((jacobian(m, i, j) - want).cwiseAbs().maxCoeff(), 1e-6);
        }
    }
}

TEST(Jacobian, BoundaryNodeThrows) {
    const UniformFlow u(Vec2(1, 0));
    const FlowMapGrid m = flow_map(u, GridSpec{0, 2, 0, 1, 5, 5}, 0.0, 1.0, IntegratorConfig{});
    EXPECT_THROW(jacobian(m, 0, 2), RangeError);
    EXPECT_THROW(jacobian(m, 2, 4), RangeError);
    EXPECT_NO_THROW(jacobian(m, 1, 1));
}

TEST(FtleFromJacobian, ClosedFormAndSvdAgree) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int k = 0; k < 1000; ++k) {
        Mat2 m;
        m << n(rng), n(rng), n(rng), n(rng);
        if (std::abs(m.determinant()) < 1e-3) {
            continue;
        }
        const double T = 0.5 + std::abs(n(rng));
        const double cg = ftle_from_jacobian(m, T, FtleMethod::cauchy_green);
        const double sv = ftle_from_jacobian(m, T, FtleMethod::svd);
        EXPECT_LE(std::abs(cg - sv), 1e-10);
        EXPECT_NEAR(cg, std::log(oracle::max_singular_value(m)) / T, 1e-12);
        EXPECT_NEAR(ftle_from_jacobian(m, -T), cg, 0.0);
    }
}

TEST(FtleFromJacobian, Errors) {
    EXPECT_THROW(ftle_from_jacobian(Mat2::Identity(), 0.0), DomainError);
    EXPECT_THROW(ftle_from_jacobian(Mat2::Zero(), 1.0), NumericError);
    EXPECT_THROW(ftle_from_jacobian(Mat2::Zero(), 1.0, FtleMethod::svd), NumericError);
}

TEST(FtleField, UniformFieldIsZeroOnAnyGrid) {
    const UniformFlow u(Vec2(1, 0.5));
    for (const GridSpec& spec : {GridSpec{0, 2, 0, 1, 11, 6}, GridSpec{-3, 5, 2, 4, 7, 13}}) {
        const FtleField f = ftle_field(u, spec, 0.0, 3.0, IntegratorConfig{});
        for (int j = 1; j < spec.ny - 1; ++j) {
            for (int i = 1; i < spec.nx - 1; ++i) {
                EXPECT_NEAR(f.at(i, j), 0.0, 1e-12);
            }
        }
    }
}

TEST(FtleField, SaddleExponentIsRate) {
    const LinearSaddle s;
    const GridSpec spec{-1, 1, -1, 1, 21, 21};
    for (double T : {1.0, 2.0}) {
        const FtleField f = ftle_field(s, spec, 0.0, T, IntegratorConfig{});
        EXPECT_EQ(f.direction, Direction::forward);
        for (int j = 1; j < spec.ny - 1; ++j) {
            for (int i = 1; i < spec.nx - 1; ++i) {
                EXPECT_NEAR(f.at(i, j), 1.0, 1e-4);
            }
        }
    }
}

TEST(FtleField, BoundaryUndefinedAndDirection) {
    const DoubleGyre g;
    const GridSpec spec{0, 2, 0, 1, 11, 6};
    const FtleField f = ftle_field(g, spec, 0.0, -2.0, IntegratorConfig{});
    EXPECT_EQ(f.direction, Direction::backward);
    for (int i = 0; i < spec.nx; ++i) {
        EXPECT_TRUE(std::isnan(f.at(i, 0)));
        EXPECT_TRUE(std::isnan(f.at(i, spec.ny - 1)));
        EXPECT_FALSE(f.defined(i, 0));
    }
    for (int j = 1; j < spec.ny - 1; ++j) {
        for (int i = 1; i < spec.nx - 1; ++i) {
            EXPECT_TRUE(f.defined(i, j));
            EXPECT_TRUE(std::isfinite(f.at(i, j)));
        }
    }
    EXPECT_THROW(ftle_field(g, spec, 0.0, 0.0, IntegratorConfig{}), DomainError);
}

TEST(FtleField, EigenAndSvdRoutesAgreeOnGyre) {
    const DoubleGyre g;
    const GridSpec spec{0, 2, 0, 1, 41, 21};
    const FlowMapGrid m = flow_map(g, spec, 0.0, 10.0, IntegratorConfig{});
    const FtleField a = ftle_from_flow_map(m, FtleMethod::cauchy_green);
    const FtleField b = ftle_from_flow_map(m, FtleMethod::svd);
    for (int j = 1; j < spec.ny - 1; ++j) {
        for (int i = 1; i < spec.nx - 1; ++i) {
            EXPECT_LE(std::abs(a.at(i, j) - b.at(i, j)), 1e-10);
        }
    }
}

TEST(FtleField, TimeReversedFieldGivesBackwardExponent) {
    const DoubleGyre g(DoubleGyreParams{0.1, 0.0, 0.6283185307179586});
    const oracle::TimeReversed r(g);
    const GridSpec spec{0, 2, 0, 1, 51, 26};
    const double t0 = 3.0;
    const FtleField back = ftle_field(g, spec, t0, -5.0, IntegratorConfig{});
    const FtleField fwd = ftle_field(r, spec, -t0, 5.0, IntegratorConfig{});
    for (int j = 1; j < spec.ny - 1; ++j) {
        for (int i = 1; i < spec.nx - 1; ++i) {
            EXPECT_LE(std::abs(back.at(i, j) - fwd.at(i, j)), 1e-6);
        }
    }
}

TEST(FtleField, FromValuesChecks) {
    const GridSpec spec{0, 1, 0, 1, 4, 4};
    EXPECT_THROW(FtleField::from_values(spec, 0.0, 1.0, std::vector<double>(3, 0.0)), DomainError);
    std::vector<double> v(spec.size(), 1.0);
    v[spec.index(1, 1)] = NAN;
    EXPECT_THROW(FtleField::from_values(spec, 0.0, 1.0, v), NumericError);
    v[spec.index(1, 1)] = 1.0;
    v[spec.index(0, 0)] = NAN;
    const FtleField f = FtleField::from_values(spec, 0.0, 1.0, v);
    EXPECT_TRUE(std::isnan(f.at(3, 0)));
}

TEST(DefinedQuantile, InterpolatesOrderStatistics) {
    const GridSpec spec{0, 1, 0, 1, 6, 3};
    std::vector<double> v(spec.size(), 100.0);
    for (int i = 1; i <= 4; ++i) {
        v[spec.index(i, 1)] = static_cast<double>(i);
    }
    const FtleField f = FtleField::from_values(spec, 0.0, 1.0, v);
    EXPECT_DOUBLE_EQ(defined_quantile(f, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(defined_quantile(f, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(defined_quantile(f, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(defined_quantile(f, 0.9), 3.7);
}

TEST(Ridges, ConstantFieldHasNone) {
    const GridSpec spec{0, 2, 0, 1, 21, 11};
    const FtleField f = FtleField::from_values(spec, 0.0, 1.0, std::vector<double>(spec.size(), 0.3));
    const RidgeSet r = extract_ridges(f, 0.9);
    EXPECT_TRUE(r.points.empty());
}

TEST(Ridges, GaussianRidgeOnLine) {
    const GridSpec spec{0, 2, 0, 1, 101, 51};
    const FtleField f = field_from(spec, [](double x, double) { return std::exp(-(x - 1.0) * (x - 1.0) / 0.01); });
    const RidgeSet r = extract_ridges(f, 0.9);
    ASSERT_FALSE(r.points.empty());
    EXPECT_EQ(r.direction, Direction::forward);
    int on_line = 0;
    for (const RidgePoint& p : r.points) {
        EXPECT_LE(std::abs(p.x - 1.0), 0.5 * spec.dx() + 1e-12);
        EXPECT_GE(p.sigma, r.threshold);
        EXPECT_TRUE(spec.interior(p.i, p.j));
        on_line += std::abs(p.x - 1.0) < 1e-12 ? 1 : 0;
    }
    // Every row away from the stencil margin contributes its x = 1 node.
    EXPECT_EQ(on_line, spec.ny - 4);
}

TEST(Ridges, RejectsBadArguments) {
    const GridSpec small{0, 1, 0, 1, 4, 4};
    const FtleField f = FtleField::from_values(small, 0.0, 1.0, std::vector<double>(small.size(), 1.0));
    EXPECT_THROW(extract_ridges(f, 0.9), DomainError);
    const GridSpec spec{0, 1, 0, 1, 9, 9};
    const FtleField g = FtleField::from_values(spec, 0.0, 1.0, std::vector<double>(spec.size(), 1.0));
    EXPECT_THROW(extract_ridges(g, 0.0), DomainError);
    EXPECT_THROW(extract_ridges(g, 1.0), DomainError);
}

TEST(FtleAt, NodesCentersAndRange) {
    const GridSpec spec{0, 3, 0, 3, 4, 4};
    std::vector<double> v(spec.size(), 0.0);
    v[spec.index(1, 2)] = 1.0;
    v[spec.index(2, 2)] = 1.0;
    v[spec.index(1, 1)] = 0.0;
    v[spec.index(2, 1)] = 0.0;
    const FtleField f = FtleField::from_values(spec, 0.0, 1.0, v);
    EXPECT_EQ(ftle_at(f, Vec2(1, 2)), 1.0);
    EXPECT_EQ(ftle_at(f, Vec2(2, 1)), 0.0);
    EXPECT_DOUBLE_EQ(ftle_at(f, Vec2(1.5, 1.5)), 0.5);

    const FtleField c = FtleField::from_values(spec, 0.0, 1.0, std::vector<double>(spec.size(), 0.7));
    EXPECT_DOUBLE_EQ(ftle_at(c, Vec2(1.5, 1.5)), 0.7);

    EXPECT_TRUE(ftle_covers(f, Vec2(1, 1)));
    EXPECT_FALSE(ftle_covers(f, Vec2(0.5, 1.5)));
    EXPECT_THROW(ftle_at(f, Vec2(0.5, 1.5)), RangeError);
    EXPECT_THROW(ftle_at(f, Vec2(1.5, 2.5)), RangeError);
    EXPECT_THROW(ftle_at(f, Vec2(NAN, 1.5)), RangeError);
}

TEST(FtleAt, ReproducesBilinearFunctions) {
    const GridSpec spec{0, 2, 0, 1, 21, 11};
    const FtleField f = field_from(spec, [](double x, double y) { return 1.0 + 2.0 * x - 3.0 * y + 0.5 * x * y; });
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ux(0.1, 1.9), uy(0.1, 0.9);
    for (int k = 0; k < 200; ++k) {
        const double x = ux(rng), y = uy(rng);
        EXPECT_NEAR(ftle_at(f, Vec2(x, y)), 1.0 + 2.0 * x - 3.0 * y + 0.5 * x * y, 1e-12);
    }
}

TEST(FtleCsv, HeaderAndRows) {
    const GridSpec spec{0, 2, 0, 1, 5, 4};
    const FtleField f = field_from(spec, [](double x, double y) { return x + 10 * y; });
    std::ostringstream out;
    write_ftle_csv(out, f);
    std::istringstream in(out.str());
    const CsvTable t = CsvTable::read(in);
    EXPECT_EQ(t.header(), (std::vector<std::string>{"x", "y", "sigma", "direction", "t0", "T"}));
    ASSERT_EQ(t.rows(), 6u);
    EXPECT_EQ(t.number(0, 0), 0.5);
    EXPECT_EQ(t.number(1, 0), 1.0);
    EXPECT_EQ(t.number(3, 1), spec.y(2));
    EXPECT_EQ(t.cell(0, 3), "forward");
    EXPECT_EQ(t.number(4, 2), f.at(2, 2));
}

// Steady gyre checks share one 201x101 forward field at T = 15.
class SteadyGyre : public ::testing::Test {
  protected:
    static void SetUpTestSuite() {
        const DoubleGyre g(DoubleGyreParams{0.1, 0.0, 2.0 * std::numbers::pi / 10.0});
        field_ = new FtleField(ftle_field(g, GridSpec{}, 0.0, 15.0, IntegratorConfig{}));
    }
    static void TearDownTestSuite() {
        delete field_;
        field_ = nullptr;
    }
    static FtleField* field_;
};

FtleField* SteadyGyre::field_ = nullptr;

TEST_F(SteadyGyre, RowMaximaNearMidlineSitOnSeparatrix) {
    const FtleField& f = *field_;
    for (int j = 1; j < f.spec.ny - 1; ++j) {
        const double y = f.spec.y(j);
        if (std::abs(y - 0.5) > 0.05 + 1e-12) {
            continue;
        }
        int best = 1;
        for (int i = 1; i < f.spec.nx - 1; ++i) {
            if (f.at(i, j) > f.at(best, j)) {
                best = i;
            }
        }
        EXPECT_LE(std::abs(f.spec.x(best) - 1.0), 0.05) << "row y = " << y;
    }
}

TEST_F(SteadyGyre, RidgeIncludesSeparatrix) {
    const RidgeSet r = extract_ridges(*field_, 0.9);
    const bool near = std::any_of(r.points.begin(), r.points.end(),
                                  [](const RidgePoint& p) { return std::abs(p.x - 1.0) <= 0.05; });
    EXPECT_TRUE(near);
}

TEST_F(SteadyGyre, MirrorSymmetric) {
    // The steady gyre is symmetric under x -> 2 - x and under the half-turn
    // (x, y) -> (1 - x, 1 - y) of the left cell.
    const FtleField& f = *field_;
    const int nx = f.spec.nx, ny = f.spec.ny;
    for (int j = 1; j < ny - 1; ++j) {
        for (int i = 1; i < nx - 1; ++i) {
            EXPECT_NEAR(f.at(i, j), f.at(nx - 1 - i, j), 1e-6);
        }
    }
    for (int j = 1; j < ny - 1; ++j) {
        for (int i = 1; i < 100; ++i) {
            EXPECT_NEAR(f.at(i, j), f.at(100 - i, ny - 1 - j), 1e-6);
        }
    }
}

} // namespace
