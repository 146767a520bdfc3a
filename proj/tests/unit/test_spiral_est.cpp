#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "excurse/covariance.hpp"
#include "excurse/error.hpp"
#include "excurse/field_sim.hpp"
#include "excurse/spiral_est.hpp"

using namespace excurse;

namespace {

constexpr double kPi = std::numbers::pi;

GridSpec window(double h) {
    GridSpec g;
    g.spacing = h;
    g.origin = Vec2::Constant(-3.0);
    g.cols = g.rows = static_cast<int>(std::ceil(6.0 / h)) + 1;
    return g;
}

Deformation doubling() {
    return Deformation::spiral({ScalarFunction::linear(2.0), ScalarFunction::constant(0.0)});
}

}  // namespace

TEST(Sectors, Geometry) {
    const SectorFamily f{2.0, 0.0, 16};
    EXPECT_DOUBLE_EQ(f.area(), kPi / 16 * (std::pow(2.0 + 1.0 / 16, 2) - 4.0));
    EXPECT_NEAR(f.area(), 0.04985437560628334, 1e-15);
    EXPECT_EQ(f.sector_of(from_polar(2.03, 0.1)), 0);
    EXPECT_EQ(f.sector_of(from_polar(2.03, 2 * kPi / 16 * 3 + 0.01)), 3);
    EXPECT_EQ(f.sector_of(from_polar(2.03, -0.01)), 15);
    EXPECT_EQ(f.sector_of(from_polar(1.99, 0.1)), -1);
    EXPECT_EQ(f.sector_of(from_polar(2.0625, 0.1)), -1);
    EXPECT_THROW((SectorFamily{0.0, 0.0, 8}.validate()), DomainError);
    EXPECT_THROW((SectorFamily{1.0, 0.0, 0}.validate()), DomainError);
}

TEST(Segments, Geometry) {
    const SegmentFamily f{Vec2(1.0, 0.0), 4};
    EXPECT_DOUBLE_EQ(f.length(), 0.25);
    const Segment s = f.segment(1);
    EXPECT_NEAR(s.a.x(), 0.0, 1e-15);
    EXPECT_NEAR(s.a.y(), 1.0, 1e-15);
    EXPECT_NEAR(s.b.y(), 1.25, 1e-15);
}

TEST(SectorEstimator, ConstantFieldIsZero) {
    const GridSpec g = window(0.01);
    GridField x;
    x.spec = g;
    x.values.assign(g.size(), 0.5);
    const SectorEstimator est(Deformation::identity(), SectorFamily{2.0, 0.0, 8}, g);
    EXPECT_GT(est.assigned_pixels(), 0u);
    EXPECT_EQ(est.evaluate(x, 1.0), 0.0);
    EXPECT_EQ(est.evaluate(x, 0.0), 0.0);
}

TEST(SectorEstimator, RejectsCoarseLattice) {
    EXPECT_THROW(SectorEstimator(Deformation::identity(), SectorFamily{2.0, 0.0, 32}, window(0.05)), DomainError);
}

TEST(SectorEstimator, RejectsSectorsOutsideWindow) {
    EXPECT_THROW(SectorEstimator(Deformation::identity(), SectorFamily{2.9, 0.0, 8}, window(0.01)), DomainError);
}

TEST(SectorEstimator, AdditiveOverSectors) {
    const GridSpec g = window(0.01);
    const FieldSimulator sim(g, CovarianceModel::gaussian());
    const SectorEstimator est(Deformation::identity(), SectorFamily{2.0, 0.3, 8}, g);
    for (int r = 0; r < 5; ++r) {
        const GridField x = sim.simulate(r);
        for (double u : {-0.5, 0.5, 1.0}) {
            const auto v = est.sector_values(x, u);
            double sum = 0.0;
            for (double s : v) sum += s;
            EXPECT_DOUBLE_EQ(sum, est.union_value(x, u));
            EXPECT_DOUBLE_EQ(est.evaluate(x, u), sum / 8);
        }
    }
}

TEST(SectorEstimator, DoublingAssignsFourTimesThePixels) {
    const GridSpec g = window(0.01);
    const SectorFamily f{1.0, 0.0, 8};
    const double ratio = static_cast<double>(SectorEstimator(doubling(), f, g).assigned_pixels()) /
                         static_cast<double>(SectorEstimator(Deformation::identity(), f, g).assigned_pixels());
    EXPECT_NEAR(ratio, 4.0, 0.05);
}

TEST(SegmentEstimator, PointsFollowTheImage) {
    const SegmentEstimator est(doubling(), SegmentFamily{Vec2(1.0, 0.0), 4});
    ASSERT_EQ(est.points().size(), 4u * (8 + 2));
    EXPECT_NEAR(est.points()[1].x(), 2.0 * (1.0 + 0.5 / 32), 1e-12);
    EXPECT_THROW(SegmentEstimator(doubling(), SegmentFamily{Vec2(1.0, 0.0), 4}, 0.1), DomainError);
}

TEST(SegmentEstimator, CountsOscillations) {
    const SegmentEstimator est(Deformation::identity(), SegmentFamily{Vec2(1.0, 0.0), 1}, 1.0 / 400);
    auto f = [](const Vec2& p) { return std::cos(2 * kPi * (p.x() - 1.5)); };
    EXPECT_EQ(est.evaluate(f, 0.5), 1.0);
    EXPECT_EQ(est.evaluate(f, 1.5), 0.0);
}

TEST(SpiralEstimation, IdentityMeanZ) {
    SpiralEstimationOptions o;
    o.schedule = {8};
    o.replications = 200;
    o.u = 1.0;
    o.seed = 11;
    const auto run = run_spiral_estimation(Deformation::identity(), 1.0, 0.0, o);
    ASSERT_EQ(run.levels.size(), 1u);
    const auto& l = run.levels[0];
    EXPECT_EQ(l.z_stats.n, 200);
    EXPECT_NEAR(l.z_stats.mean, 0.00401709210627484077, 3 * l.z_stats.std_err);
    const auto cn = column_norm_estimates(run);
    EXPECT_NEAR(cn[0], 1.0, 3 * l.y_stats.std_err / (rho(1, 1.0) * l.length_S0));
}

TEST(SpiralEstimation, Deterministic) {
    SpiralEstimationOptions o;
    o.schedule = {8, 12};
    o.replications = 30;
    o.seed = 5;
    const auto a = run_spiral_estimation(doubling(), 1.0, 0.0, o);
    const auto b = run_spiral_estimation(doubling(), 1.0, 0.0, o);
    for (std::size_t k = 0; k < a.levels.size(); ++k) {
        EXPECT_EQ(a.levels[k].z, b.levels[k].z);
        EXPECT_EQ(a.levels[k].y, b.levels[k].y);
    }
}

TEST(SpiralEstimation, RejectsBadOptions) {
    SpiralEstimationOptions o;
    o.replications = 10;
    EXPECT_THROW(run_spiral_estimation(Deformation::identity(), 2.0, 0.0, o), DomainError);
    o.replications = 30;
    o.u = 0.0;
    EXPECT_THROW(run_spiral_estimation(Deformation::identity(), 2.0, 0.0, o), DomainError);
    o.u = 1.0;
    o.schedule = {8, 8};
    EXPECT_THROW(run_spiral_estimation(Deformation::identity(), 2.0, 0.0, o), DomainError);
}

TEST(DetJac, ExactSyntheticRecovery) {
    const std::vector<int> N{8, 12, 16, 24, 32};
    const double u = 1.0, a = detjac_constant(u);
    EXPECT_NEAR(a, 0.0385108368907489432, 1e-16);
    std::vector<double> area, mean, var;
    for (int n : N) {
        area.push_back(SectorFamily{2.0, 0.0, n}.area());
        mean.push_back(3.0 * a * area.back());
        var.push_back(2.0 * area.back() / n);
    }
    const auto fit = regress_detjac(N, area, mean, var, u);
    EXPECT_NEAR(fit.detjac, 3.0, 1e-12);
    for (double r : fit.residuals) EXPECT_NEAR(r, 0.0, 1e-15);
    for (double v : fit.normalized_var) EXPECT_NEAR(v, 2.0 / 3.0, 1e-12);
    for (double p : fit.per_level) EXPECT_NEAR(p, 3.0, 1e-12);
}

TEST(DetJac, Rejections) {
    const std::vector<int> three{8, 12, 16};
    const std::vector<double> x{1, 2, 3};
    EXPECT_THROW(regress_detjac(three, x, x, x, 1.0), DomainError);
    const std::vector<int> four{8, 12, 16, 24};
    const std::vector<double> pos{1, 2, 3, 4}, neg{-1, -2, -3, -4};
    EXPECT_THROW(regress_detjac(four, pos, neg, pos, 1.0), NumericError);
    EXPECT_THROW(regress_detjac(four, pos, pos, pos, 0.0), DomainError);
}

TEST(DetJac, CsvLayout) {
    EstimatorRun run;
    run.u = 1.0;
    for (int n : {8, 12, 16, 24}) {
        EstimatorLevel l;
        l.N = n;
        l.area_T0 = SectorFamily{2.0, 0.0, n}.area();
        l.z_stats.mean = detjac_constant(1.0) * l.area_T0;
        l.z_stats.variance = l.area_T0 / n;
        run.levels.push_back(l);
    }
    const auto fit = regress_detjac(run);
    std::ostringstream os;
    write_estimator_csv(os, "00000000000000ab", run, fit);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "# config-hash: 00000000000000ab");
    std::getline(is, line);
    EXPECT_EQ(line, "N,mean_Z,var_Z,area_T0,est_detjac,normalized_var");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 4);
}
