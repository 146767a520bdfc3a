#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "excurse/covariance.hpp"
#include "excurse/error.hpp"
#include "excurse/variance.hpp"

using namespace excurse;

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST(Kernels, H) {
    EXPECT_NEAR(h_kernel(1.0), 0.0385108368907489432, 1e-16);
    EXPECT_EQ(h_kernel(0.0), 0.0);
    EXPECT_NEAR(h_kernel(-1.0), -h_kernel(1.0), 1e-18);
}

TEST(Kernels, DetAtLargeLag) {
    const auto g = CovarianceModel::gaussian();
    EXPECT_NEAR(d_kernel(g, Vec2(20.0, 0.0)), 1558.545456544039, 1e-9);
    EXPECT_NEAR(d_kernel(g, Vec2(0.0, 20.0)), 1558.545456544039, 1e-9);
    EXPECT_LT(d_kernel(g, Vec2(0.5, 0.0)), d_kernel(g, Vec2(3.0, 0.0)));
    EXPECT_NEAR(d_kernel(g, Vec2(1e-9, 0.0)), 0.0, 1e-6);
}

TEST(Kernels, SignedDetIsModelFree) {
    for (const auto& m : {CovarianceModel::gaussian(), CovarianceModel::matern(2.5)}) {
        const auto v = signed_det_kernel(m, 1.0, 400000, 3);
        EXPECT_GT(v.std_err, 0.0);
        EXPECT_NEAR(v.value, 0.241970724519143349798, 4 * v.std_err) << m.name();
    }
}

TEST(Kernels, AbsoluteDetDominatesSigned) {
    const auto m = CovarianceModel::gaussian();
    const auto g = g_kernel(m, 1.0, 200000, 5);
    const auto s = signed_det_kernel(m, 1.0, 200000, 5);
    EXPECT_GE(g.value, s.value);
    EXPECT_GT(g.value, 0.0);
}

TEST(Kernels, PairKernelFactorizesAtLargeLag) {
    bool excluded = true;
    const auto v = G_kernel(CovarianceModel::gaussian(), 1.0, Vec2(6.0, 0.0), 400000, 7, &excluded);
    EXPECT_FALSE(excluded);
    EXPECT_NEAR(v.value, 0.0585498315243191606902, 4 * v.std_err);
}

TEST(Kernels, PairKernelExcludesTinyLag) {
    bool excluded = false;
    const auto v = G_kernel(CovarianceModel::gaussian(), 1.0, Vec2(1e-6, 0.0), 1000, 7, &excluded);
    EXPECT_TRUE(excluded);
    EXPECT_EQ(v.value, 0.0);
}

TEST(Overlap, IdentityRectangle) {
    const OverlapRaster o(Deformation::identity(), Rect::make(2.0, 1.0));
    EXPECT_NEAR(o.area(), 2.0, 1e-3);
    EXPECT_NEAR(o(Vec2::Zero()), 2.0, 1e-3);
    EXPECT_NEAR(o(Vec2(0.5, 0.0)), 1.5, 1e-2);
    EXPECT_NEAR(o(Vec2(0.5, 0.5)), 0.75, 1e-2);
    EXPECT_NEAR(o(Vec2(-0.5, 0.0)), 1.5, 1e-2);
    EXPECT_EQ(o(Vec2(3.0, 0.0)), 0.0);
    EXPECT_NEAR(o.radius(), std::sqrt(5.0), 0.05);
    EXPECT_NEAR(o.angular_integral(0.0), 2 * kPi * 2.0, 1e-2);
}

TEST(Overlap, LinearImageArea) {
    Mat2 m;
    m << 2.0, 0.0, 0.0, 1.0;
    const OverlapRaster o(Deformation::linear(m), Rect::make(1.0, 1.0));
    EXPECT_NEAR(o.area(), 2.0, 1e-3);
    EXPECT_NEAR(o(Vec2(1.0, 0.0)), 1.0, 1e-2);
}

TEST(VarianceFormula, IdentitySquare) {
    VarianceOptions opt;
    opt.mc_budget = 10000;
    opt.g_samples = 100000;
    opt.raster_resolution = 256;
    const auto r = variance_formula(Deformation::identity(), Rect::make(2.0, 2.0), 1.0, CovarianceModel::gaussian(), opt);
    EXPECT_NEAR(r.image_area, 4.0, 1e-2);
    EXPECT_NEAR(r.h, h_kernel(1.0), 1e-16);
    EXPECT_GT(r.variance, 0.0);
    EXPECT_GT(r.std_err, 0.0);
    EXPECT_NEAR(r.variance, r.pair_term + r.diagonal_term, 1e-12 * std::abs(r.variance) + 1e-15);
    EXPECT_EQ(r.radii.size(), r.kernel.size());
    EXPECT_GE(r.excluded_radius, 0.0);
    EXPECT_GE(r.excluded_bound, 0.0);
}

TEST(VarianceFormula, Deterministic) {
    VarianceOptions opt;
    opt.mc_budget = 10000;
    opt.g_samples = 20000;
    opt.raster_resolution = 128;
    opt.seed = 9;
    const auto a = variance_formula(Deformation::identity(), Rect::make(1.0, 1.0), 1.0, CovarianceModel::gaussian(), opt);
    const auto b = variance_formula(Deformation::identity(), Rect::make(1.0, 1.0), 1.0, CovarianceModel::gaussian(), opt);
    EXPECT_EQ(a.variance, b.variance);
    EXPECT_EQ(a.kernel, b.kernel);
}

TEST(VarianceFormula, RejectsSmallBudget) {
    VarianceOptions opt;
    opt.mc_budget = 100;
    EXPECT_THROW(variance_formula(Deformation::identity(), Rect::make(1.0, 1.0), 1.0, CovarianceModel::gaussian(), opt),
                 DomainError);
}
