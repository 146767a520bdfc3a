#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "excurse/deform.hpp"
#include "excurse/error.hpp"
#include "excurse/field_sim.hpp"
#include "excurse/rng.hpp"
#include "excurse/stats.hpp"

using namespace excurse;

namespace {

GridSpec square(int n, double h, Vec2 origin = Vec2::Zero()) { return GridSpec{origin, h, n, n}; }

// Mean of X(p) X(p + lag) over one field.
double lag_product(const GridField& f, int di, int dj) {
    double sum = 0.0;
    long count = 0;
    for (int i = 0; i + di < f.spec.rows; ++i)
        for (int j = 0; j + dj < f.spec.cols; ++j) {
            sum += f.at(i, j) * f.at(i + di, j + dj);
            ++count;
        }
    return sum / count;
}

// Empirical correlation at a lattice lag with its standard error across
// independent fields.
SampleSummary correlation(const std::vector<GridField>& fields, int di, int dj) {
    std::vector<double> v;
    for (const auto& f : fields) v.push_back(lag_product(f, di, dj));
    return summarize(v);
}

}  // namespace

TEST(FieldSim, FftFriendlySize) {
    EXPECT_EQ(fft_friendly_size(1), 1);
    EXPECT_EQ(fft_friendly_size(11), 12);
    EXPECT_EQ(fft_friendly_size(97), 98);
    EXPECT_EQ(fft_friendly_size(1021), 1024);
    EXPECT_EQ(fft_friendly_size(1025), 1029);
}

TEST(FieldSim, Philox) {
    // Known-answer vectors of the reference Random123 implementation.
    auto r = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(r[0], 0x6627e8d5u);
    EXPECT_EQ(r[1], 0xe169c58du);
    EXPECT_EQ(r[2], 0xbc57ac4cu);
    EXPECT_EQ(r[3], 0x9b00dbd8u);
    r = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(r[0], 0x408f276du);
    EXPECT_EQ(r[1], 0x41c83b0eu);
    EXPECT_EQ(r[2], 0xa20bc7c6u);
    EXPECT_EQ(r[3], 0x6d5451fdu);
    r = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(r[0], 0xd16cfe09u);
    EXPECT_EQ(r[1], 0x94fdccebu);
    EXPECT_EQ(r[2], 0x5001e420u);
    EXPECT_EQ(r[3], 0x24126ea1u);
}

TEST(FieldSim, Deterministic) {
    const FieldSimulator sim(square(40, 0.2), CovarianceModel::gaussian());
    EXPECT_EQ(sim.simulate(9).values, sim.simulate(9).values);
    EXPECT_NE(sim.simulate(9).values, sim.simulate(10).values);
    EXPECT_EQ(simulate(square(40, 0.2), CovarianceModel::gaussian(), 9).values, sim.simulate(9).values);
}

TEST(FieldSim, EmbeddingReport) {
    const FieldSimulator sim(square(50, 0.2), CovarianceModel::matern(2.5));
    const auto& r = sim.report();
    EXPECT_GE(r.torus_rows, 100);
    EXPECT_GE(r.pad_factor, 2.0);
    EXPECT_GE(r.most_negative, -1e-10);
    EXPECT_GT(r.kept_modes, 0u);
}

TEST(FieldSim, SpatialMean) {
    const int n = 512;
    const double h = 0.2;
    const auto model = CovarianceModel::gaussian();
    const GridField f = simulate(square(n, h), model, 2024);
    double mean = 0.0;
    for (double v : f.values) mean += v;
    mean /= f.values.size();
    // Var of the spatial mean from the covariance summed over all lags.
    double var = 0.0;
    for (int di = -(n - 1); di < n; ++di) {
        const double cy = model.radial(std::abs(di) * h);
        if (cy < 1e-18) continue;
        for (int dj = -(n - 1); dj < n; ++dj) {
            const double c = model.evaluate(Vec2(dj * h, di * h));
            if (c < 1e-18) continue;
            var += (n - std::abs(di)) * static_cast<double>(n - std::abs(dj)) * c;
        }
    }
    var /= std::pow(static_cast<double>(n) * n, 2);
    EXPECT_LT(std::abs(mean), 4.0 * std::sqrt(var));
}

TEST(FieldSim, UnitVariance) {
    const FieldSimulator sim(square(32, 0.25), CovarianceModel::gaussian());
    double sq = 0.0;
    long count = 0;
    for (int r = 0; r < 100; ++r) {
        const auto f = sim.simulate(replication_seed(77, r));
        for (double v : f.values) sq += v * v;
        count += static_cast<long>(f.values.size());
    }
    EXPECT_NEAR(sq / count, 1.0, 0.05);
}

TEST(FieldSim, LagCorrelation) {
    const double h = 0.2;
    const auto model = CovarianceModel::gaussian();
    const FieldSimulator sim(square(16, h), model);
    std::vector<double> prod;
    for (int r = 0; r < 200; ++r) {
        const auto f = sim.simulate(replication_seed(5, r));
        prod.push_back(f.at(8, 8) * f.at(8, 9));
    }
    const auto s = summarize(prod);
    EXPECT_NEAR(s.mean, model.radial(h), 3.0 * s.std_err);
}

TEST(FieldSim, SpectralReproducesLattice) {
    const FieldSimulator sim(square(30, 0.2, Vec2(-3, -3)), CovarianceModel::gaussian());
    const auto s = sim.simulate_sample(4);
    for (int i = 0; i < 30; i += 7)
        for (int j = 0; j < 30; j += 5) EXPECT_NEAR(s.evaluate(s.field().spec.point(i, j)), s.field().at(i, j), 1e-10);
    EXPECT_TRUE(sample_along(s, std::vector<Vec2>{}).empty());
    EXPECT_THROW(s.evaluate(Vec2(10, 0)), DomainError);
}

TEST(FieldSim, MidpointIsStandardNormal) {
    const FieldSimulator sim(square(20, 0.3), CovarianceModel::gaussian());
    const Vec2 mid = sim.spec().point(10, 10) + Vec2(0.15, 0.0);
    std::vector<double> v, sq;
    for (int r = 0; r < 200; ++r) {
        const double x = sim.simulate_sample(replication_seed(11, r)).evaluate(mid);
        v.push_back(x);
        sq.push_back(x * x);
    }
    const auto m = summarize(v), s2 = summarize(sq);
    EXPECT_NEAR(m.mean, 0.0, 3.0 * m.std_err);
    EXPECT_NEAR(s2.mean, 1.0, 3.0 * s2.std_err);
}

TEST(FieldSim, DeformedIdentity) {
    const FieldSimulator sim(square(20, 0.25), CovarianceModel::gaussian());
    const auto s = sim.simulate_sample(8);
    GridSpec inner{Vec2(1.0, 1.0), 0.25, 8, 8};
    const GridField d = deformed_field(s, Deformation::identity(), inner);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) EXPECT_NEAR(d.at(i, j), s.field().at(i + 4, j + 4), 1e-10);
}

TEST(FieldSim, DeformedRotationKeepsCovariance) {
    const double h = 0.2;
    const FieldSimulator sim(square(60, h, Vec2(-6, -6)), CovarianceModel::gaussian());
    const auto theta = Deformation::rotation(0.6);
    GridSpec target{Vec2(-2, -2), h, 20, 20};
    std::vector<GridField> fields;
    for (int r = 0; r < 200; ++r) fields.push_back(deformed_field(sim.simulate_sample(replication_seed(3, r)), theta, target));
    for (int lag : {1, 3, 5}) {
        const auto c = correlation(fields, 0, lag);
        EXPECT_NEAR(c.mean, std::exp(-0.5 * lag * h * lag * h), 3.0 * c.std_err) << lag;
    }
}

TEST(FieldSim, LinearDeformationCorrelationLengths) {
    const double h = 0.1;
    const FieldSimulator sim(square(96, h, Vec2(-4.8, -4.8)), CovarianceModel::gaussian());
    Mat2 m;
    m << 2, 0, 0, 1;
    const auto theta = Deformation::linear(m);
    GridSpec target{Vec2(-2, -2), h, 40, 40};
    std::vector<GridField> fields;
    for (int r = 0; r < 200; ++r) fields.push_back(deformed_field(sim.simulate_sample(replication_seed(6, r)), theta, target));
    // Lag where the correlation crosses exp(-1/2), linearly interpolated.
    auto length = [&](bool along_x) {
        double prev = 1.0;
        for (int k = 1; k < 20; ++k) {
            const double c = (along_x ? correlation(fields, 0, k) : correlation(fields, k, 0)).mean;
            if (c < std::exp(-0.5)) return h * (k - 1 + (prev - std::exp(-0.5)) / (prev - c));
            prev = c;
        }
        return std::numeric_limits<double>::infinity();
    };
    const double lx = length(true), ly = length(false);
    EXPECT_NEAR(lx / ly, 0.5, 0.05);
}
