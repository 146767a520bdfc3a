#include <gtest/gtest.h>

#include <sstream>

#include "excurse/covariance.hpp"
#include "excurse/error.hpp"
#include "excurse/excursion.hpp"
#include "excurse/field_sim.hpp"
#include "excurse/mean_table.hpp"
#include "excurse/rng.hpp"
#include "excurse/stats.hpp"

using namespace excurse;

namespace {

ExcursionMask from_rows(const std::vector<std::string>& rows) {
    std::vector<std::uint8_t> bits;
    for (const auto& r : rows)
        for (char c : r) bits.push_back(c == '#');
    return mask_from_bits(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()), bits);
}

}  // namespace

TEST(Excursion, Mask) {
    const std::vector<double> v{0.2, 1.4, 0.9};
    const auto m = excursion_mask(v, 1.0);
    EXPECT_TRUE(m.one_dimensional());
    EXPECT_EQ(m.bits, (std::vector<std::uint8_t>{0, 1, 0}));
    EXPECT_EQ(excursion_mask(v, 5.0).bits, (std::vector<std::uint8_t>{0, 0, 0}));
    EXPECT_EQ(excursion_mask(v, -5.0).bits, (std::vector<std::uint8_t>{1, 1, 1}));
    EXPECT_EQ(excursion_mask(std::vector<double>{1.0}, 1.0).bits[0], 1);
    EXPECT_THROW(excursion_mask(std::vector<double>{0.0, std::nan("")}, 0.0), DomainError);
}

TEST(Excursion, Chi2d) {
    EXPECT_EQ(euler_characteristic_2d(from_rows({"...", ".#.", "..."})).chi, 1);
    const auto ring = euler_characteristic_2d(from_rows({".....", ".###.", ".#.#.", ".###.", "....."}));
    EXPECT_EQ(ring.chi, 0);
    EXPECT_EQ(ring.n_components, 1);
    EXPECT_EQ(ring.n_holes, 1);
    EXPECT_EQ(euler_characteristic_2d(from_rows({"##...", "##...", "...##", "...##"})).chi, 2);
    EXPECT_EQ(euler_characteristic_2d(from_rows({"#.", ".#"})).chi, 1);
    EXPECT_EQ(euler_characteristic_2d(from_rows({"###", "#.#", "###"})).chi, 0);
    EXPECT_EQ(euler_characteristic_2d(from_rows({"...", "..."})).chi, 0);
}

TEST(Excursion, ChiCrossCheckOnRandomFields) {
    const FieldSimulator sim(GridSpec{Vec2::Zero(), 0.2, 40, 40}, CovarianceModel::gaussian());
    for (int r = 0; r < 20; ++r) {
        const auto mask = excursion_mask(sim.simulate(r), 0.3);
        EXPECT_EQ(euler_characteristic_2d(mask).chi, cubical_euler(mask));
    }
}

TEST(Excursion, Chi1d) {
    auto chi = [](std::vector<std::uint8_t> b) {
        return euler_characteristic_1d(mask_from_bits(1, static_cast<int>(b.size()), b)).chi;
    };
    EXPECT_EQ(chi({1, 1, 0, 1}), 2);
    EXPECT_EQ(chi({0, 0, 0}), 0);
    EXPECT_EQ(chi({1, 1, 1}), 1);
}

TEST(Excursion, ModifiedEuler) {
    EXPECT_DOUBLE_EQ(modified_euler_2d(from_rows({"#####", "#####", "#####", "#####"})), 0.0);
    EXPECT_DOUBLE_EQ(modified_euler_2d(from_rows({".....", "..#..", "....."})), 1.0);
    EXPECT_THROW(modified_euler_2d(from_rows({"##", "##"})), DomainError);
}

TEST(Excursion, CriticalIndexClassifiesMorsePoints) {
    // 3x3 neighbourhoods around the centre.
    const std::vector<double> max{0, 0, 0, 0, 1, 0, 0, 0, 0};
    const std::vector<double> min{2, 2, 2, 2, 1, 2, 2, 2, 2};
    const std::vector<double> saddle{0.5, 2, 0.5, 0, 1, 0, 0.5, 2, 0.5};
    const std::vector<double> slope{0, 0, 0, 1, 1, 1, 2, 2, 2};
    EXPECT_EQ(critical_index(max, 3, 0.5, 4), 1);
    EXPECT_EQ(critical_index(min, 3, 0.5, 4), 1);
    EXPECT_EQ(critical_index(min, 3, 1.5, 4), 0);
    EXPECT_EQ(critical_index(saddle, 3, 0.5, 4), -1);
    EXPECT_EQ(critical_index(slope, 3, 0.5, 4), 0);
    EXPECT_EQ(critical_index(max, 3, 1.5, 4), 0);
}

TEST(Excursion, ModifiedEqualsChiAwayFromBorder) {
    // Fields forced below the level on a two-pixel frame: every component
    // is interior and the critical-point sum must equal chi.
    const FieldSimulator sim(GridSpec{Vec2::Zero(), 0.25, 36, 36}, CovarianceModel::gaussian());
    for (int r = 0; r < 30; ++r) {
        GridField f = sim.simulate(replication_seed(31, r));
        for (int i = 0; i < 36; ++i)
            for (int j = 0; j < 36; ++j)
                if (i < 2 || j < 2 || i >= 34 || j >= 34) f.at(i, j) = -10.0;
        const auto mask = excursion_mask(f, 0.5);
        EXPECT_DOUBLE_EQ(modified_euler_2d(mask), static_cast<double>(euler_characteristic_2d(mask).chi));
    }
}

TEST(Excursion, ModifiedEuler1d) {
    const std::vector<double> v{0, 2, 1, 3, 0.5, 0.2, 1.5, 0.1};
    // Interior maxima above 1: 2, 3, 1.5; minima above 1: none (1 is at the level).
    EXPECT_DOUBLE_EQ(modified_euler_1d(excursion_mask(v, 1.0)), 2.0);
    EXPECT_DOUBLE_EQ(modified_euler_1d(excursion_mask(v, 0.0)), 3.0 - 2.0);
}

TEST(Excursion, BoundaryCorrected) {
    EXPECT_DOUBLE_EQ(boundary_corrected_euler_2d(from_rows({"###", "###", "###"})), 0.0);
    EXPECT_DOUBLE_EQ(boundary_corrected_euler_2d(from_rows({"...", ".#.", "..."})), 1.0);
}

TEST(Excursion, MeanModifiedEulerMatchesFormula) {
    const GridSpec spec = cell_centered_grid(Vec2(0, 0), Vec2(5, 5), 0.2, 1);
    const FieldSimulator sim(spec, CovarianceModel::gaussian());
    std::vector<double> phi;
    for (int r = 0; r < 300; ++r) phi.push_back(measure_lattice(sim.simulate(replication_seed(99, r)), 1.0, 1).phi_hat);
    const auto s = summarize(phi);
    EXPECT_NEAR(s.mean, expected_phi(2, 25.0, 1.0), 3.0 * s.std_err);
}

TEST(Excursion, Pbm) {
    const auto m = from_rows({"#.", ".."});
    // Row 0 has the smallest y, so it is printed last.
    EXPECT_EQ(encode_pbm(m), "P1\n# excursion above 0.5\n2 2\n0 0\n1 0\n");
}

TEST(Excursion, EulerCsv) {
    std::ostringstream os;
    std::vector<EulerRecord> rec{{7, 1.0, "rect(1,1)", EulerStats{2, 1.5, 3, 1}}};
    write_euler_csv(os, "abc", rec);
    EXPECT_EQ(os.str(), "# config-hash: abc\nseed,u,domain-id,chi,phi_hat,n_components,n_holes\n7,1,rect(1,1),2,1.5,3,1\n");
}
