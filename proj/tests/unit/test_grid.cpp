#include <gtest/gtest.h>

#include "excurse/error.hpp"
#include "excurse/grid.hpp"

using namespace excurse;

TEST(Grid, CellCentred) {
    const GridSpec g = cell_centered_grid(Vec2(0, 0), Vec2(2, 1), 0.5, 1);
    EXPECT_EQ(g.cols, 6);
    EXPECT_EQ(g.rows, 4);
    EXPECT_NEAR(g.origin.x(), -0.25, 1e-15);
    EXPECT_NEAR(g.point(1, 1).x(), 0.25, 1e-15);
    EXPECT_THROW(cell_centered_grid(Vec2(0, 0), Vec2(1.1, 1), 0.5), DomainError);
}

TEST(Grid, Window) {
    GridField f;
    f.spec = GridSpec{Vec2(0, 0), 1.0, 3, 4};
    for (int k = 0; k < 12; ++k) f.values.push_back(k);
    const GridField w = f.window(1, 1, 2, 2);
    EXPECT_EQ(w.at(0, 0), 5.0);
    EXPECT_EQ(w.at(1, 1), 10.0);
    EXPECT_EQ(w.spec.origin, Vec2(1, 1));
    EXPECT_THROW(f.window(2, 2, 2, 2), DomainError);
}

TEST(Grid, GfdRoundTrip) {
    GridField f;
    f.spec = GridSpec{Vec2(-1.5, 0.25), 0.1, 3, 2};
    f.values = {0.1, -2.5, 1e-300, 3.0, -0.0, 7.25};
    f.seed = 123456789012345ULL;
    f.model = CovarianceModel::matern(3.5);
    const std::string bytes = encode_gfd(f);
    EXPECT_EQ(bytes.rfind("excurse-gfd 1\n", 0), 0u);
    const GridField g = decode_gfd(bytes);
    EXPECT_EQ(g.spec, f.spec);
    EXPECT_EQ(g.values, f.values);
    EXPECT_EQ(g.seed, f.seed);
    EXPECT_EQ(g.model, f.model);
    EXPECT_EQ(encode_gfd(g), bytes);
}

TEST(Grid, GfdRejectsCorruption) {
    GridField f;
    f.spec = GridSpec{Vec2(0, 0), 1.0, 2, 2};
    f.values = {1, 2, 3, 4};
    std::string bytes = encode_gfd(f);
    EXPECT_THROW(decode_gfd(std::string_view(bytes).substr(0, bytes.size() - 1)), IoError);
    EXPECT_THROW(decode_gfd(std::string("not-gfd 1\nend\n")), IoError);
}

TEST(Grid, FormatDouble) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(2.0), "2");
}
