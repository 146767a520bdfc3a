#include <gtest/gtest.h>

#include <cmath>

#include "excurse/error.hpp"
#include "excurse/expression.hpp"

using namespace excurse;

TEST(Expression, Arithmetic) {
    EXPECT_DOUBLE_EQ(Expression::parse("1 + 2 * 3 - 4 / 2")(0.0), 5.0);
    EXPECT_DOUBLE_EQ(Expression::parse("2^3^2")(0.0), 512.0);
    EXPECT_DOUBLE_EQ(Expression::parse("-2^2")(0.0), -4.0);
    EXPECT_DOUBLE_EQ(Expression::parse("pow(s, 3)/3 + s")(1.5), 1.5 * 1.5 * 1.5 / 3 + 1.5);
}

TEST(Expression, Functions) {
    const auto e = Expression::parse("exp(t) + log(t) + sin(t) * cos(t) + sqrt(t) + pi");
    const double t = 0.7;
    EXPECT_NEAR(e(t), std::exp(t) + std::log(t) + std::sin(t) * std::cos(t) + std::sqrt(t) + M_PI, 1e-15);
    EXPECT_EQ(e.variable(), 't');
}

TEST(Expression, Derivative) {
    const auto e = Expression::parse("r^2 + log(1 + r) * sin(r)");
    const double r = 1.3;
    EXPECT_NEAR(e.derivative(r), 2 * r + std::sin(r) / (1 + r) + std::log(1 + r) * std::cos(r), 1e-14);
    EXPECT_NEAR(Expression::parse("pow(s, 2.5)").derivative(2.0), 2.5 * std::pow(2.0, 1.5), 1e-13);
}

TEST(Expression, Errors) {
    EXPECT_THROW(Expression::parse("s + t"), DomainError);
    EXPECT_THROW(Expression::parse("2 * (s"), DomainError);
    EXPECT_THROW(Expression::parse("foo(s)"), DomainError);
    EXPECT_THROW(Expression::parse(""), DomainError);
}
