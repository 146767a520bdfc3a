#pragma once

#include <functional>
#include <span>

namespace excurse {

struct QuadratureOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-15;
    int max_intervals = 4000;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
    std::span<const double> nodes;
    std::span<const double> weights;
};
GaussLegendreRule gauss_legendre(int n);

/// Globally adaptive Gauss-Legendre quadrature. Each panel is integrated
/// with the base rule and with the rule on its two halves; the difference
/// is the panel error, and the panel with the largest error is bisected
/// until the total error meets the tolerance. Throws NumericError with the
/// achieved error when max_intervals is exhausted.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& options = {});

/// Iterated integral over [ax, bx] x [ay, by], adaptive in both variables.
QuadratureResult integrate_2d(const std::function<double(double, double)>& f, double ax, double bx, double ay,
                              double by, const QuadratureOptions& options = {});

}  // namespace excurse
