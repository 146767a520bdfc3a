#pragma once

#include <cstdint>
#include <vector>

#include "excurse/covariance.hpp"
#include "excurse/deform.hpp"

namespace excurse {

/// h(u) = (2 pi)^{-3/2} u exp(-u^2/2).
double h_kernel(double u);

/// D(t) = (2 pi)^4 det(I - C''(t)^2).
double d_kernel(const CovarianceModel& model, const Vec2& t);

struct MonteCarloValue {
    double value = 0.0;
    double std_err = 0.0;
};

/// g(u) = E[1{X(0) >= u} |det X''(0)|].
MonteCarloValue g_kernel(const CovarianceModel& model, double u, int samples, std::uint64_t seed);

/// E[1{X(0) >= u} det X''(0)], equal to 2 pi h(u) for a normalized model.
MonteCarloValue signed_det_kernel(const CovarianceModel& model, double u, int samples, std::uint64_t seed);

/// G(u, t) = E[1{X(0) >= u} 1{X(t) >= u} det X''(0) det X''(t) | X'(0) = X'(t) = 0]
/// under the exact conditional law. `excluded` is set (and 0 returned) when
/// the covariance of (X'(0), X'(t)) has an eigenvalue below `min_eigen`.
MonteCarloValue G_kernel(const CovarianceModel& model, double u, const Vec2& t, int samples, std::uint64_t seed,
                         bool* excluded = nullptr, double min_eigen = 1e-8);

/// Overlap area |A cap (A - t)|_2 of A = theta(T), from the autocorrelation
/// of a coverage raster of A (3 x 3 subsamples per pixel).
class OverlapRaster {
public:
    OverlapRaster(const Deformation& theta, const Rect& rect, int resolution = 512);

    double area() const { return area_; }
    /// Largest lag with nonzero overlap along either axis, as a radius.
    double radius() const { return radius_; }
    double operator()(const Vec2& t) const;
    /// Integral of the overlap over the circle of radius r, d psi measure.
    double angular_integral(double r, int angles = 256) const;

private:
    int nx_ = 0, ny_ = 0;  // padded autocorrelation size
    double pixel_ = 0.0;
    double area_ = 0.0;
    double radius_ = 0.0;
    std::vector<double> acf_;  // lag (a, b) at index (a mod ny, b mod nx)
};

struct VarianceOptions {
    /// Conditional Monte Carlo samples per radial lag node.
    int mc_budget = 100000;
    /// Samples for g(u).
    int g_samples = 1000000;
    std::uint64_t seed = 0;
    int raster_resolution = 512;
    double min_eigen = 1e-8;
};

struct VarianceResult {
    double variance = 0.0;
    double pair_term = 0.0;
    double diagonal_term = 0.0;
    double image_area = 0.0;
    double g = 0.0;
    double h = 0.0;
    /// Monte Carlo standard error of the estimate.
    double std_err = 0.0;
    /// Radius of the excluded small-lag ball and a bound on its contribution.
    double excluded_radius = 0.0;
    double excluded_bound = 0.0;
    std::vector<double> radii;
    std::vector<double> kernel;  // G D^{-1/2} - h^2 at the radii
};

/// Var[phi(A_u(X_theta, T))] by the second-moment formula. The model must be
/// isotropic; the lag integral is radial.
VarianceResult variance_formula(const Deformation& theta, const Rect& rect, double u, const CovarianceModel& model,
                                const VarianceOptions& options = {});

}  // namespace excurse
