#pragma once

#include <array>
#include <string>

#include "excurse/types.hpp"

namespace excurse {

enum class CovarianceKind { GaussianExp, PoweredExp, MaternLike };

/// Partial derivatives of C at a point, up to total order 4.
/// `at(i, j)` is d^{i+j} C / dx^i dy^j.
class DerivativeTensor {
public:
    static constexpr int kMaxOrder = 4;

    double at(int i, int j) const { return values_[index(i, j)]; }
    double& at(int i, int j) { return values_[index(i, j)]; }

    /// Hessian of C (the matrix C'' in the kinematic formulas).
    Mat2 hessian() const;

private:
    static constexpr int index(int i, int j) {
        const int n = i + j;
        return n * (n + 1) / 2 + j;
    }
    std::array<double, 15> values_{};
};

/// Isotropic covariance C(x) = F(|x|^2 / 2), rescaled so that C(0) = 1 and
/// C''(0) = -I.
///
/// The raw families are exp(-r^2), exp(-r^p) and the Matern class with unit
/// range; `scale()` is the factor applied to the argument of the raw family.
/// Only families whose sample paths are C^2 are accepted: the powered
/// exponential is restricted to p = 2 and the Matern smoothness must exceed 2.
class CovarianceModel {
public:
    static CovarianceModel gaussian();
    static CovarianceModel powered_exponential(double power);
    static CovarianceModel matern(double smoothness);

    CovarianceKind kind() const { return kind_; }
    /// p for the powered exponential, nu for Matern, 0 otherwise.
    double parameter() const { return parameter_; }
    double scale() const { return scale_; }
    std::string name() const;

    double evaluate(const Vec2& x) const { return radial(x.norm()); }
    double radial(double r) const;

    /// k-th derivative (k <= 4) of the profile F with respect to q = r^2 / 2.
    /// Returns +/-infinity where the derivative does not exist (Matern at
    /// q = 0 for k >= nu).
    double profile_derivative(double q, int k) const;

    DerivativeTensor derivatives(const Vec2& x) const;

    bool operator==(const CovarianceModel& other) const = default;

private:
    CovarianceModel(CovarianceKind kind, double parameter, double scale)
        : kind_(kind), parameter_(parameter), scale_(scale) {}

    CovarianceKind kind_;
    double parameter_;
    double scale_;
};

CovarianceModel covariance_from_name(const std::string& kind, double parameter);

/// Hessian of the model at 0 by central second differences; used to check
/// the normalization.
Mat2 numerical_hessian_at_origin(const CovarianceModel& model, double step = 1e-4);

// Gaussian kernels of the expected Euler characteristic.

/// Standard Gaussian tail probability P(N(0,1) >= u).
double gaussian_tail(double u);

/// Probabilists' Hermite polynomial H_n for n >= 0; n = -1 gives
/// sqrt(2 pi) Psi(x) exp(x^2 / 2).
double hermite(int n, double x);

/// rho_i(u) = (2 pi)^{-(i+1)/2} H_{i-1}(u) exp(-u^2/2), i in {0, 1, 2}.
double rho(int i, double u);

/// Mean Euler characteristic of the excursion above u of a normalized
/// isotropic field over a planar domain of the given area and perimeter.
double expected_chi_2d(double area, double perimeter, double u);

/// Same for a curve of the given length.
double expected_chi_1d(double length, double u);

/// Mean modified Euler characteristic (top Lipschitz-Killing term) for a
/// domain of dimension `dim` with measure `measure`.
double expected_phi(int dim, double measure, double u);

}  // namespace excurse
