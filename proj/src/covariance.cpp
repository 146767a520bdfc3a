#include "excurse/covariance.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "excurse/error.hpp"

namespace excurse {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Truncated bivariate Taylor polynomial, total degree <= 4.
struct Jet {
    std::array<std::array<double, 5>, 5> c{};

    Jet operator*(const Jet& o) const {
        Jet r;
        for (int i = 0; i <= 4; ++i)
            for (int j = 0; i + j <= 4; ++j) {
                if (c[i][j] == 0.0) continue;
                for (int k = 0; i + k <= 4; ++k)
                    for (int l = 0; i + j + k + l <= 4; ++l) r.c[i + k][j + l] += c[i][j] * o.c[k][l];
            }
        return r;
    }
};

// z^mu K_|mu|(z), continuous extension at z = 0 when mu > 0.
double matern_kernel(double mu, double z) {
    if (z <= 0.0) {
        if (mu > 0.0) return std::pow(2.0, mu - 1.0) * std::tgamma(mu);
        return std::numeric_limits<double>::infinity();
    }
    if (z > 700.0) return 0.0;
    return std::pow(z, mu) * std::cyl_bessel_k(std::abs(mu), z);
}

}  // namespace

Mat2 DerivativeTensor::hessian() const {
    Mat2 h;
    h << at(2, 0), at(1, 1), at(1, 1), at(0, 2);
    return h;
}

CovarianceModel CovarianceModel::gaussian() {
    return {CovarianceKind::GaussianExp, 0.0, 1.0 / std::numbers::sqrt2};
}

CovarianceModel CovarianceModel::powered_exponential(double power) {
    if (!(power > 0.0 && power <= 2.0))
        throw DomainError("powered exponential: power must lie in (0, 2]");
    if (power != 2.0)
        throw DomainError("powered exponential with power < 2 has no second derivative at 0; "
                          "the field would not be C^2");
    return {CovarianceKind::PoweredExp, power, 1.0 / std::numbers::sqrt2};
}

CovarianceModel CovarianceModel::matern(double smoothness) {
    if (!(smoothness > 2.0)) throw DomainError("Matern model needs smoothness > 2");
    return {CovarianceKind::MaternLike, smoothness, std::sqrt((smoothness - 1.0) / smoothness)};
}

std::string CovarianceModel::name() const {
    switch (kind_) {
        case CovarianceKind::GaussianExp: return "gaussian";
        case CovarianceKind::PoweredExp: return "powered-exp";
        case CovarianceKind::MaternLike: return "matern";
    }
    return "unknown";
}

CovarianceModel covariance_from_name(const std::string& kind, double parameter) {
    if (kind == "gaussian") return CovarianceModel::gaussian();
    if (kind == "powered-exp") return CovarianceModel::powered_exponential(parameter);
    if (kind == "matern") return CovarianceModel::matern(parameter);
    throw DomainError("unknown covariance model '" + kind + "'");
}

double CovarianceModel::radial(double r) const {
    return profile_derivative(0.5 * r * r, 0);
}

double CovarianceModel::profile_derivative(double q, int k) const {
    if (k < 0 || k > DerivativeTensor::kMaxOrder) throw DomainError("profile derivative order out of range");
    if (kind_ == CovarianceKind::MaternLike) {
        const double nu = parameter_;
        const double kappa2 = 2.0 * (nu - 1.0);
        const double norm = std::pow(2.0, 1.0 - nu) / std::tgamma(nu);
        const double z = std::sqrt(kappa2 * 2.0 * q);
        return std::pow(-kappa2, k) * norm * matern_kernel(nu - k, z);
    }
    // exp(-q)
    return ((k % 2) ? -1.0 : 1.0) * std::exp(-q);
}

DerivativeTensor CovarianceModel::derivatives(const Vec2& x) const {
    const double q0 = 0.5 * x.squaredNorm();
    const bool at_origin = (q0 == 0.0);

    Jet dq;
    dq.c[1][0] = x.x();
    dq.c[0][1] = x.y();
    dq.c[2][0] = 0.5;
    dq.c[0][2] = 0.5;

    Jet total;
    Jet power;
    power.c[0][0] = 1.0;
    double factorial = 1.0;
    for (int k = 0; k <= 4; ++k) {
        if (k > 0) {
            power = power * dq;
            factorial *= k;
        }
        // At the origin dq has no linear part, so dq^k starts at degree 2k.
        if (at_origin && 2 * k > 4) break;
        const double fk = profile_derivative(q0, k) / factorial;
        for (int i = 0; i <= 4; ++i)
            for (int j = 0; i + j <= 4; ++j) total.c[i][j] += fk * power.c[i][j];
    }

    static constexpr double kFact[] = {1, 1, 2, 6, 24};
    DerivativeTensor out;
    for (int i = 0; i <= 4; ++i)
        for (int j = 0; i + j <= 4; ++j) out.at(i, j) = total.c[i][j] * kFact[i] * kFact[j];
    return out;
}

Mat2 numerical_hessian_at_origin(const CovarianceModel& model, double step) {
    const double h = step;
    const double c0 = model.radial(0.0);
    const double cx = model.evaluate(Vec2(h, 0.0));
    const double cy = model.evaluate(Vec2(0.0, h));
    const double cd = model.evaluate(Vec2(h, h));
    const double ca = model.evaluate(Vec2(h, -h));
    Mat2 out;
    out(0, 0) = 2.0 * (cx - c0) / (h * h);
    out(1, 1) = 2.0 * (cy - c0) / (h * h);
    // C is even, so C(h,h) = C(-h,-h) and C(h,-h) = C(-h,h).
    out(0, 1) = out(1, 0) = (2.0 * cd - 2.0 * ca) / (4.0 * h * h);
    return out;
}

double gaussian_tail(double u) {
    return 0.5 * std::erfc(u / std::numbers::sqrt2);
}

double hermite(int n, double x) {
    if (n < -1) throw DomainError("hermite: order must be >= -1");
    if (n == -1) return std::sqrt(kTwoPi) * gaussian_tail(x) * std::exp(0.5 * x * x);
    double prev = 1.0;
    if (n == 0) return prev;
    double cur = x;
    for (int k = 1; k < n; ++k) {
        const double next = x * cur - k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double rho(int i, double u) {
    if (i < 0 || i > 2) throw DomainError("rho: index must be 0, 1 or 2");
    if (i == 0) return gaussian_tail(u);
    return std::pow(kTwoPi, -0.5 * (i + 1)) * hermite(i - 1, u) * std::exp(-0.5 * u * u);
}

double expected_chi_2d(double area, double perimeter, double u) {
    if (area < 0.0 || perimeter < 0.0) throw DomainError("expected_chi_2d: negative area or perimeter");
    return area * rho(2, u) + 0.5 * perimeter * rho(1, u) + rho(0, u);
}

double expected_chi_1d(double length, double u) {
    if (length < 0.0) throw DomainError("expected_chi_1d: negative length");
    return length * rho(1, u) + rho(0, u);
}

double expected_phi(int dim, double measure, double u) {
    if (dim != 1 && dim != 2) throw DomainError("expected_phi: dimension must be 1 or 2");
    if (measure < 0.0) throw DomainError("expected_phi: negative measure");
    return measure * rho(dim, u);
}

}  // namespace excurse
