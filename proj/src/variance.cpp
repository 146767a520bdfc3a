#include "excurse/variance.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>

#include "excurse/error.hpp"
#include "excurse/parallel.hpp"
#include "excurse/quadrature.hpp"
#include "excurse/rng.hpp"
#include "excurse/stats.hpp"

namespace excurse {

namespace {

constexpr double kPi = std::numbers::pi;

// Derivative multi-indices of X, X'_x, X'_y, X''_xx, X''_xy, X''_yy.
constexpr std::array<std::array<int, 2>, 6> kIndex = {{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}}};

/// Covariance of (X, X', X'') at 0 and at t: a 12 x 12 matrix with the six
/// variables at 0 first. Cov(d^a X(0), d^b X(t)) = (-1)^{|a|} d^{a+b} C(t).
Eigen::Matrix<double, 12, 12> joint_covariance(const CovarianceModel& model, const Vec2& t) {
    const DerivativeTensor c0 = model.derivatives(Vec2::Zero());
    const DerivativeTensor ct = model.derivatives(t);
    Eigen::Matrix<double, 12, 12> s;
    for (int p = 0; p < 6; ++p)
        for (int q = 0; q < 6; ++q) {
            const auto [ai, aj] = kIndex[p];
            const auto [bi, bj] = kIndex[q];
            const int order_a = ai + aj, order_b = bi + bj;
            const double same = ((order_b % 2) ? -1.0 : 1.0) * c0.at(ai + bi, aj + bj);
            const double cross = ((order_a % 2) ? -1.0 : 1.0) * ct.at(ai + bi, aj + bj);
            s(p, q) = same;
            s(6 + p, 6 + q) = same;
            s(p, 6 + q) = cross;
            s(6 + q, p) = cross;
        }
    return s;
}

template <int N>
Eigen::Matrix<double, N, N> psd_root(const Eigen::Matrix<double, N, N>& cov) {
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(cov);
    const auto d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal();
}

/// Covariance of (X, X''_xx, X''_xy, X''_yy) at one point.
Eigen::Matrix4d point_covariance(const CovarianceModel& model) {
    const auto s = joint_covariance(model, Vec2(1.0, 0.0));
    Eigen::Matrix4d c;
    const int idx[4] = {0, 3, 4, 5};
    for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q) c(p, q) = s(idx[p], idx[q]);
    return c;
}

template <class F>
MonteCarloValue point_average(const CovarianceModel& model, double u, int samples, std::uint64_t seed, F&& f) {
    if (samples < 2) throw DomainError("Monte Carlo budget must be at least 2");
    const Eigen::Matrix4d root = psd_root<4>(point_covariance(model));
    Philox4x32 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> v(static_cast<std::size_t>(samples));
    for (auto& x : v) {
        Eigen::Vector4d z;
        for (int k = 0; k < 4; ++k) z(k) = normal(rng);
        const Eigen::Vector4d y = root * z;
        x = (y(0) >= u) ? f(y(1) * y(3) - y(2) * y(2)) : 0.0;
    }
    const SampleSummary s = summarize(v);
    return {s.mean, s.std_err};
}

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

double h_kernel(double u) { return std::pow(2.0 * kPi, -1.5) * u * std::exp(-0.5 * u * u); }

double d_kernel(const CovarianceModel& model, const Vec2& t) {
    const Mat2 c2 = model.derivatives(t).hessian();
    return std::pow(2.0 * kPi, 4) * (Mat2::Identity() - c2 * c2).determinant();
}

MonteCarloValue g_kernel(const CovarianceModel& model, double u, int samples, std::uint64_t seed) {
    return point_average(model, u, samples, seed, [](double det) { return std::abs(det); });
}

MonteCarloValue signed_det_kernel(const CovarianceModel& model, double u, int samples, std::uint64_t seed) {
    return point_average(model, u, samples, seed, [](double det) { return det; });
}

MonteCarloValue G_kernel(const CovarianceModel& model, double u, const Vec2& t, int samples, std::uint64_t seed,
                         bool* excluded, double min_eigen) {
    if (samples < 2) throw DomainError("Monte Carlo budget must be at least 2");
    const auto s = joint_covariance(model, t);
    // V = (X, X'') at 0 and t; W = X' at 0 and t.
    const int iv[8] = {0, 3, 4, 5, 6, 9, 10, 11};
    const int iw[4] = {1, 2, 7, 8};
    Eigen::Matrix<double, 8, 8> svv;
    Eigen::Matrix<double, 8, 4> svw;
    Eigen::Matrix4d sww;
    for (int p = 0; p < 8; ++p) {
        for (int q = 0; q < 8; ++q) svv(p, q) = s(iv[p], iv[q]);
        for (int q = 0; q < 4; ++q) svw(p, q) = s(iv[p], iw[q]);
    }
    for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q) sww(p, q) = s(iw[p], iw[q]);
    const double lambda_min = Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d>(sww).eigenvalues()(0);
    if (excluded) *excluded = lambda_min < min_eigen;
    if (lambda_min < min_eigen) return {};
    const Eigen::Matrix<double, 8, 8> cond = svv - svw * sww.ldlt().solve(svw.transpose());
    const Eigen::Matrix<double, 8, 8> root = psd_root<8>(0.5 * (cond + cond.transpose()));

    Philox4x32 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> v(static_cast<std::size_t>(samples));
    for (auto& x : v) {
        Eigen::Matrix<double, 8, 1> z;
        for (int k = 0; k < 8; ++k) z(k) = normal(rng);
        const Eigen::Matrix<double, 8, 1> y = root * z;
        x = (y(0) >= u && y(4) >= u) ? (y(1) * y(3) - y(2) * y(2)) * (y(5) * y(7) - y(6) * y(6)) : 0.0;
    }
    const SampleSummary sum = summarize(v);
    return {sum.mean, sum.std_err};
}

OverlapRaster::OverlapRaster(const Deformation& theta, const Rect& rect, int resolution) {
    if (resolution < 16) throw DomainError("overlap raster resolution must be >= 16");
    // Image bounding box from the boundary.
    Vec2 lo = Vec2::Constant(INFINITY), hi = Vec2::Constant(-INFINITY);
    const Vec2 c[4] = {rect.map(0, 0), rect.map(rect.extent.x(), 0), rect.map(rect.extent.x(), rect.extent.y()),
                       rect.map(0, rect.extent.y())};
    for (int e = 0; e < 4; ++e)
        for (int k = 0; k <= 1024; ++k) {
            const Vec2 y = theta.eval(c[e] + (c[(e + 1) % 4] - c[e]) * (k / 1024.0));
            lo = lo.cwiseMin(y);
            hi = hi.cwiseMax(y);
        }
    const Vec2 extent = hi - lo;
    pixel_ = std::max(extent.x(), extent.y()) / resolution;
    const int mx = std::max(1, static_cast<int>(std::ceil(extent.x() / pixel_ - 1e-9)));
    const int my = std::max(1, static_cast<int>(std::ceil(extent.y() / pixel_ - 1e-9)));
    nx_ = 2 * mx;
    ny_ = 2 * my;
    radius_ = extent.norm();

    const Mat2 frame_inv = rect.frame().transpose();
    auto inside = [&](const Vec2& y) {
        const Vec2 local = frame_inv * theta.inverse(y) - rect.lower;
        return local.x() >= 0.0 && local.x() <= rect.extent.x() && local.y() >= 0.0 && local.y() <= rect.extent.y();
    };
    const std::size_t total = static_cast<std::size_t>(nx_) * ny_;
    fftw_complex* buf = fftw_alloc_complex(total);
    if (!buf) throw std::bad_alloc();
    for (std::size_t k = 0; k < total; ++k) buf[k][0] = buf[k][1] = 0.0;
    std::vector<double> cover(static_cast<std::size_t>(mx) * my);
    parallel_for(static_cast<std::size_t>(my), [&](std::size_t i) {
        for (int j = 0; j < mx; ++j) {
            int n_in = 0;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    n_in += inside(lo + pixel_ * Vec2(j + (b + 0.5) / 3.0, static_cast<double>(i) + (a + 0.5) / 3.0));
            cover[i * mx + j] = n_in / 9.0;
        }
    });
    for (int i = 0; i < my; ++i)
        for (int j = 0; j < mx; ++j) {
            buf[static_cast<std::size_t>(i) * nx_ + j][0] = cover[static_cast<std::size_t>(i) * mx + j];
            area_ += cover[static_cast<std::size_t>(i) * mx + j];
        }
    area_ *= pixel_ * pixel_;
    {
        std::lock_guard lock(planner_mutex());
        fftw_plan fwd = fftw_plan_dft_2d(ny_, nx_, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        fftw_execute(fwd);
        fftw_destroy_plan(fwd);
        for (std::size_t k = 0; k < total; ++k) {
            buf[k][0] = buf[k][0] * buf[k][0] + buf[k][1] * buf[k][1];
            buf[k][1] = 0.0;
        }
        fftw_plan bwd = fftw_plan_dft_2d(ny_, nx_, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
        fftw_execute(bwd);
        fftw_destroy_plan(bwd);
    }
    acf_.resize(total);
    const double scale = pixel_ * pixel_ / static_cast<double>(total);
    for (std::size_t k = 0; k < total; ++k) acf_[k] = std::max(0.0, buf[k][0] * scale);
    fftw_free(buf);
}

double OverlapRaster::operator()(const Vec2& t) const {
    const double fx = t.x() / pixel_, fy = t.y() / pixel_;
    if (std::abs(fx) >= nx_ / 2 - 1 || std::abs(fy) >= ny_ / 2 - 1) return 0.0;
    const int j = static_cast<int>(std::floor(fx)), i = static_cast<int>(std::floor(fy));
    const double wx = fx - j, wy = fy - i;
    auto at = [&](int a, int b) {
        const int ai = ((a % ny_) + ny_) % ny_, bj = ((b % nx_) + nx_) % nx_;
        return acf_[static_cast<std::size_t>(ai) * nx_ + bj];
    };
    return (1 - wy) * ((1 - wx) * at(i, j) + wx * at(i, j + 1)) + wy * ((1 - wx) * at(i + 1, j) + wx * at(i + 1, j + 1));
}

double OverlapRaster::angular_integral(double r, int angles) const {
    double sum = 0.0;
    for (int k = 0; k < angles; ++k) {
        const double psi = 2.0 * kPi * (k + 0.5) / angles;
        sum += (*this)(from_polar(r, psi));
    }
    return sum * 2.0 * kPi / angles;
}

VarianceResult variance_formula(const Deformation& theta, const Rect& rect, double u, const CovarianceModel& model,
                                const VarianceOptions& options) {
    if (options.mc_budget < 10000) throw DomainError("variance formula: Monte Carlo budget must be >= 1e4");
    if (!std::isfinite(u)) throw DomainError("variance formula: level must be finite");
    VarianceResult res;
    res.h = h_kernel(u);
    const OverlapRaster overlap(theta, rect, options.raster_resolution);
    res.image_area = overlap.area();

    const MonteCarloValue g = g_kernel(model, u, options.g_samples, replication_seed(options.seed, 0x9e3779b9ULL));
    res.g = g.value;
    res.diagonal_term = res.image_area * g.value / (2.0 * kPi);

    // Beyond r_cut every covariance derivative is negligible and the pair
    // kernel vanishes identically.
    double r_cut = 0.5;
    for (; r_cut < overlap.radius(); r_cut += 0.25) {
        const DerivativeTensor d = model.derivatives(Vec2(r_cut, 0.0));
        double m = 0.0;
        for (int i = 0; i <= 4; ++i)
            for (int j = 0; i + j <= 4; ++j) m = std::max(m, std::abs(d.at(i, j)));
        if (m < 1e-12) break;
    }
    r_cut = std::min(r_cut, overlap.radius());

    // Radial panels refined geometrically towards the origin.
    std::vector<double> edges{0.0};
    for (double e = 0.025; e < std::min(0.8, r_cut); e *= 2.0) edges.push_back(e);
    for (double e = 0.8; e < r_cut; e += 0.4) edges.push_back(e);
    edges.push_back(r_cut);
    const GaussLegendreRule rule = gauss_legendre(8);
    struct Node {
        double r, w;
    };
    std::vector<Node> nodes;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double a = edges[p], b = edges[p + 1];
        for (std::size_t k = 0; k < rule.nodes.size(); ++k)
            nodes.push_back({0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[k], 0.5 * (b - a) * rule.weights[k]});
    }
    std::vector<double> contrib(nodes.size()), var(nodes.size()), kern(nodes.size());
    std::vector<char> excl(nodes.size());
    const double h2 = res.h * res.h;
    parallel_for(nodes.size(), [&](std::size_t k) {
        const Vec2 t(nodes[k].r, 0.0);
        bool ex = false;
        const MonteCarloValue G =
            G_kernel(model, u, t, options.mc_budget, replication_seed(options.seed, k + 1), &ex, options.min_eigen);
        excl[k] = ex;
        if (ex) return;
        const double dinv = 1.0 / std::sqrt(d_kernel(model, t));
        const double o = overlap.angular_integral(nodes[k].r);
        kern[k] = G.value * dinv - h2;
        contrib[k] = nodes[k].w * nodes[k].r * o * kern[k];
        const double e = nodes[k].w * nodes[k].r * o * G.std_err * dinv;
        var[k] = e * e;
    });
    double last_kernel = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (excl[k]) {
            res.excluded_radius = std::max(res.excluded_radius, nodes[k].r);
            continue;
        }
        if (last_kernel == 0.0) last_kernel = kern[k];
        res.radii.push_back(nodes[k].r);
        res.kernel.push_back(kern[k]);
    }
    res.pair_term = pairwise_sum(contrib);
    if (res.excluded_radius > 0.0) {
        // Kernel bounded by its value at the first retained node.
        res.excluded_bound = std::abs(last_kernel) * res.image_area * kPi * res.excluded_radius * res.excluded_radius;
    }
    res.variance = res.pair_term + res.diagonal_term;
    res.std_err = std::sqrt(pairwise_sum(var) + std::pow(res.image_area * g.std_err / (2.0 * kPi), 2));
    return res;
}

}  // namespace excurse
