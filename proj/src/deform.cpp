#include "excurse/deform.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <variant>

#include "excurse/error.hpp"
#include "excurse/grid.hpp"

namespace excurse {

namespace {

constexpr double kPi = std::numbers::pi;

struct LinearData {
    Mat2 m;
};
struct TensorialData {
    ScalarFunction t1, t2;
};
struct SpiralData {
    SpiralSpec spec;
};
struct CompositeData {
    std::vector<Deformation> parts;
};
struct CustomData {
    Deformation::Map map;
    std::optional<Deformation::JacobianMap> jacobian;
    std::string description;
};

std::string fmt(double x) { return format_double(x); }

std::string describe(const ScalarFunction& f) { return f.description.empty() ? "<callable>" : f.description; }

/// Solves F(x) = y for a monotone F, starting from a bracket around 0 (or
/// [0, 1] when `nonnegative`).
double solve_monotone(const ScalarFunction& F, double y, bool nonnegative) {
    double lo = nonnegative ? 0.0 : -1.0, hi = 1.0;
    const bool increasing = F(hi) >= F(lo);
    auto below = [&](double x) { return increasing ? F(x) < y : F(x) > y; };
    for (int k = 0; k < 200 && below(hi); ++k) hi = 2.0 * hi + 1.0;
    if (!nonnegative)
        for (int k = 0; k < 200 && !below(lo); ++k) lo = 2.0 * lo - 1.0;
    if (below(hi) || (!nonnegative && !below(lo) && F(lo) != y))
        throw NumericError("inverse: value " + fmt(y) + " is outside the range of " + describe(F));
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double fx = F(x) - y;
        if (fx == 0.0) return x;
        if ((fx < 0.0) == increasing) lo = x;
        else hi = x;
        const double d = F.derivative(x);
        double next = (d != 0.0 && std::isfinite(d)) ? x - fx / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * (1.0 + std::abs(x)) || hi - lo <= 1e-15 * (1.0 + std::abs(x)))
            return next;
        x = next;
    }
    return x;
}

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

}  // namespace

struct Deformation::Impl {
    std::variant<LinearData, TensorialData, SpiralData, CompositeData, CustomData> data;
};

ScalarFunction ScalarFunction::from_expression(const std::string& text) {
    return from_expression(Expression::parse(text));
}

ScalarFunction ScalarFunction::from_expression(const Expression& expr) {
    return {[expr](double x) { return expr(x); }, [expr](double x) { return expr.derivative(x); }, expr.text()};
}

ScalarFunction ScalarFunction::identity() {
    return {[](double x) { return x; }, [](double) { return 1.0; }, "r"};
}

ScalarFunction ScalarFunction::constant(double c) {
    return {[c](double) { return c; }, [](double) { return 0.0; }, fmt(c)};
}

ScalarFunction ScalarFunction::linear(double slope) {
    return {[slope](double x) { return slope * x; }, [slope](double) { return slope; }, fmt(slope) + "*r"};
}

void SpiralSpec::validate() const {
    if (!f.value || !f.derivative || !g.value || !g.derivative)
        throw DomainError("spiral: f and g need values and derivatives");
    double prev = 0.0;
    for (int k = 0; k <= 240; ++k) {
        const double r = std::pow(10.0, -6.0 + 12.0 * k / 240.0);
        const double v = f(r);
        if (std::isnan(v) || v <= 0.0)
            throw DomainError("spiral: f(" + fmt(r) + ") = " + fmt(v) + " is not positive");
        if (std::isinf(v)) break;
        if (k > 0 && !(v > prev))
            throw DomainError("spiral: f is not strictly increasing near r = " + fmt(r));
        prev = v;
        if (!std::isfinite(g(r))) throw DomainError("spiral: g(" + fmt(r) + ") is not finite");
    }
    const double f1 = f(1.0);
    if (!(f(1e-6) < 0.5 * f1)) throw DomainError("spiral: f does not tend to 0 at the origin");
    if (!(f(1e6) > 2.0 * f1)) throw DomainError("spiral: f does not grow without bound");
}

Vec2 from_polar(double r, double phi) { return {r * std::cos(phi), r * std::sin(phi)}; }

Vec2 to_polar(const Vec2& x) { return {x.norm(), std::atan2(x.y(), x.x())}; }

Mat2 rotation_matrix(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat2 m;
    m << c, -s, s, c;
    return m;
}

Deformation Deformation::identity() { return linear(Mat2::Identity()); }

Deformation Deformation::linear(const Mat2& m, const ProbeBox& box) {
    if (!m.allFinite()) throw DomainError("linear deformation: non-finite matrix entry");
    Deformation d(std::make_shared<Impl>(Impl{LinearData{m}}));
    d.validate(box);
    return d;
}

Deformation Deformation::rotation(double angle, double factor) {
    if (!(factor > 0.0)) throw DomainError("rotation: scale factor must be positive");
    return linear(factor * rotation_matrix(angle));
}

Deformation Deformation::tensorial(ScalarFunction theta1, ScalarFunction theta2, const ProbeBox& box) {
    if (!theta1.value || !theta1.derivative || !theta2.value || !theta2.derivative)
        throw DomainError("tensorial deformation: components need values and derivatives");
    Deformation d(std::make_shared<Impl>(Impl{TensorialData{std::move(theta1), std::move(theta2)}}));
    d.validate(box);
    return d;
}

Deformation Deformation::spiral(SpiralSpec spec, const ProbeBox& box) {
    spec.validate();
    Deformation d(std::make_shared<Impl>(Impl{SpiralData{std::move(spec)}}));
    d.validate(box);
    return d;
}

Deformation Deformation::composite(std::vector<Deformation> parts, const ProbeBox& box) {
    if (parts.empty()) throw DomainError("composite deformation: empty part list");
    Deformation d(std::make_shared<Impl>(Impl{CompositeData{std::move(parts)}}));
    d.validate(box);
    return d;
}

Deformation Deformation::custom(Map map, std::optional<JacobianMap> jacobian, std::string description,
                                const ProbeBox& box) {
    if (!map) throw DomainError("custom deformation: missing map");
    Deformation d(std::make_shared<Impl>(Impl{CustomData{std::move(map), std::move(jacobian), std::move(description)}}));
    d.validate(box);
    return d;
}

Deformation compose(const Deformation& outer, const Deformation& inner) {
    return Deformation::composite({outer, inner});
}

DeformationKind Deformation::kind() const {
    return static_cast<DeformationKind>(impl_->data.index());
}

std::string Deformation::description() const {
    struct V {
        std::string operator()(const LinearData& d) const {
            return "linear[[" + fmt(d.m(0, 0)) + "," + fmt(d.m(0, 1)) + "],[" + fmt(d.m(1, 0)) + "," +
                   fmt(d.m(1, 1)) + "]]";
        }
        std::string operator()(const TensorialData& d) const {
            return "tensorial(" + describe(d.t1) + "; " + describe(d.t2) + ")";
        }
        std::string operator()(const SpiralData& d) const {
            return "spiral(f=" + describe(d.spec.f) + "; g=" + describe(d.spec.g) + ")";
        }
        std::string operator()(const CompositeData& d) const {
            std::string s = "composite(";
            for (std::size_t k = 0; k < d.parts.size(); ++k) s += (k ? " o " : "") + d.parts[k].description();
            return s + ")";
        }
        std::string operator()(const CustomData& d) const { return d.description; }
    };
    return std::visit(V{}, impl_->data);
}

Vec2 Deformation::eval(const Vec2& x) const {
    struct V {
        const Vec2& x;
        Vec2 operator()(const LinearData& d) const { return d.m * x; }
        Vec2 operator()(const TensorialData& d) const { return {d.t1(x.x()), d.t2(x.y())}; }
        Vec2 operator()(const SpiralData& d) const {
            const double r = x.norm();
            if (r == 0.0) return Vec2::Zero();
            const double phi = std::atan2(x.y(), x.x());
            return from_polar(d.spec.f(r), d.spec.g(r) + phi);
        }
        Vec2 operator()(const CompositeData& d) const {
            Vec2 y = x;
            for (auto it = d.parts.rbegin(); it != d.parts.rend(); ++it) y = it->eval(y);
            return y;
        }
        Vec2 operator()(const CustomData& d) const { return d.map(x); }
    };
    return std::visit(V{x}, impl_->data);
}

Mat2 Deformation::jacobian_unchecked(const Vec2& x) const {
    struct V {
        const Vec2& x;
        Mat2 operator()(const LinearData& d) const { return d.m; }
        Mat2 operator()(const TensorialData& d) const {
            Mat2 j = Mat2::Zero();
            j(0, 0) = d.t1.derivative(x.x());
            j(1, 1) = d.t2.derivative(x.y());
            return j;
        }
        Mat2 operator()(const SpiralData& d) const {
            const double r = x.norm();
            if (r == 0.0) return d.spec.f.derivative(0.0) * rotation_matrix(d.spec.g(0.0));
            const double phi = std::atan2(x.y(), x.x());
            const double fr = d.spec.f(r), df = d.spec.f.derivative(r), dg = d.spec.g.derivative(r);
            const double a = d.spec.g(r) + phi;
            const Vec2 u(std::cos(a), std::sin(a)), v(-std::sin(a), std::cos(a));
            const Vec2 er(std::cos(phi), std::sin(phi)), ephi(-std::sin(phi), std::cos(phi));
            return (df * u + fr * dg * v) * er.transpose() + (fr / r) * v * ephi.transpose();
        }
        Mat2 operator()(const CompositeData& d) const {
            Mat2 j = Mat2::Identity();
            Vec2 y = x;
            for (auto it = d.parts.rbegin(); it != d.parts.rend(); ++it) {
                j = it->jacobian_unchecked(y) * j;
                y = it->eval(y);
            }
            return j;
        }
        Mat2 operator()(const CustomData& d) const {
            if (d.jacobian) return (*d.jacobian)(x);
            const double h = 1e-5 * (1.0 + x.norm());
            Mat2 j;
            for (int c = 0; c < 2; ++c) {
                Vec2 e = Vec2::Zero();
                e[c] = h;
                j.col(c) = (d.map(x + e) - d.map(x - e)) / (2.0 * h);
            }
            return j;
        }
    };
    return std::visit(V{x}, impl_->data);
}

Mat2 Deformation::jacobian(const Vec2& x) const {
    const Mat2 j = jacobian_unchecked(x);
    const double det = j.determinant();
    if (!(det > 0.0))
        throw DomainError("deformation " + description() + ": det J = " + fmt(det) + " at (" + fmt(x.x()) + ", " +
                          fmt(x.y()) + ")");
    return j;
}

Vec2 Deformation::inverse(const Vec2& y) const {
    struct V {
        const Deformation& self;
        const Vec2& y;
        Vec2 operator()(const LinearData& d) const { return d.m.partialPivLu().solve(y); }
        Vec2 operator()(const TensorialData& d) const {
            return {solve_monotone(d.t1, y.x(), false), solve_monotone(d.t2, y.y(), false)};
        }
        Vec2 operator()(const SpiralData& d) const {
            const double rho = y.norm();
            if (rho == 0.0) return Vec2::Zero();
            const double r = solve_monotone(d.spec.f, rho, true);
            return from_polar(r, std::atan2(y.y(), y.x()) - d.spec.g(r));
        }
        Vec2 operator()(const CompositeData& d) const {
            Vec2 x = y;
            for (const Deformation& p : d.parts) x = p.inverse(x);
            return x;
        }
        Vec2 operator()(const CustomData&) const {
            Vec2 x = y;
            for (int iter = 0; iter < 100; ++iter) {
                const Vec2 r = self.eval(x) - y;
                if (r.norm() <= 1e-13 * (1.0 + y.norm())) return x;
                Vec2 step = self.jacobian_unchecked(x).partialPivLu().solve(r);
                double lambda = 1.0;
                while (lambda > 1e-6 && (self.eval(x - lambda * step) - y).norm() > r.norm()) lambda *= 0.5;
                x -= lambda * step;
            }
            if ((self.eval(x) - y).norm() > 1e-9 * (1.0 + y.norm()))
                throw NumericError("inverse of " + self.description() + " did not converge");
            return x;
        }
    };
    return std::visit(V{*this, y}, impl_->data);
}

Vec2 Deformation::polar(double r, double phi) const {
    if (const auto* s = std::get_if<SpiralData>(&impl_->data))
        return {s->spec.f(r), wrap_angle(s->spec.g(r) + phi)};
    return to_polar(eval(from_polar(r, phi)));
}

std::optional<Mat2> Deformation::matrix() const {
    if (const auto* l = std::get_if<LinearData>(&impl_->data)) return l->m;
    return std::nullopt;
}

const SpiralSpec* Deformation::spiral_spec() const {
    if (const auto* s = std::get_if<SpiralData>(&impl_->data)) return &s->spec;
    return nullptr;
}

const std::vector<Deformation>& Deformation::parts() const {
    static const std::vector<Deformation> none;
    if (const auto* c = std::get_if<CompositeData>(&impl_->data)) return c->parts;
    return none;
}

void Deformation::validate(const ProbeBox& box) const {
    const Vec2 origin_image = eval(Vec2::Zero());
    if (!origin_image.allFinite() || origin_image.norm() > 1e-12)
        throw DomainError("deformation " + description() + " does not fix the origin");
    constexpr int kProbe = 32;
    const Vec2 step = (box.upper - box.lower) / kProbe;
    for (int i = 0; i < kProbe; ++i)
        for (int j = 0; j < kProbe; ++j) {
            const Vec2 x = box.lower + Vec2((j + 0.5) * step.x(), (i + 0.5) * step.y());
            jacobian(x);
        }
}

JacobianSummary jacobian_summary(const Deformation& theta, const Vec2& x) {
    const Mat2 j = theta.jacobian(x);
    return {j.col(0).norm(), j.col(1).norm(), j.determinant()};
}

SpiralDiagnostics is_spiral(const Deformation& theta, double box_radius, double tol) {
    if (!(tol > 0.0)) throw DomainError("is_spiral: tolerance must be positive");
    if (!(box_radius > 0.0)) throw DomainError("is_spiral: box radius must be positive");
    constexpr int kRadii = 16, kAngles = 64;
    SpiralDiagnostics diag;
    for (int k = 0; k < kRadii; ++k) {
        const double r = box_radius * std::pow(10.0, -3.0 * (kRadii - 1 - k) / (kRadii - 1));
        double lo[3], hi[3], sum[3] = {0, 0, 0};
        std::fill(lo, lo + 3, INFINITY);
        std::fill(hi, hi + 3, -INFINITY);
        for (int m = 0; m < kAngles; ++m) {
            const double phi = -kPi + 2.0 * kPi * m / kAngles;
            const Vec2 er(std::cos(phi), std::sin(phi)), ephi(-std::sin(phi), std::cos(phi));
            const Mat2 j = theta.jacobian_unchecked(r * er);
            const double q[3] = {(j * er).squaredNorm(), r * r * (j * ephi).squaredNorm(), r * j.determinant()};
            for (int c = 0; c < 3; ++c) {
                lo[c] = std::min(lo[c], q[c]);
                hi[c] = std::max(hi[c], q[c]);
                sum[c] += q[c];
            }
            const Eigen::JacobiSVD<Mat2> svd(j);
            const double s0 = svd.singularValues()(0), s1 = svd.singularValues()(1);
            diag.max_distortion = std::max(diag.max_distortion, s1 > 0.0 ? s0 / s1 : INFINITY);
        }
        for (int c = 0; c < 3; ++c) {
            const double scale = std::max(std::abs(sum[c] / kAngles), 1e-300);
            const double range = (hi[c] - lo[c]) / scale;
            if (range > diag.worst_range || (k == 0 && c == 0)) {
                diag.worst_range = range;
                diag.worst_r = r;
                diag.worst_quantity = c;
            }
        }
    }
    diag.is_spiral = diag.worst_range <= tol;
    return diag;
}

Rect Rect::make(double s, double t, double rotation, const Vec2& translation) {
    if (!std::isfinite(s) || !std::isfinite(t) || s == 0.0 || t == 0.0)
        throw DomainError("rectangle sides must be finite and nonzero");
    Rect r;
    r.lower = Vec2(std::min(s, 0.0), std::min(t, 0.0)) + translation;
    r.extent = Vec2(std::abs(s), std::abs(t));
    r.rotation = rotation;
    return r;
}

Mat2 Rect::frame() const { return rotation_matrix(rotation); }

Vec2 Rect::map(double u, double v) const { return frame() * (lower + Vec2(u, v)); }

QuadratureResult image_area_detail(const Deformation& theta, const Rect& rect, const QuadratureOptions& options) {
    const Mat2 frame = rect.frame();
    auto integrand = [&](double u, double v) {
        return std::abs(theta.jacobian_unchecked(frame * (rect.lower + Vec2(u, v))).determinant());
    };
    return integrate_2d(integrand, 0.0, rect.extent.x(), 0.0, rect.extent.y(), options);
}

double image_area(const Deformation& theta, const Rect& rect, const QuadratureOptions& options) {
    return image_area_detail(theta, rect, options).value;
}

double image_length(const Deformation& theta, const Segment& segment, const QuadratureOptions& options) {
    const double len = segment.length();
    if (!(len > 0.0)) throw DomainError("segment endpoints must differ");
    const Vec2 dir = (segment.b - segment.a) / len;
    auto integrand = [&](double tau) { return (theta.jacobian_unchecked(segment.a + tau * dir) * dir).norm(); };
    return integrate(integrand, 0.0, len, options).value;
}

double image_perimeter(const Deformation& theta, const Rect& rect, const QuadratureOptions& options) {
    const Vec2 c00 = rect.map(0, 0), c10 = rect.map(rect.extent.x(), 0);
    const Vec2 c11 = rect.map(rect.extent.x(), rect.extent.y()), c01 = rect.map(0, rect.extent.y());
    return image_length(theta, {c00, c10}, options) + image_length(theta, {c10, c11}, options) +
           image_length(theta, {c11, c01}, options) + image_length(theta, {c01, c00}, options);
}

}  // namespace excurse
