#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "excurse/expression.hpp"
#include "excurse/quadrature.hpp"
#include "excurse/types.hpp"

namespace excurse {

/// Real function of one variable with its derivative.
struct ScalarFunction {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
    std::string description;

    double operator()(double x) const { return value(x); }

    static ScalarFunction from_expression(const std::string& text);
    static ScalarFunction from_expression(const Expression& expr);
    static ScalarFunction identity();
    static ScalarFunction constant(double c);
    static ScalarFunction linear(double slope);
};

/// Polar form (r, phi) -> (f(r), g(r) + phi) of a spiral deformation.
struct SpiralSpec {
    ScalarFunction f;
    ScalarFunction g;

    /// Checks positivity and strict monotonicity of f on a log-spaced probe
    /// grid, f -> 0 at 0 and growth at infinity. Throws DomainError.
    void validate() const;
};

/// Axis-aligned box on which a deformation is probed for det J > 0.
struct ProbeBox {
    Vec2 lower{-10.0, -10.0};
    Vec2 upper{10.0, 10.0};
};

enum class DeformationKind { Linear, Tensorial, Spiral, Composite, Custom };

/// Orientation-preserving plane diffeomorphism with theta(0) = 0. Values are
/// immutable and cheap to copy.
class Deformation {
public:
    using Map = std::function<Vec2(const Vec2&)>;
    using JacobianMap = std::function<Mat2(const Vec2&)>;

    static Deformation identity();
    static Deformation linear(const Mat2& m, const ProbeBox& box = {});
    /// Rotation by `angle` scaled by `factor`.
    static Deformation rotation(double angle, double factor = 1.0);
    static Deformation tensorial(ScalarFunction theta1, ScalarFunction theta2, const ProbeBox& box = {});
    static Deformation spiral(SpiralSpec spec, const ProbeBox& box = {});
    /// parts = {eta, theta} gives eta o theta: applied right to left.
    static Deformation composite(std::vector<Deformation> parts, const ProbeBox& box = {});
    /// Without a Jacobian callback, central differences with step
    /// 1e-5 (1 + |x|) are used. Callbacks must be reentrant.
    static Deformation custom(Map map, std::optional<JacobianMap> jacobian = std::nullopt,
                              std::string description = "custom", const ProbeBox& box = {});

    DeformationKind kind() const;
    std::string description() const;

    Vec2 eval(const Vec2& x) const;
    Vec2 operator()(const Vec2& x) const { return eval(x); }
    /// Throws DomainError when det J(x) <= 0.
    Mat2 jacobian(const Vec2& x) const;
    Mat2 jacobian_unchecked(const Vec2& x) const;
    /// theta^{-1}(y); throws NumericError when the solve fails.
    Vec2 inverse(const Vec2& y) const;

    /// Polar representation theta_hat(r, phi) = S^{-1}(theta(S(r, phi))),
    /// angle in (-pi, pi]. Exact for spirals.
    Vec2 polar(double r, double phi) const;

    std::optional<Mat2> matrix() const;
    const SpiralSpec* spiral_spec() const;
    const std::vector<Deformation>& parts() const;

    /// det J > 0 on a 32 x 32 cell-centred lattice over the box, theta(0) = 0.
    void validate(const ProbeBox& box) const;

    struct Impl;

private:
    explicit Deformation(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

Deformation compose(const Deformation& outer, const Deformation& inner);

/// Column norms and determinant of J at x.
struct JacobianSummary {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};
JacobianSummary jacobian_summary(const Deformation& theta, const Vec2& x);

struct SpiralDiagnostics {
    bool is_spiral = false;
    /// Probe radius and relative range across phi of the worst quantity.
    double worst_r = 0.0;
    double worst_range = 0.0;
    int worst_quantity = 0;
    /// Largest ratio of singular values of J over the probes.
    double max_distortion = 1.0;
};

/// Radiality test of |d_r theta|^2, |d_phi theta|^2 and r det J on 16
/// log-spaced radii in (0, box_radius] times 64 angles.
SpiralDiagnostics is_spiral(const Deformation& theta, double box_radius = 10.0, double tol = 1e-6);

struct Segment {
    Vec2 a{0.0, 0.0};
    Vec2 b{1.0, 0.0};

    double length() const { return (b - a).norm(); }
};

/// Rectangle rho_rotation(T(s, t) + translation), with T(s, t) = [0,s] x [0,t]
/// for signed s, t, stored normalized as lower corner plus positive extents.
struct Rect {
    Vec2 lower{0.0, 0.0};
    Vec2 extent{1.0, 1.0};
    double rotation = 0.0;

    static Rect make(double s, double t, double rotation = 0.0, const Vec2& translation = Vec2::Zero());

    /// Point at local offset (u, v), 0 <= u <= extent.x, 0 <= v <= extent.y.
    Vec2 map(double u, double v) const;
    Mat2 frame() const;
    double area() const { return extent.x() * extent.y(); }
    double perimeter() const { return 2.0 * (extent.x() + extent.y()); }
};

QuadratureResult image_area_detail(const Deformation& theta, const Rect& rect, const QuadratureOptions& options = {});
double image_area(const Deformation& theta, const Rect& rect, const QuadratureOptions& options = {});
double image_perimeter(const Deformation& theta, const Rect& rect, const QuadratureOptions& options = {});
double image_length(const Deformation& theta, const Segment& segment, const QuadratureOptions& options = {});

Vec2 from_polar(double r, double phi);
/// (r, phi) with phi in (-pi, pi].
Vec2 to_polar(const Vec2& x);
Mat2 rotation_matrix(double angle);

}  // namespace excurse
