#pragma once

#include <array>
#include <complex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "excurse/deform.hpp"
#include "excurse/mean_table.hpp"

namespace excurse {

/// Length |theta(T)|_1 from a mean modified Euler characteristic of a curve.
double invert_phi_1d(double mean_phi, double u);
/// Area |theta(T)|_2 from a mean modified Euler characteristic; u != 0.
double invert_phi_2d(double mean_phi, double u);

/// Inverted measure with its propagated standard error. `flagged` is set
/// when the mean is negative by more than three standard errors.
struct Measure {
    double value = 0.0;
    double std_err = 0.0;
    bool flagged = false;
};
Measure invert_entry_1d(const TableEntry& entry, double u);
Measure invert_entry_2d(const TableEntry& entry, double u);

/// The two upper-triangular representatives [[a, +-sqrt(b^2 - (c/a)^2)],
/// [0, c/a]] of the matrices with column norms a, b and determinant c.
struct MatrixClass {
    double a = 0.0, b = 0.0, c = 0.0;
    std::array<Mat2, 2> representatives;

    /// Throws DomainError when b^2 < (c/a)^2 beyond rounding.
    static MatrixClass from_abc(double a, double b, double c);
    /// True when m has column norms a, b and determinant c, i.e. m equals
    /// rho * representative for a rotation rho.
    bool contains(const Mat2& m, double tol = 1e-10) const;
};

/// The two conjugate values (a^2 - b^2 +- 2i sqrt(a^2 b^2 - c^2)) /
/// (a^2 + b^2 + 2c) of the complex dilatation.
struct DilatationCandidates {
    std::array<std::complex<double>, 2> values;
    double modulus = 0.0;
};
DilatationCandidates dilatation(double a, double b, double c);

/// d_zbar theta / d_z theta for the linear map J.
std::complex<double> beltrami_coefficient(const Mat2& j);

struct LinearIdentification {
    JacobianSummary abc;
    MatrixClass matrices;
    DilatationCandidates mu;
    /// Angle between the columns: arcsin(c/ab) and pi - arcsin(c/ab).
    std::array<double, 2> delta{};
    std::array<double, 3> std_err{};
};

/// Uses the entries hseg(s,0), vseg(0,t) and rect(s,t) at level u.
LinearIdentification identify_linear(const MeanECTable& table, double s, double t, double u);

struct ABCNode {
    double s = 0.0, t = 0.0;
    double a = 0.0, b = 0.0, c = 0.0;
    /// Propagated statistical errors.
    double err_a = 0.0, err_b = 0.0, err_c = 0.0;
    /// Finite-difference truncation estimates, |D_h - D_2h| / 15.
    double trunc_a = 0.0, trunc_b = 0.0, trunc_c = 0.0;
    bool flagged = false;
};

/// (a, b, c) on sigma x sigma, row-major with s varying fastest.
struct ABCField {
    std::vector<double> sigma;
    std::vector<ABCNode> nodes;

    const ABCNode& at(std::size_t i_s, std::size_t i_t) const { return nodes[i_t * sigma.size() + i_s]; }

    /// Columns s,t,a,b,c,err_a,err_b,err_c.
    void write_csv(std::ostream& out, const std::string& config_hash) const;
};

/// Requires a uniform partition with at least 5 nodes and, for every (s, t)
/// in sigma^2 with the relevant coordinates nonzero, the entries hseg(s,t),
/// vseg(s,t) and rect(s,t). Entries with a zero side are taken as 0.
ABCField recover_abc_field(const MeanECTable& table, std::span<const double> sigma, double u);

/// First derivative at node `index` of samples on a uniform grid of step h,
/// by the five-point stencil centred as far as the grid allows. `stride`
/// selects every stride-th node.
double fd_derivative(std::span<const double> values, std::size_t index, double h, std::size_t stride = 1);

struct TensorialIdentification {
    std::vector<double> sigma;
    std::vector<double> d1, d2;  // |theta_1'|, |theta_2'| on sigma
    std::vector<double> err1, err2;
    /// Reconstructions sign * signed cumulative length; empty without signs.
    std::vector<double> theta1, theta2;
    bool magnitudes_only = true;
};

/// Uses hseg(s,0) and vseg(0,s) for s in sigma.
TensorialIdentification identify_tensorial(const MeanECTable& table, std::span<const double> sigma, double u,
                                           std::optional<std::array<int, 2>> signs = std::nullopt);

struct PowerLawFit {
    double alpha = 1.0;
    double slope = 0.0;
    double intercept = 0.0;
    /// |exp(intercept) - |alpha||, the consistency of the intercept.
    double intercept_residual = 0.0;
    double rms_residual = 0.0;
    bool constant = false;
};

/// Least-squares line through (log s, log |theta'(s)|); alpha = slope + 1.
PowerLawFit fit_power_law(std::span<const double> s, std::span<const double> derivative);

enum class IsotropyMode { Analytic, Jacobian };

struct IsotropyReport {
    IsotropyMode mode = IsotropyMode::Analytic;
    bool pass = false;
    double max_deviation = 0.0;
    double worst_angle = 0.0;
    double tolerance = 0.0;
    /// Per-angle values (expected chi in analytic mode, worst relative
    /// Jacobian deviation in Jacobian mode).
    std::vector<double> values;
};

/// Analytic mode compares expected_chi_2d over rho_alpha(rect) with the
/// unrotated rectangle; Jacobian mode compares column norms and determinant
/// of J_{theta o rho}(x) and J_theta(x) on a 16 x 16 probe lattice of rect.
/// A negative tolerance selects the default (1e-6 analytic, 1e-8 Jacobian).
IsotropyReport chi_isotropy_test(const Deformation& theta, const Rect& rect, std::span<const double> angles, double u,
                                 IsotropyMode mode = IsotropyMode::Analytic, double tol = -1.0);

}  // namespace excurse
