#include "excurse/identify.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "excurse/covariance.hpp"
#include "excurse/csv.hpp"
#include "excurse/error.hpp"

namespace excurse {

namespace {

constexpr double kPi = std::numbers::pi;
const double kTwoPi32 = std::pow(2.0 * kPi, 1.5);

struct Stencil {
    std::array<double, 5> w{};
    long first = 0;  // offset of the first node, in strides
};

Stencil make_stencil(std::size_t index, std::size_t size, std::size_t stride) {
    const long below = static_cast<long>(index / stride);
    const long above = static_cast<long>((size - 1 - index) / stride);
    if (below + above < 4) throw DomainError("finite differences need at least 5 nodes");
    long lo = std::max(-2L, -below);
    lo = std::min(lo, above - 4);
    Eigen::Matrix<double, 5, 5> v;
    Eigen::Matrix<double, 5, 1> rhs = Eigen::Matrix<double, 5, 1>::Zero();
    rhs(1) = 1.0;
    for (int p = 0; p < 5; ++p)
        for (int j = 0; j < 5; ++j) v(p, j) = std::pow(static_cast<double>(lo + j), p);
    const Eigen::Matrix<double, 5, 1> w = v.fullPivLu().solve(rhs);
    Stencil st;
    for (int j = 0; j < 5; ++j) st.w[j] = w(j);
    st.first = lo;
    return st;
}

bool has_stencil(std::size_t index, std::size_t size, std::size_t stride) {
    return index / stride + (size - 1 - index) / stride >= 4;
}

bool is_uniform(std::span<const double> sigma, double& h) {
    if (sigma.size() < 2) return false;
    h = (sigma.back() - sigma.front()) / static_cast<double>(sigma.size() - 1);
    if (!(h > 0.0)) return false;
    for (std::size_t k = 0; k < sigma.size(); ++k)
        if (std::abs(sigma[k] - (sigma.front() + h * k)) > 1e-9 * h) return false;
    return true;
}

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

double invert_phi_1d(double mean_phi, double u) {
    if (!std::isfinite(u) || !std::isfinite(mean_phi)) throw DomainError("invert_phi_1d: non-finite input");
    return mean_phi * 2.0 * kPi * std::exp(0.5 * u * u);
}

double invert_phi_2d(double mean_phi, double u) {
    if (!std::isfinite(u) || !std::isfinite(mean_phi)) throw DomainError("invert_phi_2d: non-finite input");
    if (u == 0.0) throw DomainError("invert_phi_2d: the level u must be nonzero");
    return mean_phi * kTwoPi32 * std::exp(0.5 * u * u) / u;
}

Measure invert_entry_1d(const TableEntry& e, double u) {
    const double f = invert_phi_1d(1.0, u);
    return {e.mean_phi * f, e.std_err * f, e.mean_phi < -3.0 * e.std_err};
}

Measure invert_entry_2d(const TableEntry& e, double u) {
    const double f = invert_phi_2d(1.0, u);
    return {e.mean_phi * f, e.std_err * std::abs(f), e.mean_phi * sgn(u) < -3.0 * e.std_err};
}

MatrixClass MatrixClass::from_abc(double a, double b, double c) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("matrix class: column norms must be positive");
    const double off2 = b * b - (c / a) * (c / a);
    if (off2 < -1e-12 * b * b)
        throw DomainError("matrix class: inconsistent (a, b, c), c exceeds a * b");
    const double off = std::sqrt(std::max(0.0, off2));
    MatrixClass m;
    m.a = a;
    m.b = b;
    m.c = c;
    m.representatives[0] << a, off, 0.0, c / a;
    m.representatives[1] << a, -off, 0.0, c / a;
    return m;
}

bool MatrixClass::contains(const Mat2& m, double tol) const {
    auto close = [tol](double x, double y) { return std::abs(x - y) <= tol * std::max(1.0, std::abs(y)); };
    return close(m.col(0).norm(), a) && close(m.col(1).norm(), b) && close(m.determinant(), c);
}

DilatationCandidates dilatation(double a, double b, double c) {
    if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0)) throw DomainError("dilatation: a, b and c must be positive");
    const double ab = a * b;
    const double disc = (ab - c) * (ab + c);
    if (disc < -1e-12 * ab * ab) throw DomainError("dilatation: c exceeds a * b");
    const double im = 2.0 * std::sqrt(std::max(0.0, disc));
    const double re = (a - b) * (a + b);
    const double den = a * a + b * b + 2.0 * c;
    DilatationCandidates d;
    d.values[0] = {re / den, im / den};
    d.values[1] = {re / den, -im / den};
    d.modulus = std::abs(d.values[0]);
    return d;
}

std::complex<double> beltrami_coefficient(const Mat2& j) {
    // theta_z = (J11 + J22 + i (J21 - J12)) / 2, theta_zbar = (J11 - J22 + i (J21 + J12)) / 2.
    const std::complex<double> dz(j(0, 0) + j(1, 1), j(1, 0) - j(0, 1));
    const std::complex<double> dzbar(j(0, 0) - j(1, 1), j(1, 0) + j(0, 1));
    return dzbar / dz;
}

LinearIdentification identify_linear(const MeanECTable& table, double s, double t, double u) {
    if (s == 0.0 || t == 0.0) throw DomainError("identify_linear: s and t must be nonzero");
    if (u == 0.0) throw DomainError("identify_linear: the level u must be nonzero");
    const Measure len_s = invert_entry_1d(table.at(DomainKind::HSeg, s, 0.0, u), u);
    const Measure len_t = invert_entry_1d(table.at(DomainKind::VSeg, 0.0, t, u), u);
    const Measure area = invert_entry_2d(table.at(DomainKind::Rect, s, t, u), u);
    LinearIdentification r;
    r.abc = {len_s.value / std::abs(s), len_t.value / std::abs(t), area.value / std::abs(s * t)};
    r.std_err = {len_s.std_err / std::abs(s), len_t.std_err / std::abs(t), area.std_err / std::abs(s * t)};
    const double tol = 3.0 * std::hypot(r.std_err[2], r.abc.a * r.std_err[1] + r.abc.b * r.std_err[0]);
    if (r.abc.c > r.abc.a * r.abc.b + tol + 1e-12 * r.abc.a * r.abc.b)
        throw DomainError("identify_linear: inconsistent table, c = " + format_double(r.abc.c) + " exceeds a*b = " +
                          format_double(r.abc.a * r.abc.b));
    const double c = std::min(r.abc.c, r.abc.a * r.abc.b);
    r.matrices = MatrixClass::from_abc(r.abc.a, r.abc.b, c);
    r.mu = dilatation(r.abc.a, r.abc.b, c);
    const double d = std::asin(std::clamp(c / (r.abc.a * r.abc.b), -1.0, 1.0));
    r.delta = {d, kPi - d};
    return r;
}

double fd_derivative(std::span<const double> values, std::size_t index, double h, std::size_t stride) {
    const Stencil st = make_stencil(index, values.size(), stride);
    double sum = 0.0;
    for (int j = 0; j < 5; ++j)
        sum += st.w[j] * values[static_cast<std::size_t>(static_cast<long>(index) + (st.first + j) * static_cast<long>(stride))];
    return sum / (h * static_cast<double>(stride));
}

namespace {

/// Derivative, its propagated error and truncation estimate at one node.
struct FdResult {
    double value = 0.0, err = 0.0, trunc = 0.0;
};

FdResult differentiate(std::span<const double> v, std::span<const double> e, std::size_t index, double h) {
    FdResult r;
    const Stencil st = make_stencil(index, v.size(), 1);
    double var = 0.0;
    for (int j = 0; j < 5; ++j) {
        const auto k = static_cast<std::size_t>(static_cast<long>(index) + st.first + j);
        r.value += st.w[j] * v[k];
        var += st.w[j] * st.w[j] * e[k] * e[k];
    }
    r.value /= h;
    r.err = std::sqrt(var) / h;
    if (has_stencil(index, v.size(), 2)) r.trunc = std::abs(r.value - fd_derivative(v, index, h, 2)) / 15.0;
    else r.trunc = NAN;
    return r;
}

}  // namespace

ABCField recover_abc_field(const MeanECTable& table, std::span<const double> sigma, double u) {
    if (sigma.size() < 5) throw DomainError("recover_abc_field: the partition needs at least 5 nodes");
    double h = 0.0;
    if (!is_uniform(sigma, h)) throw DomainError("recover_abc_field: the partition must be uniform");
    if (u == 0.0) throw DomainError("recover_abc_field: the level u must be nonzero");
    const std::size_t n = sigma.size();
    auto idx = [n](std::size_t i_s, std::size_t i_t) { return i_t * n + i_s; };
    auto is_zero = [h](double x) { return std::abs(x) < 1e-9 * h; };

    // Signed cumulative measures: smooth through the axes.
    std::vector<double> lh(n * n), lh_e(n * n), lv(n * n), lv_e(n * n), ar(n * n), ar_e(n * n);
    std::vector<char> bad(n * n, 0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            const double s = sigma[i], t = sigma[j];
            const std::size_t k = idx(i, j);
            if (!is_zero(s)) {
                const Measure m = invert_entry_1d(table.at(DomainKind::HSeg, s, t, u), u);
                lh[k] = sgn(s) * m.value;
                lh_e[k] = m.std_err;
                bad[k] |= m.flagged;
            }
            if (!is_zero(t)) {
                const Measure m = invert_entry_1d(table.at(DomainKind::VSeg, s, t, u), u);
                lv[k] = sgn(t) * m.value;
                lv_e[k] = m.std_err;
                bad[k] |= m.flagged;
            }
            if (!is_zero(s) && !is_zero(t)) {
                const Measure m = invert_entry_2d(table.at(DomainKind::Rect, s, t, u), u);
                ar[k] = sgn(s) * sgn(t) * m.value;
                ar_e[k] = m.std_err;
                bad[k] |= m.flagged;
            }
        }

    ABCField field;
    field.sigma.assign(sigma.begin(), sigma.end());
    field.nodes.resize(n * n);

    // d/ds of the horizontal lengths along each row, d/dt of the vertical
    // lengths along each column; the area gets both.
    std::vector<double> row(n), row_e(n), ds_area(n * n), ds_area_e(n * n), ds_area_2h(n * n, NAN);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            row[i] = lh[idx(i, j)];
            row_e[i] = lh_e[idx(i, j)];
        }
        for (std::size_t i = 0; i < n; ++i) {
            const FdResult d = differentiate(row, row_e, i, h);
            ABCNode& node = field.nodes[idx(i, j)];
            node.a = d.value;
            node.err_a = d.err;
            node.trunc_a = d.trunc;
            if (i + 1 < n && row[i + 1] - row[i] < -3.0 * std::hypot(row_e[i], row_e[i + 1])) bad[idx(i, j)] = 1;
        }
        for (std::size_t i = 0; i < n; ++i) {
            row[i] = ar[idx(i, j)];
            row_e[i] = ar_e[idx(i, j)];
        }
        for (std::size_t i = 0; i < n; ++i) {
            const FdResult d = differentiate(row, row_e, i, h);
            ds_area[idx(i, j)] = d.value;
            ds_area_e[idx(i, j)] = d.err;
            if (has_stencil(i, n, 2)) ds_area_2h[idx(i, j)] = fd_derivative(row, i, h, 2);
        }
    }
    std::vector<double> col(n), col_e(n), col_2h(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            col[j] = lv[idx(i, j)];
            col_e[j] = lv_e[idx(i, j)];
        }
        for (std::size_t j = 0; j < n; ++j) {
            const FdResult d = differentiate(col, col_e, j, h);
            ABCNode& node = field.nodes[idx(i, j)];
            node.b = d.value;
            node.err_b = d.err;
            node.trunc_b = d.trunc;
            if (j + 1 < n && col[j + 1] - col[j] < -3.0 * std::hypot(col_e[j], col_e[j + 1])) bad[idx(i, j)] = 1;
        }
        for (std::size_t j = 0; j < n; ++j) {
            col[j] = ds_area[idx(i, j)];
            // Errors of neighbouring d/ds values are correlated only through
            // shared rows; rows are independent table entries.
            col_e[j] = ds_area_e[idx(i, j)];
            col_2h[j] = ds_area_2h[idx(i, j)];
        }
        for (std::size_t j = 0; j < n; ++j) {
            const FdResult d = differentiate(col, col_e, j, h);
            ABCNode& node = field.nodes[idx(i, j)];
            node.c = d.value;
            node.err_c = d.err;
            if (has_stencil(j, n, 2) && std::isfinite(col_2h[j])) {
                bool all = true;
                const Stencil st = make_stencil(j, n, 2);
                for (int q = 0; q < 5; ++q)
                    all &= std::isfinite(col_2h[static_cast<std::size_t>(static_cast<long>(j) + 2 * (st.first + q))]);
                node.trunc_c = all ? std::abs(d.value - fd_derivative(col_2h, j, h, 2)) / 15.0 : NAN;
            } else {
                node.trunc_c = NAN;
            }
        }
    }
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            ABCNode& node = field.nodes[idx(i, j)];
            node.s = sigma[i];
            node.t = sigma[j];
            auto noisy = [](double v, double e) { return e > 0.2 * std::abs(v); };
            node.flagged = bad[idx(i, j)] || noisy(node.a, node.err_a) || noisy(node.b, node.err_b) ||
                           noisy(node.c, node.err_c) || !(node.a > 0.0) || !(node.b > 0.0) ||
                           node.c > node.a * node.b + 3.0 * node.err_c + 1e-9 * node.a * node.b;
        }
    return field;
}

void ABCField::write_csv(std::ostream& out, const std::string& config_hash) const {
    CsvWriter w(out, config_hash, {"s", "t", "a", "b", "c", "err_a", "err_b", "err_c"});
    for (const ABCNode& n : nodes) {
        w.cell(n.s).cell(n.t).cell(n.a).cell(n.b).cell(n.c).cell(n.err_a).cell(n.err_b).cell(n.err_c);
        w.end_row();
    }
}

TensorialIdentification identify_tensorial(const MeanECTable& table, std::span<const double> sigma, double u,
                                           std::optional<std::array<int, 2>> signs) {
    if (sigma.size() < 5) throw DomainError("identify_tensorial: the partition needs at least 5 nodes");
    double h = 0.0;
    if (!is_uniform(sigma, h)) throw DomainError("identify_tensorial: the partition must be uniform");
    if (signs && (std::abs((*signs)[0]) != 1 || std::abs((*signs)[1]) != 1))
        throw DomainError("identify_tensorial: signs must be +1 or -1");
    const std::size_t n = sigma.size();
    std::vector<double> l1(n), e1(n), l2(n), e2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = sigma[i];
        if (std::abs(s) < 1e-9 * h) continue;
        const Measure m1 = invert_entry_1d(table.at(DomainKind::HSeg, s, 0.0, u), u);
        const Measure m2 = invert_entry_1d(table.at(DomainKind::VSeg, 0.0, s, u), u);
        l1[i] = sgn(s) * m1.value;
        e1[i] = m1.std_err;
        l2[i] = sgn(s) * m2.value;
        e2[i] = m2.std_err;
    }
    TensorialIdentification r;
    r.sigma.assign(sigma.begin(), sigma.end());
    for (std::size_t i = 0; i < n; ++i) {
        const FdResult d1 = differentiate(l1, e1, i, h);
        const FdResult d2 = differentiate(l2, e2, i, h);
        r.d1.push_back(d1.value);
        r.err1.push_back(d1.err);
        r.d2.push_back(d2.value);
        r.err2.push_back(d2.err);
    }
    if (signs) {
        r.magnitudes_only = false;
        for (std::size_t i = 0; i < n; ++i) {
            r.theta1.push_back((*signs)[0] * l1[i]);
            r.theta2.push_back((*signs)[1] * l2[i]);
        }
    }
    return r;
}

PowerLawFit fit_power_law(std::span<const double> s, std::span<const double> d) {
    if (s.size() != d.size() || s.size() < 2) throw DomainError("fit_power_law: need at least two paired samples");
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (!(s[k] > 0.0) || !(d[k] > 0.0)) throw DomainError("fit_power_law: samples must be positive");
        lo = std::min(lo, d[k]);
        hi = std::max(hi, d[k]);
    }
    PowerLawFit fit;
    if (hi - lo <= 1e-12 * hi) {
        fit.constant = true;
        fit.alpha = 1.0;
        fit.slope = 0.0;
        fit.intercept = std::log(lo);
        fit.intercept_residual = std::abs(lo - 1.0);
        return fit;
    }
    const std::size_t n = s.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += std::log(s[k]);
        my += std::log(d[k]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = std::log(s[k]) - mx, y = std::log(d[k]) - my;
        sxx += x * x;
        sxy += x * y;
    }
    if (!(sxx > 0.0)) throw DomainError("fit_power_law: abscissae must not all coincide");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.alpha = fit.slope + 1.0;
    fit.intercept_residual = std::abs(std::exp(fit.intercept) - std::abs(fit.alpha));
    double ss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double res = std::log(d[k]) - (fit.intercept + fit.slope * std::log(s[k]));
        ss += res * res;
    }
    fit.rms_residual = std::sqrt(ss / n);
    return fit;
}

IsotropyReport chi_isotropy_test(const Deformation& theta, const Rect& rect, std::span<const double> angles, double u,
                                 IsotropyMode mode, double tol) {
    if (angles.empty()) throw DomainError("chi_isotropy_test: no angles given");
    IsotropyReport rep;
    rep.mode = mode;
    rep.tolerance = tol >= 0.0 ? tol : (mode == IsotropyMode::Analytic ? 1e-6 : 1e-8);
    if (mode == IsotropyMode::Analytic) {
        QuadratureOptions q;
        q.rel_tol = 1e-11;
        auto chi = [&](const Rect& r) {
            return expected_chi_2d(image_area(theta, r, q), image_perimeter(theta, r, q), u);
        };
        const double ref = chi(rect);
        for (double alpha : angles) {
            Rect r = rect;
            r.rotation += alpha;
            const double v = chi(r);
            rep.values.push_back(v);
            const double dev = std::abs(v - ref) / std::max(std::abs(ref), 1e-300);
            if (dev > rep.max_deviation || rep.values.size() == 1) {
                rep.max_deviation = std::max(rep.max_deviation, dev);
                rep.worst_angle = alpha;
            }
        }
    } else {
        constexpr int kProbe = 16;
        for (double alpha : angles) {
            const Mat2 rho = rotation_matrix(alpha);
            double worst = 0.0;
            for (int i = 0; i < kProbe; ++i)
                for (int j = 0; j < kProbe; ++j) {
                    const Vec2 x = rect.map((j + 0.5) * rect.extent.x() / kProbe, (i + 0.5) * rect.extent.y() / kProbe);
                    const Mat2 j0 = theta.jacobian_unchecked(x);
                    const Mat2 jr = theta.jacobian_unchecked(rho * x) * rho;
                    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
                    worst = std::max({worst, rel(jr.col(0).norm(), j0.col(0).norm()),
                                      rel(jr.col(1).norm(), j0.col(1).norm()), rel(jr.determinant(), j0.determinant())});
                }
            rep.values.push_back(worst);
            if (worst > rep.max_deviation || rep.values.size() == 1) {
                rep.max_deviation = std::max(rep.max_deviation, worst);
                rep.worst_angle = alpha;
            }
        }
    }
    rep.pass = rep.max_deviation <= rep.tolerance;
    return rep;
}

}  // namespace excurse
