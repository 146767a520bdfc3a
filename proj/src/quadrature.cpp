#include "excurse/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "excurse/error.hpp"

namespace excurse {

namespace {

constexpr int kBaseOrder = 10;

struct Rule {
    std::vector<double> nodes, weights;
};

Rule compute_rule(int n) {
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = r.weights[n - 1 - i] = w;
    }
    return r;
}

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

double apply_rule(const std::function<double(double)>& f, double a, double b, const GaussLegendreRule& rule,
                  int& evals) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) sum += rule.weights[k] * f(mid + half * rule.nodes[k]);
    evals += static_cast<int>(rule.nodes.size());
    return half * sum;
}

Panel make_panel(const std::function<double(double)>& f, double a, double b, const GaussLegendreRule& rule,
                 int& evals) {
    const double coarse = apply_rule(f, a, b, rule, evals);
    const double mid = 0.5 * (a + b);
    const double fine = apply_rule(f, a, mid, rule, evals) + apply_rule(f, mid, b, rule, evals);
    return {a, b, fine, std::abs(fine - coarse)};
}

}  // namespace

GaussLegendreRule gauss_legendre(int n) {
    if (n < 1 || n > 256) throw DomainError("Gauss-Legendre order must lie in [1, 256]");
    static std::mutex mutex;
    static std::map<int, Rule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_rule(n)).first;
    return {it->second.nodes, it->second.weights};
}

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& options) {
    if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("integration limits must be finite");
    if (a == b) return {};
    const GaussLegendreRule rule = gauss_legendre(kBaseOrder);
    QuadratureResult res;
    std::vector<Panel> panels{make_panel(f, a, b, rule, res.evaluations)};
    double total = panels[0].value, error = panels[0].error;
    while (error > std::max(options.abs_tol, options.rel_tol * std::abs(total))) {
        if (static_cast<int>(panels.size()) >= options.max_intervals)
            throw NumericError("quadrature did not converge: achieved error " + std::to_string(error) +
                               " on value " + std::to_string(total));
        std::pop_heap(panels.begin(), panels.end());
        const Panel worst = panels.back();
        panels.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        panels.push_back(make_panel(f, worst.a, mid, rule, res.evaluations));
        std::push_heap(panels.begin(), panels.end());
        panels.push_back(make_panel(f, mid, worst.b, rule, res.evaluations));
        std::push_heap(panels.begin(), panels.end());
        // Re-sum to avoid drift from repeated subtraction.
        total = 0.0;
        error = 0.0;
        for (const Panel& p : panels) {
            total += p.value;
            error += p.error;
        }
    }
    res.value = total;
    res.error = error;
    return res;
}

QuadratureResult integrate_2d(const std::function<double(double, double)>& f, double ax, double bx, double ay,
                              double by, const QuadratureOptions& options) {
    QuadratureOptions inner = options;
    inner.rel_tol = options.rel_tol * 0.1;
    inner.abs_tol = options.abs_tol * 0.1;
    double inner_error = 0.0;
    int evals = 0;
    auto row = [&](double x) {
        const QuadratureResult r = integrate([&](double y) { return f(x, y); }, ay, by, inner);
        inner_error = std::max(inner_error, r.error);
        evals += r.evaluations;
        return r.value;
    };
    QuadratureResult outer = integrate(row, ax, bx, options);
    outer.error += inner_error * std::abs(bx - ax);
    outer.evaluations = evals;
    return outer;
}

}  // namespace excurse
