#include "excurse/field_sim.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>

#include "excurse/deform.hpp"
#include "excurse/error.hpp"
#include "excurse/rng.hpp"

namespace excurse {

namespace {

// The FFTW planner is not reentrant; execution on new arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)), size(n) {
        if (!data) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    fftw_complex* data;
    std::size_t size;
};

int signed_index(int k, int m) { return (k <= m / 2) ? k : k - m; }

}  // namespace

struct FieldSimulator::Plan {
    fftw_plan plan = nullptr;
    ~Plan() {
        if (plan) {
            std::lock_guard lock(planner_mutex());
            fftw_destroy_plan(plan);
        }
    }
};

int fft_friendly_size(int n) {
    for (int m = std::max(n, 1);; ++m) {
        int r = m;
        for (int p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

namespace {

/// Lag beyond which |C| stays below tol (the models are monotone in r).
double decay_range(const CovarianceModel& model, double tol) {
    double hi = 1.0;
    while (std::abs(model.radial(hi)) > tol && hi < 1e4) hi *= 2.0;
    double lo = 0.0;
    for (int k = 0; k < 60; ++k) {
        const double mid = 0.5 * (lo + hi);
        (std::abs(model.radial(mid)) > tol ? lo : hi) = mid;
    }
    return hi;
}

}  // namespace

FieldSimulator::FieldSimulator(GridSpec spec, CovarianceModel model, SimulationOptions options)
    : spec_(spec), model_(model), options_(options) {
    spec_.validate();
    if (options_.min_pad < 2.0) throw DomainError("circulant embedding needs a pad factor >= 2");

    const double h = spec_.spacing;
    const int reach = static_cast<int>(std::ceil(decay_range(model_, 1e-13) / h));
    std::vector<double> eig;
    int m_rows = 0, m_cols = 0;
    bool ok = false;
    for (double pad = options_.min_pad; pad <= options_.max_pad + 1e-12; pad = std::min(pad * 1.5, options_.max_pad + (pad < options_.max_pad ? 0.0 : 1.0))) {
        m_rows = fft_friendly_size(std::max(static_cast<int>(std::ceil(pad * spec_.rows)), 2 * reach));
        m_cols = fft_friendly_size(std::max(static_cast<int>(std::ceil(pad * spec_.cols)), 2 * reach));
        const std::size_t total = static_cast<std::size_t>(m_rows) * m_cols;
        FftwBuffer buf(total);
        for (int a = 0; a < m_rows; ++a) {
            const double dy = h * signed_index(a, m_rows);
            for (int b = 0; b < m_cols; ++b) {
                const double dx = h * signed_index(b, m_cols);
                auto& z = buf.data[static_cast<std::size_t>(a) * m_cols + b];
                z[0] = model_.evaluate(Vec2(dx, dy));
                z[1] = 0.0;
            }
        }
        {
            std::lock_guard lock(planner_mutex());
            fftw_plan p = fftw_plan_dft_2d(m_rows, m_cols, buf.data, buf.data, FFTW_FORWARD, FFTW_ESTIMATE);
            fftw_execute(p);
            fftw_destroy_plan(p);
        }
        eig.resize(total);
        double max_eig = 0.0, min_eig = 0.0;
        for (std::size_t k = 0; k < total; ++k) {
            eig[k] = buf.data[k][0];
            max_eig = std::max(max_eig, eig[k]);
            min_eig = std::min(min_eig, eig[k]);
        }
        report_.pad_factor = pad;
        report_.most_negative = (min_eig < 0.0) ? min_eig / max_eig : 0.0;
        if (min_eig >= -options_.negative_tolerance * max_eig) {
            ok = true;
            break;
        }
        if (pad >= options_.max_pad) break;
    }
    if (!ok)
        throw NumericError("circulant embedding of the " + model_.name() +
                           " covariance is not positive semidefinite up to pad factor " +
                           format_double(options_.max_pad));

    report_.torus_rows = m_rows;
    report_.torus_cols = m_cols;
    const std::size_t total = eig.size();
    const double inv_m = 1.0 / static_cast<double>(total);
    amplitude_.resize(total);
    for (std::size_t k = 0; k < total; ++k) {
        if (eig[k] < 0.0) {
            ++report_.clipped_eigenvalues;
            eig[k] = 0.0;
        }
        amplitude_[k] = std::sqrt(eig[k] * inv_m);
    }

    // The interpolant keeps the modes above the round-off floor of the
    // spectrum, minus those carrying a negligible part of the variance.
    const double floor = options_.mode_floor * *std::max_element(eig.begin(), eig.end());
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return eig[a] < eig[b]; });
    double dropped = 0.0;
    std::size_t first_kept = 0;
    while (first_kept < total && eig[order[first_kept]] <= floor) {
        dropped += eig[order[first_kept]] * inv_m;
        ++first_kept;
    }
    const double budget = dropped + options_.dropped_variance;
    while (first_kept < total && dropped + eig[order[first_kept]] * inv_m <= budget) {
        dropped += eig[order[first_kept]] * inv_m;
        ++first_kept;
    }
    report_.dropped_variance = dropped;
    kept_.assign(order.begin() + static_cast<std::ptrdiff_t>(first_kept), order.end());
    std::sort(kept_.begin(), kept_.end());
    report_.kept_modes = kept_.size();

    plan_ = std::make_unique<Plan>();
    FftwBuffer buf(total);
    std::lock_guard lock(planner_mutex());
    plan_->plan = fftw_plan_dft_2d(m_rows, m_cols, buf.data, buf.data, FFTW_BACKWARD, FFTW_ESTIMATE);
}

FieldSimulator::~FieldSimulator() = default;
FieldSimulator::FieldSimulator(FieldSimulator&&) noexcept = default;
FieldSimulator& FieldSimulator::operator=(FieldSimulator&&) noexcept = default;

std::vector<double> FieldSimulator::synthesize(std::uint64_t seed, std::vector<std::complex<double>>* kept,
                                               std::vector<double>* residual) const {
    const std::size_t total = amplitude_.size();
    FftwBuffer buf(total);
    Philox4x32 rng(seed);
    std::normal_distribution<double> normal;
    for (std::size_t k = 0; k < total; ++k) {
        const double re = normal(rng);
        const double im = normal(rng);
        buf.data[k][0] = amplitude_[k] * re;
        buf.data[k][1] = amplitude_[k] * im;
    }
    if (kept) {
        kept->clear();
        kept->reserve(kept_.size());
        for (std::size_t k : kept_) kept->emplace_back(buf.data[k][0], buf.data[k][1]);
    }
    fftw_execute_dft(plan_->plan, buf.data, buf.data);
    const int m_cols = report_.torus_cols;
    std::vector<double> out(spec_.size());
    for (int i = 0; i < spec_.rows; ++i)
        for (int j = 0; j < spec_.cols; ++j)
            out[static_cast<std::size_t>(i) * spec_.cols + j] = buf.data[static_cast<std::size_t>(i) * m_cols + j][0];
    if (kept && residual) {
        for (std::size_t k = 0; k < total; ++k) buf.data[k][0] = buf.data[k][1] = 0.0;
        for (std::size_t n = 0; n < kept_.size(); ++n) {
            buf.data[kept_[n]][0] = (*kept)[n].real();
            buf.data[kept_[n]][1] = (*kept)[n].imag();
        }
        fftw_execute_dft(plan_->plan, buf.data, buf.data);
        residual->resize(spec_.size());
        for (int i = 0; i < spec_.rows; ++i)
            for (int j = 0; j < spec_.cols; ++j) {
                const std::size_t n = static_cast<std::size_t>(i) * spec_.cols + j;
                (*residual)[n] = out[n] - buf.data[static_cast<std::size_t>(i) * m_cols + j][0];
            }
    }
    return out;
}

GridField FieldSimulator::simulate(std::uint64_t seed) const {
    GridField f;
    f.spec = spec_;
    f.seed = seed;
    f.model = model_;
    f.values = synthesize(seed, nullptr, nullptr);
    return f;
}

FieldSample FieldSimulator::simulate_sample(std::uint64_t seed) const {
    std::vector<std::complex<double>> coeff;
    FieldSample s;
    s.field_.spec = spec_;
    s.field_.seed = seed;
    s.field_.model = model_;
    s.field_.values = synthesize(seed, &coeff, &s.residual_);

    const int m_rows = report_.torus_rows, m_cols = report_.torus_cols;
    const double h = spec_.spacing;
    s.freq_x_.resize(m_cols);
    s.nyquist_x_.assign(m_cols, 0);
    for (int b = 0; b < m_cols; ++b) {
        s.freq_x_[b] = 2.0 * std::numbers::pi * signed_index(b, m_cols) / (m_cols * h);
        s.nyquist_x_[b] = (m_cols % 2 == 0 && b == m_cols / 2);
    }
    s.freq_y_.resize(m_rows);
    s.nyquist_y_.assign(m_rows, 0);
    for (int a = 0; a < m_rows; ++a) {
        s.freq_y_[a] = 2.0 * std::numbers::pi * signed_index(a, m_rows) / (m_rows * h);
        s.nyquist_y_[a] = (m_rows % 2 == 0 && a == m_rows / 2);
    }
    // kept_ is sorted by torus index, hence by row (ky).
    s.modes_.reserve(kept_.size());
    for (std::size_t n = 0; n < kept_.size(); ++n) {
        const auto a = static_cast<std::int32_t>(kept_[n] / m_cols);
        const auto b = static_cast<std::int32_t>(kept_[n] % m_cols);
        s.modes_.push_back({b, a, coeff[n]});
    }
    return s;
}

bool FieldSample::contains(const Vec2& p) const {
    const double tol = 1e-9 * field_.spec.spacing;
    const Vec2 lo = box_lower(), hi = box_upper();
    return p.x() >= lo.x() - tol && p.x() <= hi.x() + tol && p.y() >= lo.y() - tol && p.y() <= hi.y() + tol;
}

double FieldSample::evaluate(const Vec2& p, Interpolation mode) const {
    if (!p.allFinite() || !contains(p))
        throw DomainError("point (" + format_double(p.x()) + ", " + format_double(p.y()) +
                          ") lies outside the sampled box");
    return mode == Interpolation::Spectral ? spectral(p) : bilinear(p);
}

double FieldSample::spectral(const Vec2& p) const {
    const Vec2 d = p - field_.spec.origin;
    // Per-axis phase factors, computed lazily for the frequencies in use.
    thread_local std::vector<std::complex<double>> ex, ey;
    thread_local std::vector<char> have_x, have_y;
    ex.resize(freq_x_.size());
    ey.resize(freq_y_.size());
    have_x.assign(freq_x_.size(), 0);
    have_y.assign(freq_y_.size(), 0);
    auto factor = [](double w, double t, bool nyquist) {
        return nyquist ? std::complex<double>(std::cos(w * t), 0.0) : std::polar(1.0, w * t);
    };

    double total = 0.0;
    std::int32_t current_y = -1;
    std::complex<double> row_sum{0.0, 0.0};
    for (const Mode& m : modes_) {
        if (m.ky != current_y) {
            if (current_y >= 0) total += (ey[current_y] * row_sum).real();
            current_y = m.ky;
            if (!have_y[m.ky]) {
                ey[m.ky] = factor(freq_y_[m.ky], d.y(), nyquist_y_[m.ky]);
                have_y[m.ky] = 1;
            }
            row_sum = {0.0, 0.0};
        }
        if (!have_x[m.kx]) {
            ex[m.kx] = factor(freq_x_[m.kx], d.x(), nyquist_x_[m.kx]);
            have_x[m.kx] = 1;
        }
        row_sum += m.amplitude * ex[m.kx];
    }
    if (current_y >= 0) total += (ey[current_y] * row_sum).real();
    return total + interpolate(residual_, p);
}

double FieldSample::bilinear(const Vec2& p) const { return interpolate(field_.values, p); }

double FieldSample::interpolate(const std::vector<double>& values, const Vec2& p) const {
    const GridSpec& g = field_.spec;
    auto at = [&](int i, int j) { return values[static_cast<std::size_t>(i) * g.cols + j]; };
    const Vec2 q = (p - g.origin) / g.spacing;
    const int j = std::clamp(static_cast<int>(std::floor(q.x())), 0, g.cols - 2);
    const int i = std::clamp(static_cast<int>(std::floor(q.y())), 0, g.rows - 2);
    const double fx = std::clamp(q.x() - j, 0.0, 1.0);
    const double fy = std::clamp(q.y() - i, 0.0, 1.0);
    return (1 - fy) * ((1 - fx) * at(i, j) + fx * at(i, j + 1)) + fy * ((1 - fx) * at(i + 1, j) + fx * at(i + 1, j + 1));
}

GridField simulate(const GridSpec& spec, const CovarianceModel& model, std::uint64_t seed) {
    return FieldSimulator(spec, model).simulate(seed);
}

std::vector<double> sample_along(const FieldSample& sample, std::span<const Vec2> points, Interpolation mode) {
    std::vector<double> out;
    out.reserve(points.size());
    for (const Vec2& p : points) out.push_back(sample.evaluate(p, mode));
    return out;
}

GridField deformed_field(const FieldSample& sample, const Deformation& theta, const GridSpec& spec,
                         Interpolation mode) {
    spec.validate();
    GridField out;
    out.spec = spec;
    out.seed = sample.field().seed;
    out.model = sample.field().model;
    out.values.reserve(spec.size());
    for (int i = 0; i < spec.rows; ++i)
        for (int j = 0; j < spec.cols; ++j) out.values.push_back(sample.evaluate(theta.eval(spec.point(i, j)), mode));
    return out;
}

}  // namespace excurse
