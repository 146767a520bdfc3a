#include "excurse/spiral_est.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "excurse/covariance.hpp"
#include "excurse/csv.hpp"
#include "excurse/error.hpp"
#include "excurse/excursion.hpp"
#include "excurse/mean_table.hpp"
#include "excurse/parallel.hpp"
#include "excurse/rng.hpp"

namespace excurse {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMinPixels = 8;

/// Smallest image-space width of the sectors, radially and along the arc.
double sector_width(const Deformation& theta, const SectorFamily& f) {
    constexpr int kAngles = 64;
    double w = INFINITY;
    for (int m = 0; m < kAngles; ++m) {
        const double phi = f.phi0 + 2.0 * kPi * m / kAngles;
        const Vec2 inner = theta.eval(from_polar(f.r0, phi));
        w = std::min(w, (theta.eval(from_polar(f.outer(), phi)) - inner).norm());
        w = std::min(w, (theta.eval(from_polar(f.r0, phi + 2.0 * kPi / f.N)) - inner).norm());
        w = std::min(w, (theta.eval(from_polar(f.outer(), phi + 2.0 * kPi / f.N)) -
                         theta.eval(from_polar(f.outer(), phi))).norm());
    }
    return w;
}

/// Bounding box of theta over the annulus r0 <= r <= outer.
Box annulus_image_box(const Deformation& theta, double r0, double outer) {
    constexpr int kSteps = 2048;
    Box box{Vec2::Constant(INFINITY), Vec2::Constant(-INFINITY), 0.0};
    for (double r : {r0, outer})
        for (int m = 0; m < kSteps; ++m) {
            const Vec2 y = theta.eval(from_polar(r, 2.0 * kPi * m / kSteps));
            box.lower = box.lower.cwiseMin(y);
            box.upper = box.upper.cwiseMax(y);
        }
    return box;
}

}  // namespace

void SectorFamily::validate() const {
    if (!(r0 > 0.0) || !std::isfinite(r0)) throw DomainError("sector family: r0 must be positive");
    if (!std::isfinite(phi0)) throw DomainError("sector family: phi0 must be finite");
    if (N < 1) throw DomainError("sector family: N must be >= 1");
}

double SectorFamily::area() const { return (kPi / N) * (outer() * outer() - r0 * r0); }

int SectorFamily::sector_of(const Vec2& x) const {
    const double r = x.norm();
    if (!(r >= r0 && r < outer())) return -1;
    double rel = std::fmod(std::atan2(x.y(), x.x()) - phi0, 2.0 * kPi);
    if (rel < 0.0) rel += 2.0 * kPi;
    int k = static_cast<int>(std::floor(rel * N / (2.0 * kPi)));
    if (k >= N) k = 0;
    return k;
}

void SegmentFamily::validate() const {
    if (!base.allFinite()) throw DomainError("segment family: base point must be finite");
    if (N < 1) throw DomainError("segment family: N must be >= 1");
}

Segment SegmentFamily::segment(int k) const {
    const Mat2 rho = rotation_matrix(2.0 * kPi * k / N);
    return {rho * base, rho * (base + Vec2(1.0 / N, 0.0))};
}

SectorEstimator::SectorEstimator(const Deformation& theta, const SectorFamily& family, const GridSpec& lattice)
    : family_(family), lattice_(lattice) {
    family.validate();
    lattice.validate();
    const double h = lattice.spacing;
    const double width = sector_width(theta, family);
    if (width < kMinPixels * h * (1.0 - 1e-9))
        throw DomainError("sectors for N = " + std::to_string(family.N) + " are " + format_double(width / h) +
                          " pixels across; at least 8 are required");
    const Box box = annulus_image_box(theta, family.r0, family.outer());
    const Vec2 lo = lattice.lower() + Vec2::Constant(2.0 * h), hi = lattice.upper() - Vec2::Constant(2.0 * h);
    if ((box.lower.array() < lo.array()).any() || (box.upper.array() > hi.array()).any())
        throw DomainError("sectors for N = " + std::to_string(family.N) + " leave the sampled window");

    const SpiralSpec* spiral = theta.spiral_spec();
    const double band_lo = spiral ? spiral->f(family.r0) - h : 0.0;
    const double band_hi = spiral ? spiral->f(family.outer()) + h : INFINITY;
    const int j0 = std::max(1, static_cast<int>(std::floor((box.lower.x() - lattice.origin.x()) / h)) - 1);
    const int j1 = std::min(lattice.cols - 2, static_cast<int>(std::ceil((box.upper.x() - lattice.origin.x()) / h)) + 1);
    const int i0 = std::max(1, static_cast<int>(std::floor((box.lower.y() - lattice.origin.y()) / h)) - 1);
    const int i1 = std::min(lattice.rows - 2, static_cast<int>(std::ceil((box.upper.y() - lattice.origin.y()) / h)) + 1);
    for (int i = i0; i <= i1; ++i)
        for (int j = j0; j <= j1; ++j) {
            const Vec2 y = lattice.point(i, j);
            if (spiral) {
                const double r = y.norm();
                if (r < band_lo || r > band_hi) continue;
            }
            const int k = family.sector_of(theta.inverse(y));
            if (k < 0) continue;
            pixels_.push_back(static_cast<std::size_t>(i) * lattice.cols + j);
            sector_.push_back(k);
        }
}

std::vector<double> SectorEstimator::sector_values(const GridField& x, double u) const {
    if (x.spec.rows != lattice_.rows || x.spec.cols != lattice_.cols)
        throw DomainError("sector estimator: field lattice does not match");
    std::vector<double> out(family_.N, 0.0);
    for (std::size_t n = 0; n < pixels_.size(); ++n)
        out[sector_[n]] += critical_index(x.values, lattice_.cols, u, pixels_[n]);
    return out;
}

double SectorEstimator::evaluate(const GridField& x, double u) const {
    const auto v = sector_values(x, u);
    double sum = 0.0;
    for (double s : v) sum += s;
    return sum / family_.N;
}

double SectorEstimator::union_value(const GridField& x, double u) const {
    if (x.spec.rows != lattice_.rows || x.spec.cols != lattice_.cols)
        throw DomainError("sector estimator: field lattice does not match");
    ExcursionMask m = excursion_mask(x, u);
    m.domain.assign(m.bits.size(), 0);
    for (std::size_t p : pixels_) m.domain[p] = 1;
    return modified_euler_2d(m);
}

double z_estimator(const GridField& x, const Deformation& theta, const SectorFamily& family, double u) {
    return SectorEstimator(theta, family, x.spec).evaluate(x, u);
}

SegmentEstimator::SegmentEstimator(const Deformation& theta, const SegmentFamily& family, double step)
    : family_(family) {
    family.validate();
    const double len = family.length();
    if (step <= 0.0) step = len / kMinPixels;
    if (step > len / kMinPixels * (1.0 + 1e-12))
        throw DomainError("segment sampling step must be at most 1/(8N)");
    per_segment_ = static_cast<int>(std::ceil(len / step - 1e-9));
    for (int k = 0; k < family.N; ++k) {
        const Segment s = family.segment(k);
        const Vec2 d = (s.b - s.a) / per_segment_;
        for (int m = -1; m <= per_segment_; ++m) points_.push_back(theta.eval(s.a + (m + 0.5) * d));
    }
}

double SegmentEstimator::evaluate_values(std::span<const double> values, double u) const {
    const auto n = static_cast<std::size_t>(per_segment_ + 2);
    if (values.size() != n * family_.N) throw DomainError("segment estimator: wrong number of samples");
    double sum = 0.0;
    for (int k = 0; k < family_.N; ++k) sum += measure_samples_1d(values.subspan(k * n, n), u).phi_hat;
    return sum / family_.N;
}

double SegmentEstimator::evaluate(const std::function<double(const Vec2&)>& x, double u) const {
    std::vector<double> v;
    v.reserve(points_.size());
    for (const Vec2& p : points_) v.push_back(x(p));
    return evaluate_values(v, u);
}

double SegmentEstimator::evaluate(const FieldSample& x, double u) const {
    return evaluate_values(sample_along(x, points_), u);
}

double y_estimator(const FieldSample& x, const Deformation& theta, const SegmentFamily& family, double u) {
    return SegmentEstimator(theta, family).evaluate(x, u);
}

double detjac_constant(double u) { return rho(2, u); }

EstimatorRun run_spiral_estimation(const Deformation& theta, double r0, double phi0,
                                   const SpiralEstimationOptions& options) {
    if (options.schedule.empty()) throw DomainError("spiral estimation: empty N schedule");
    if (options.replications < 30) throw DomainError("spiral estimation: variance estimates need >= 30 replications");
    if (options.u == 0.0) throw DomainError("spiral estimation: the level u must be nonzero");
    std::set<int> distinct(options.schedule.begin(), options.schedule.end());
    if (distinct.size() != options.schedule.size()) throw DomainError("spiral estimation: repeated N in schedule");

    std::vector<SectorFamily> sectors;
    std::vector<SegmentFamily> segments;
    double width = INFINITY;
    for (int n : options.schedule) {
        sectors.push_back({r0, phi0, n});
        sectors.back().validate();
        segments.push_back({from_polar(r0, phi0), n});
        width = std::min(width, sector_width(theta, sectors.back()));
    }
    const double h = options.pixel > 0.0 ? options.pixel : width / kMinPixels * (1.0 - 1e-6);

    Box box{Vec2::Constant(INFINITY), Vec2::Constant(-INFINITY), 0.0};
    const int n_min = *std::min_element(options.schedule.begin(), options.schedule.end());
    const Box annulus = annulus_image_box(theta, r0, r0 + 1.0 / n_min);
    box.lower = annulus.lower;
    box.upper = annulus.upper;
    std::vector<SegmentEstimator> seg_est;
    if (options.segments)
        for (const auto& f : segments) {
            seg_est.emplace_back(theta, f);
            for (const Vec2& p : seg_est.back().points()) {
                box.lower = box.lower.cwiseMin(p);
                box.upper = box.upper.cwiseMax(p);
            }
        }
    GridSpec spec;
    spec.spacing = h;
    spec.origin = box.lower - Vec2::Constant(4.0 * h);
    spec.cols = static_cast<int>(std::ceil((box.upper.x() - box.lower.x()) / h)) + 9;
    spec.rows = static_cast<int>(std::ceil((box.upper.y() - box.lower.y()) / h)) + 9;

    std::vector<SectorEstimator> sec_est;
    for (const auto& f : sectors) sec_est.emplace_back(theta, f, spec);
    const FieldSimulator sim(spec, options.model);

    EstimatorRun run;
    run.r0 = r0;
    run.phi0 = phi0;
    run.u = options.u;
    run.seed = options.seed;
    run.pixel = h;
    const auto reps = static_cast<std::size_t>(options.replications);
    for (std::size_t k = 0; k < sectors.size(); ++k) {
        EstimatorLevel level;
        level.N = sectors[k].N;
        level.area_T0 = sectors[k].area();
        level.length_S0 = segments[k].length();
        level.z.resize(reps);
        if (options.segments) level.y.resize(reps);
        run.levels.push_back(std::move(level));
    }
    parallel_for(reps, [&](std::size_t r) {
        const std::uint64_t seed = replication_seed(options.seed, r);
        if (options.segments) {
            const FieldSample sample = sim.simulate_sample(seed);
            for (std::size_t k = 0; k < sec_est.size(); ++k) {
                run.levels[k].z[r] = sec_est[k].evaluate(sample.field(), options.u);
                run.levels[k].y[r] = seg_est[k].evaluate(sample, options.u);
            }
        } else {
            const GridField field = sim.simulate(seed);
            for (std::size_t k = 0; k < sec_est.size(); ++k) run.levels[k].z[r] = sec_est[k].evaluate(field, options.u);
        }
    });
    for (auto& level : run.levels) {
        level.z_stats = summarize(level.z);
        if (!level.y.empty()) level.y_stats = summarize(level.y);
    }
    return run;
}

DetJacFit regress_detjac(std::span<const int> N, std::span<const double> area_T0, std::span<const double> mean_z,
                         std::span<const double> var_z, double u) {
    const std::size_t n = N.size();
    if (area_T0.size() != n || mean_z.size() != n || var_z.size() != n)
        throw DomainError("regress_detjac: mismatched input lengths");
    if (std::set<int>(N.begin(), N.end()).size() < 4) throw DomainError("regress_detjac: needs at least 4 distinct N");
    if (u == 0.0) throw DomainError("regress_detjac: the level u must be nonzero");
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxy += area_T0[k] * mean_z[k];
        sxx += area_T0[k] * area_T0[k];
    }
    DetJacFit fit;
    fit.a = detjac_constant(u);
    fit.slope = sxy / sxx;
    fit.detjac = fit.slope / fit.a;
    if (!(fit.detjac > 0.0))
        throw NumericError("regress_detjac: non-positive slope " + format_double(fit.slope));
    for (std::size_t k = 0; k < n; ++k) {
        fit.residuals.push_back(mean_z[k] - fit.slope * area_T0[k]);
        fit.normalized_var.push_back(N[k] * var_z[k] / (fit.detjac * area_T0[k]));
        fit.per_level.push_back(mean_z[k] / (fit.a * area_T0[k]));
    }
    return fit;
}

DetJacFit regress_detjac(const EstimatorRun& run) {
    std::vector<int> N;
    std::vector<double> area, mean, var;
    for (const auto& l : run.levels) {
        N.push_back(l.N);
        area.push_back(l.area_T0);
        mean.push_back(l.z_stats.mean);
        var.push_back(l.z_stats.variance);
    }
    return regress_detjac(N, area, mean, var, run.u);
}

void write_estimator_csv(std::ostream& out, const std::string& config_hash, const EstimatorRun& run,
                         const DetJacFit& fit) {
    CsvWriter w(out, config_hash, {"N", "mean_Z", "var_Z", "area_T0", "est_detjac", "normalized_var"});
    for (std::size_t k = 0; k < run.levels.size(); ++k) {
        const auto& l = run.levels[k];
        w.cell(l.N).cell(l.z_stats.mean).cell(l.z_stats.variance).cell(l.area_T0);
        w.cell(k < fit.per_level.size() ? fit.per_level[k] : NAN);
        w.cell(k < fit.normalized_var.size() ? fit.normalized_var[k] : NAN);
        w.end_row();
    }
}

std::vector<double> column_norm_estimates(const EstimatorRun& run) {
    std::vector<double> out;
    for (const auto& l : run.levels) out.push_back(l.y_stats.mean / (rho(1, run.u) * l.length_S0));
    return out;
}

}  // namespace excurse
