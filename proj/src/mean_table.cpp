#include "excurse/mean_table.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

#include "excurse/covariance.hpp"
#include "excurse/csv.hpp"
#include "excurse/error.hpp"
#include "excurse/parallel.hpp"
#include "excurse/rng.hpp"
#include "excurse/stats.hpp"

namespace excurse {

std::string to_string(DomainKind kind) {
    switch (kind) {
        case DomainKind::HSeg: return "hseg";
        case DomainKind::VSeg: return "vseg";
        case DomainKind::Rect: return "rect";
    }
    return "?";
}

DomainKind domain_kind_from_string(const std::string& name) {
    if (name == "hseg") return DomainKind::HSeg;
    if (name == "vseg") return DomainKind::VSeg;
    if (name == "rect") return DomainKind::Rect;
    throw DomainError("unknown domain kind '" + name + "' (expected hseg, vseg or rect)");
}

void TableDomain::validate() const {
    if (!std::isfinite(s) || !std::isfinite(t)) throw DomainError("domain parameters must be finite");
    if ((kind == DomainKind::HSeg && s == 0.0) || (kind == DomainKind::VSeg && t == 0.0) ||
        (kind == DomainKind::Rect && (s == 0.0 || t == 0.0)))
        throw DomainError("degenerate domain " + id());
}

Segment TableDomain::segment() const {
    switch (kind) {
        case DomainKind::HSeg: return {Vec2(0.0, t), Vec2(s, t)};
        case DomainKind::VSeg: return {Vec2(s, 0.0), Vec2(s, t)};
        default: throw DomainError("domain " + id() + " is not a segment");
    }
}

Rect TableDomain::rect() const {
    if (kind != DomainKind::Rect) throw DomainError("domain " + id() + " is not a rectangle");
    return Rect::make(s, t);
}

std::string TableDomain::id() const { return to_string(kind) + "(" + format_double(s) + "," + format_double(t) + ")"; }

MeanECTable::Key MeanECTable::key(DomainKind kind, double s, double t, double u) {
    auto q = [](double x) { return static_cast<long long>(std::llround(x * 1e9)); };
    return {static_cast<int>(kind), q(s), q(t), q(u)};
}

void MeanECTable::insert(const TableDomain& domain, double u, const TableEntry& entry) {
    domain.validate();
    if (!(entry.std_err >= 0.0)) throw DomainError("table entry with negative standard error");
    entries_[key(domain.kind, domain.s, domain.t, u)] = Row{domain, u, entry};
}

const TableEntry* MeanECTable::find(DomainKind kind, double s, double t, double u) const {
    auto it = entries_.find(key(kind, s, t, u));
    return it == entries_.end() ? nullptr : &it->second.entry;
}

const TableEntry& MeanECTable::at(DomainKind kind, double s, double t, double u) const {
    if (const TableEntry* e = find(kind, s, t, u)) return *e;
    throw DomainError("mean EC table has no entry for " + TableDomain{kind, s, t}.id() + " at u = " +
                      format_double(u));
}

std::vector<MeanECTable::Row> MeanECTable::rows() const {
    std::vector<Row> out;
    out.reserve(entries_.size());
    for (const auto& [k, row] : entries_) out.push_back(row);
    return out;
}

void MeanECTable::write_csv(std::ostream& out, const std::string& config_hash) const {
    CsvWriter w(out, config_hash, {"domain-kind", "s", "t", "u", "mean_phi", "std_err", "n"});
    for (const auto& [k, row] : entries_) {
        w.cell(to_string(row.domain.kind)).cell(row.domain.s).cell(row.domain.t).cell(row.u);
        w.cell(row.entry.mean_phi).cell(row.entry.std_err).cell(row.entry.n);
        w.end_row();
    }
}

namespace {

MeanECTable from_table(const CsvTable& csv) {
    const std::size_t ck = csv.column("domain-kind"), cs = csv.column("s"), ct = csv.column("t"),
                      cu = csv.column("u"), cm = csv.column("mean_phi"), ce = csv.column("std_err"),
                      cn = csv.column("n");
    MeanECTable table;
    for (const auto& r : csv.rows) {
        try {
            TableDomain d{domain_kind_from_string(r[ck]), std::stod(r[cs]), std::stod(r[ct])};
            table.insert(d, std::stod(r[cu]), {std::stod(r[cm]), std::stod(r[ce]), std::stol(r[cn])});
        } catch (const std::logic_error&) {
            throw IoError("mean EC table: malformed row");
        } catch (const DomainError& e) {
            throw IoError(std::string("mean EC table: ") + e.what());
        }
    }
    return table;
}

}  // namespace

MeanECTable MeanECTable::read_csv(const std::filesystem::path& path) { return from_table(excurse::read_csv(path)); }

MeanECTable MeanECTable::parse_csv(const std::string& text) { return from_table(excurse::parse_csv(text)); }

double analytic_mean_phi(const Deformation& theta, const TableDomain& domain, double u,
                         const QuadratureOptions& options) {
    domain.validate();
    if (domain.kind == DomainKind::Rect) return expected_phi(2, image_area(theta, domain.rect(), options), u);
    return expected_phi(1, image_length(theta, domain.segment(), options), u);
}

MeanECTable build_analytic_table(const Deformation& theta, std::span<const TableDomain> domains,
                                 std::span<const double> levels, const QuadratureOptions& options) {
    std::vector<double> measure(domains.size());
    parallel_for(domains.size(), [&](std::size_t k) {
        const TableDomain& d = domains[k];
        d.validate();
        measure[k] = d.kind == DomainKind::Rect ? image_area(theta, d.rect(), options)
                                                : image_length(theta, d.segment(), options);
    });
    MeanECTable table;
    for (std::size_t k = 0; k < domains.size(); ++k)
        for (double u : levels)
            table.insert(domains[k], u, {expected_phi(domains[k].kind == DomainKind::Rect ? 2 : 1, measure[k], u), 0.0, 0});
    return table;
}

GridField sample_rect(const FieldSample& field, const Deformation& theta, const Rect& rect, double spacing,
                      Interpolation mode) {
    if (!(spacing > 0.0)) throw DomainError("sampling spacing must be positive");
    const int nu = std::max(3, static_cast<int>(std::ceil(rect.extent.x() / spacing - 1e-9)));
    const int nv = std::max(3, static_cast<int>(std::ceil(rect.extent.y() / spacing - 1e-9)));
    const double hu = rect.extent.x() / nu, hv = rect.extent.y() / nv;
    GridField out;
    out.spec.rows = nv + 2;
    out.spec.cols = nu + 2;
    out.spec.spacing = std::min(hu, hv);
    out.spec.origin = rect.lower + Vec2(-0.5 * hu, -0.5 * hv);
    out.seed = field.field().seed;
    out.model = field.field().model;
    out.values.reserve(out.spec.size());
    for (int i = 0; i < out.spec.rows; ++i)
        for (int j = 0; j < out.spec.cols; ++j)
            out.values.push_back(field.evaluate(theta.eval(rect.map((j - 0.5) * hu, (i - 0.5) * hv)), mode));
    return out;
}

std::vector<double> sample_segment(const FieldSample& field, const Deformation& theta, const Segment& segment,
                                   double spacing, Interpolation mode) {
    if (!(spacing > 0.0)) throw DomainError("sampling spacing must be positive");
    const double len = segment.length();
    if (!(len > 0.0)) throw DomainError("segment endpoints must differ");
    const int n = std::max(3, static_cast<int>(std::ceil(len / spacing - 1e-9)));
    const Vec2 step = (segment.b - segment.a) / n;
    std::vector<double> out;
    out.reserve(n + 2);
    for (int k = -1; k <= n; ++k) out.push_back(field.evaluate(theta.eval(segment.a + (k + 0.5) * step), mode));
    return out;
}

namespace {

EulerStats measure_grid(const GridField& g, double u, int margin) {
    ExcursionMask m = excursion_mask(g, u);
    m.domain.assign(m.bits.size(), 0);
    for (int i = margin; i < m.rows - margin; ++i)
        for (int j = margin; j < m.cols - margin; ++j) m.domain[static_cast<std::size_t>(i) * m.cols + j] = 1;
    EulerStats s = euler_characteristic_2d(m);
    s.phi_hat = modified_euler_2d(m);
    return s;
}

}  // namespace

EulerStats measure_lattice(const GridField& field, double u, int margin) {
    if (margin < 1) throw DomainError("lattice measurement needs a margin of at least one pixel");
    return measure_grid(field, u, margin);
}

EulerStats measure_rect(const FieldSample& field, const Deformation& theta, const Rect& rect, double spacing,
                        double u, Interpolation mode) {
    return measure_grid(sample_rect(field, theta, rect, spacing, mode), u, 1);
}

EulerStats measure_samples_1d(std::span<const double> samples, double u) {
    ExcursionMask m = excursion_mask(samples, u);
    m.domain.assign(m.bits.size(), 1);
    m.domain.front() = m.domain.back() = 0;
    EulerStats s = euler_characteristic_1d(m);
    s.phi_hat = modified_euler_1d(m);
    return s;
}

EulerStats measure_segment(const FieldSample& field, const Deformation& theta, const Segment& segment,
                           double spacing, double u, Interpolation mode) {
    return measure_samples_1d(sample_segment(field, theta, segment, spacing, mode), u);
}

Box image_bounding_box(const Deformation& theta, std::span<const TableDomain> domains, double pad) {
    Box box{Vec2::Constant(INFINITY), Vec2::Constant(-INFINITY)};
    auto add = [&](const Vec2& x) {
        const Vec2 y = theta.eval(x);
        box.lower = box.lower.cwiseMin(y);
        box.upper = box.upper.cwiseMax(y);
        box.max_jacobian_norm = std::max(box.max_jacobian_norm, theta.jacobian_unchecked(x).operatorNorm());
    };
    auto add_segment = [&](const Vec2& a, const Vec2& b) {
        constexpr int kSteps = 256;
        for (int k = 0; k <= kSteps; ++k) add(a + (b - a) * (static_cast<double>(k) / kSteps));
    };
    for (const TableDomain& d : domains) {
        if (d.kind == DomainKind::Rect) {
            const Rect r = d.rect();
            const Vec2 c[4] = {r.map(0, 0), r.map(r.extent.x(), 0), r.map(r.extent.x(), r.extent.y()),
                               r.map(0, r.extent.y())};
            for (int k = 0; k < 4; ++k) add_segment(c[k], c[(k + 1) % 4]);
        } else {
            const Segment s = d.segment();
            add_segment(s.a, s.b);
        }
    }
    if (domains.empty()) box = {Vec2::Zero(), Vec2::Zero(), 0.0};
    box.lower -= Vec2::Constant(pad);
    box.upper += Vec2::Constant(pad);
    return box;
}

MeanECTable build_monte_carlo_table(const Deformation& theta, std::span<const TableDomain> domains,
                                    std::span<const double> levels, const MonteCarloOptions& options) {
    if (options.replications < 1) throw DomainError("Monte Carlo table needs at least one replication");
    if (!(options.field_spacing > 0.0) || !(options.domain_spacing > 0.0))
        throw DomainError("sampling spacings must be positive");
    MeanECTable table;
    if (domains.empty()) return table;
    for (const TableDomain& d : domains) d.validate();

    // Pad so that margin samples just outside each domain stay in the box.
    Box box = image_bounding_box(theta, domains, 0.0);
    const double pad = 3.0 * options.field_spacing + 2.0 * options.domain_spacing * box.max_jacobian_norm;
    box.lower -= Vec2::Constant(pad);
    box.upper += Vec2::Constant(pad);
    GridSpec spec;
    spec.origin = box.lower;
    spec.spacing = options.field_spacing;
    spec.cols = static_cast<int>(std::ceil((box.upper.x() - box.lower.x()) / options.field_spacing)) + 1;
    spec.rows = static_cast<int>(std::ceil((box.upper.y() - box.lower.y()) / options.field_spacing)) + 1;
    const FieldSimulator sim(spec, options.model);

    const std::size_t n_dom = domains.size(), n_lev = levels.size();
    const auto reps = static_cast<std::size_t>(options.replications);
    // phi[(d * n_lev + l) * reps + r]
    std::vector<double> phi(n_dom * n_lev * reps);
    parallel_for(reps, [&](std::size_t r) {
        const FieldSample sample = sim.simulate_sample(replication_seed(options.seed, r));
        for (std::size_t d = 0; d < n_dom; ++d) {
            const TableDomain& dom = domains[d];
            if (dom.kind == DomainKind::Rect) {
                const GridField g = sample_rect(sample, theta, dom.rect(), options.domain_spacing, options.interpolation);
                for (std::size_t l = 0; l < n_lev; ++l) phi[(d * n_lev + l) * reps + r] = measure_grid(g, levels[l], 1).phi_hat;
            } else {
                const auto v = sample_segment(sample, theta, dom.segment(), options.domain_spacing, options.interpolation);
                for (std::size_t l = 0; l < n_lev; ++l)
                    phi[(d * n_lev + l) * reps + r] = measure_samples_1d(v, levels[l]).phi_hat;
            }
        }
    });
    for (std::size_t d = 0; d < n_dom; ++d)
        for (std::size_t l = 0; l < n_lev; ++l) {
            const SampleSummary s = summarize(std::span<const double>(phi).subspan((d * n_lev + l) * reps, reps));
            table.insert(domains[d], levels[l], {s.mean, s.std_err, s.n});
        }
    return table;
}

}  // namespace excurse
