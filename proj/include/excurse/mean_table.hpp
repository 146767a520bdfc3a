#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "excurse/deform.hpp"
#include "excurse/excursion.hpp"
#include "excurse/field_sim.hpp"

namespace excurse {

/// Domains used by the identification methods: the horizontal segment
/// [0,s] x {t}, the vertical segment {s} x [0,t] and the rectangle T(s, t).
enum class DomainKind { HSeg, VSeg, Rect };

std::string to_string(DomainKind kind);
DomainKind domain_kind_from_string(const std::string& name);

struct TableDomain {
    DomainKind kind = DomainKind::Rect;
    double s = 1.0;
    double t = 1.0;

    /// Degenerate domains (zero length or area) are rejected.
    void validate() const;
    Segment segment() const;
    Rect rect() const;
    std::string id() const;
};

struct TableEntry {
    double mean_phi = 0.0;
    double std_err = 0.0;
    long n = 0;
};

/// Mean modified Euler characteristics keyed by (domain, level).
class MeanECTable {
public:
    void insert(const TableDomain& domain, double u, const TableEntry& entry);
    const TableEntry* find(DomainKind kind, double s, double t, double u) const;
    /// Throws DomainError naming the missing entry.
    const TableEntry& at(DomainKind kind, double s, double t, double u) const;

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    struct Row {
        TableDomain domain;
        double u;
        TableEntry entry;
    };
    std::vector<Row> rows() const;

    /// Columns domain-kind,s,t,u,mean_phi,std_err,n.
    void write_csv(std::ostream& out, const std::string& config_hash) const;
    static MeanECTable read_csv(const std::filesystem::path& path);
    static MeanECTable parse_csv(const std::string& text);

private:
    using Key = std::tuple<int, long long, long long, long long>;
    static Key key(DomainKind kind, double s, double t, double u);
    std::map<Key, Row> entries_;
};

/// Expected modified Euler characteristic of the excursion of X_theta over
/// the domain, from the image measure by quadrature.
double analytic_mean_phi(const Deformation& theta, const TableDomain& domain, double u,
                         const QuadratureOptions& options = {});

MeanECTable build_analytic_table(const Deformation& theta, std::span<const TableDomain> domains,
                                 std::span<const double> levels, const QuadratureOptions& options = {});

// Sampling of X_theta over domains from one realization.

/// Values of X_theta on the cell-centred lattice of spacing <= `spacing`
/// covering the rectangle (in its own frame), with a one-cell margin.
GridField sample_rect(const FieldSample& field, const Deformation& theta, const Rect& rect, double spacing,
                      Interpolation mode = Interpolation::Spectral);

/// Values of X_theta at the cell centres of a segment split into cells of
/// length <= `spacing`, plus one margin sample beyond each end.
std::vector<double> sample_segment(const FieldSample& field, const Deformation& theta, const Segment& segment,
                                   double spacing, Interpolation mode = Interpolation::Spectral);

/// chi and phi_hat of the excursion of X_theta above u over a rectangle,
/// sampled on a cell-centred lattice of the given spacing in the source
/// coordinates with a one-cell margin used only for critical-point
/// classification.
EulerStats measure_rect(const FieldSample& field, const Deformation& theta, const Rect& rect, double spacing,
                        double u, Interpolation mode = Interpolation::Spectral);

/// Same over a segment; samples at cell centres plus one margin sample at
/// each end.
EulerStats measure_segment(const FieldSample& field, const Deformation& theta, const Segment& segment,
                           double spacing, double u, Interpolation mode = Interpolation::Spectral);

/// chi over the segment samples (margin excluded) and phi_hat.
EulerStats measure_samples_1d(std::span<const double> samples, double u);

/// chi and phi_hat over the interior of a lattice field, leaving `margin`
/// border pixels out of the measured domain.
EulerStats measure_lattice(const GridField& field, double u, int margin = 1);

/// Axis-aligned box containing theta of every domain, padded by `pad`.
struct Box {
    Vec2 lower;
    Vec2 upper;
    /// Largest operator norm of J_theta seen on the domain boundaries.
    double max_jacobian_norm = 0.0;
};
Box image_bounding_box(const Deformation& theta, std::span<const TableDomain> domains, double pad);

struct MonteCarloOptions {
    CovarianceModel model = CovarianceModel::gaussian();
    /// Pixel pitch of the simulated lattice of X.
    double field_spacing = 0.2;
    /// Pixel pitch of the sampling lattice on each domain.
    double domain_spacing = 0.2;
    int replications = 100;
    std::uint64_t seed = 0;
    Interpolation interpolation = Interpolation::Spectral;
};

MeanECTable build_monte_carlo_table(const Deformation& theta, std::span<const TableDomain> domains,
                                    std::span<const double> levels, const MonteCarloOptions& options);

}  // namespace excurse
