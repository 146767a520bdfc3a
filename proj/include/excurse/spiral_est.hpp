#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "excurse/deform.hpp"
#include "excurse/field_sim.hpp"
#include "excurse/stats.hpp"

namespace excurse {

/// Sectors T_N^k = rho_{2k pi / N}(T_N^0), with T_N^0 the polar box
/// r0 <= r < r0 + 1/N, phi0 <= phi < phi0 + 2 pi / N.
struct SectorFamily {
    double r0 = 1.0;
    double phi0 = 0.0;
    int N = 8;

    void validate() const;
    double outer() const { return r0 + 1.0 / N; }
    /// |T_N^0|_2 = (pi / N) ((r0 + 1/N)^2 - r0^2).
    double area() const;
    /// Index of the sector containing x, or -1.
    int sector_of(const Vec2& x) const;
};

/// Segments S_N^k = rho_{2k pi / N}([x1, x1 + 1/N] x {x2}).
struct SegmentFamily {
    Vec2 base{1.0, 0.0};
    int N = 8;

    void validate() const;
    double length() const { return 1.0 / N; }
    Segment segment(int k) const;
};

/// Z_N from lattice samples of the undeformed field X. Every lattice pixel
/// whose centre pulls back (through theta) into a sector is assigned to it,
/// so the modified Euler characteristic of A_u(X_theta, T_N^k) is the sum of
/// the critical-point indices of X over the assigned pixels. The assignment
/// depends only on theta, the family and the lattice, and is computed once.
class SectorEstimator {
public:
    /// Throws DomainError when the sectors leave the lattice or are less
    /// than 8 pixels across in either direction.
    SectorEstimator(const Deformation& theta, const SectorFamily& family, const GridSpec& lattice);

    const SectorFamily& family() const { return family_; }
    std::size_t assigned_pixels() const { return pixels_.size(); }

    std::vector<double> sector_values(const GridField& x, double u) const;
    /// N^{-1} sum over the sectors.
    double evaluate(const GridField& x, double u) const;
    /// phi_hat over theta(U_N) taken as a single domain.
    double union_value(const GridField& x, double u) const;

private:
    SectorFamily family_;
    GridSpec lattice_;
    std::vector<std::size_t> pixels_;
    std::vector<int> sector_;
};

double z_estimator(const GridField& x, const Deformation& theta, const SectorFamily& family, double u);

/// Y_N from evaluations of X along theta(S_N^k), sampled at step <= 1/(8N)
/// in the source coordinates with one margin sample beyond each end.
class SegmentEstimator {
public:
    SegmentEstimator(const Deformation& theta, const SegmentFamily& family, double step = 0.0);

    const SegmentFamily& family() const { return family_; }
    /// Image points of all samples, segment after segment.
    const std::vector<Vec2>& points() const { return points_; }

    double evaluate(const std::function<double(const Vec2&)>& x, double u) const;
    double evaluate(const FieldSample& x, double u) const;
    double evaluate_values(std::span<const double> values, double u) const;

private:
    SegmentFamily family_;
    int per_segment_ = 0;
    std::vector<Vec2> points_;
};

double y_estimator(const FieldSample& x, const Deformation& theta, const SegmentFamily& family, double u);

/// a = u exp(-u^2/2) / (2 pi)^{3/2}.
double detjac_constant(double u);

struct EstimatorLevel {
    int N = 0;
    double area_T0 = 0.0;
    double length_S0 = 0.0;
    std::vector<double> z;
    std::vector<double> y;
    SampleSummary z_stats;
    SampleSummary y_stats;
};

struct EstimatorRun {
    double r0 = 0.0;
    double phi0 = 0.0;
    double u = 1.0;
    std::uint64_t seed = 0;
    double pixel = 0.0;
    std::vector<EstimatorLevel> levels;
};

struct SpiralEstimationOptions {
    std::vector<int> schedule{8, 12, 16, 24, 32};
    int replications = 200;
    double u = 1.0;
    std::uint64_t seed = 0;
    CovarianceModel model = CovarianceModel::gaussian();
    /// Lattice pitch of X; 0 picks the largest pitch resolving every sector
    /// with 8 pixels.
    double pixel = 0.0;
    bool segments = true;
};

EstimatorRun run_spiral_estimation(const Deformation& theta, double r0, double phi0,
                                   const SpiralEstimationOptions& options);

struct DetJacFit {
    double detjac = 0.0;
    double slope = 0.0;
    double a = 0.0;
    std::vector<double> residuals;
    /// N Var[Z_N] / (detjac |T_N^0|_2) along the schedule.
    std::vector<double> normalized_var;
    /// mean_Z / (a |T_N^0|_2) per N.
    std::vector<double> per_level;
};

/// Least-squares slope through the origin of mean Z_N against |T_N^0|_2,
/// divided by a. Needs >= 4 distinct N; throws NumericError on a
/// non-positive slope.
DetJacFit regress_detjac(std::span<const int> N, std::span<const double> area_T0, std::span<const double> mean_z,
                         std::span<const double> var_z, double u);
DetJacFit regress_detjac(const EstimatorRun& run);

/// Columns N,mean_Z,var_Z,area_T0,est_detjac,normalized_var.
void write_estimator_csv(std::ostream& out, const std::string& config_hash, const EstimatorRun& run,
                         const DetJacFit& fit);

/// ||J^1_theta(x)|| estimate per N from Y_N: mean_Y / (rho_1(u) |S_N^0|_1).
std::vector<double> column_norm_estimates(const EstimatorRun& run);

}  // namespace excurse
