#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "excurse/covariance.hpp"
#include "excurse/grid.hpp"

namespace excurse {

class Deformation;

struct SimulationOptions {
    /// Initial and maximal ratio between the embedding torus and the grid.
    /// Each torus side is also at least twice the lag where the covariance
    /// falls below 1e-13.
    double min_pad = 2.0;
    double max_pad = 8.0;
    /// Embedding eigenvalues above -tolerance * max eigenvalue are clipped
    /// to zero; anything below forces a larger torus.
    double negative_tolerance = 1e-10;
    /// Modes at or below mode_floor * max eigenvalue (the round-off level of
    /// the spectrum) are left out of the interpolant; further modes are
    /// dropped, smallest first, while the extra variance stays below
    /// dropped_variance.
    double mode_floor = 1e-14;
    double dropped_variance = 1e-24;
};

/// Outcome of the circulant embedding for one (grid, model) pair.
struct EmbeddingReport {
    int torus_rows = 0;
    int torus_cols = 0;
    double pad_factor = 0.0;
    int clipped_eigenvalues = 0;
    /// Most negative eigenvalue relative to the largest one (0 when none).
    double most_negative = 0.0;
    std::size_t kept_modes = 0;
    /// Variance of the modes left out of the interpolant.
    double dropped_variance = 0.0;
};

enum class Interpolation { Spectral, Bilinear };

/// One realization: its lattice values plus the band-limited trigonometric
/// interpolant of the same sample, evaluable anywhere in the lattice box.
/// The interpolant sums the retained spectral modes and adds the bilinear
/// interpolation of what the dropped modes contribute on the lattice, so it
/// reproduces the lattice values.
class FieldSample {
public:
    const GridField& field() const { return field_; }
    Vec2 box_lower() const { return field_.spec.lower(); }
    Vec2 box_upper() const { return field_.spec.upper(); }
    bool contains(const Vec2& p) const;

    /// Throws DomainError for points outside the lattice box.
    double evaluate(const Vec2& p, Interpolation mode = Interpolation::Spectral) const;

private:
    friend class FieldSimulator;

    struct Mode {
        std::int32_t kx, ky;  // indices into the frequency tables
        std::complex<double> amplitude;
    };

    double spectral(const Vec2& p) const;
    double bilinear(const Vec2& p) const;
    double interpolate(const std::vector<double>& values, const Vec2& p) const;

    GridField field_;
    std::vector<double> freq_x_, freq_y_;
    std::vector<char> nyquist_x_, nyquist_y_;
    std::vector<Mode> modes_;  // sorted by ky
    std::vector<double> residual_;
};

/// Circulant-embedding simulator for a fixed grid and covariance model. The
/// embedding spectrum is computed once; every call to simulate() costs one
/// FFT of the torus.
class FieldSimulator {
public:
    FieldSimulator(GridSpec spec, CovarianceModel model, SimulationOptions options = {});
    ~FieldSimulator();
    FieldSimulator(FieldSimulator&&) noexcept;
    FieldSimulator& operator=(FieldSimulator&&) noexcept;

    const GridSpec& spec() const { return spec_; }
    const CovarianceModel& model() const { return model_; }
    const EmbeddingReport& report() const { return report_; }

    GridField simulate(std::uint64_t seed) const;
    FieldSample simulate_sample(std::uint64_t seed) const;

private:
    struct Plan;

    /// Lattice values. When given, `kept` receives the coefficients of the
    /// retained modes and `residual` the lattice values minus their sum.
    std::vector<double> synthesize(std::uint64_t seed, std::vector<std::complex<double>>* kept,
                                   std::vector<double>* residual) const;

    GridSpec spec_;
    CovarianceModel model_;
    SimulationOptions options_;
    EmbeddingReport report_;
    std::vector<double> amplitude_;  // sqrt(lambda_k / M) over the torus
    std::vector<std::size_t> kept_;  // torus indices of the retained modes
    std::unique_ptr<Plan> plan_;
};

GridField simulate(const GridSpec& spec, const CovarianceModel& model, std::uint64_t seed);

std::vector<double> sample_along(const FieldSample& sample, std::span<const Vec2> points,
                                 Interpolation mode = Interpolation::Spectral);

/// Lattice sampling of the deformed field t -> X(theta(t)) on `spec`.
GridField deformed_field(const FieldSample& sample, const Deformation& theta, const GridSpec& spec,
                         Interpolation mode = Interpolation::Spectral);

/// Smallest size >= n whose prime factors are all in {2, 3, 5, 7}.
int fft_friendly_size(int n);

}  // namespace excurse
