#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "excurse/grid.hpp"

namespace excurse {

/// Thresholded lattice {value >= level}. The source values are kept so that
/// critical points can be classified; `domain`, when non-empty, restricts
/// the region whose excursion is measured (pixels outside it still act as
/// neighbours for the critical-point classification).
struct ExcursionMask {
    int rows = 0;
    int cols = 0;
    double level = 0.0;
    std::vector<std::uint8_t> bits;
    std::vector<double> values;
    std::vector<std::uint8_t> domain;

    bool one_dimensional() const { return rows == 1; }
    bool at(int i, int j) const { return bits[static_cast<std::size_t>(i) * cols + j] != 0; }
    bool in_domain(int i, int j) const {
        return domain.empty() || domain[static_cast<std::size_t>(i) * cols + j] != 0;
    }
    /// Pixel belongs to the measured set: above the level and in the domain.
    bool active(int i, int j) const { return at(i, j) && in_domain(i, j); }
};

/// Throws DomainError on non-finite values.
ExcursionMask excursion_mask(const GridField& field, double u);
ExcursionMask excursion_mask(std::span<const double> samples, double u);
/// Mask from booleans alone (values are taken as 1 and 0).
ExcursionMask mask_from_bits(int rows, int cols, std::span<const std::uint8_t> bits);

struct EulerStats {
    long chi = 0;
    double phi_hat = 0.0;
    long n_components = 0;
    long n_holes = 0;
};

/// V - E + F of the closed cubical complex of active pixels.
long cubical_euler(const ExcursionMask& mask);

/// chi by the cubical complex, components (8-connected) and holes
/// (4-connected background not reaching the border) by union-find. Throws
/// NumericError if the two computations disagree. phi_hat is left at 0.
EulerStats euler_characteristic_2d(const ExcursionMask& mask);

/// Number of maximal runs of active samples.
EulerStats euler_characteristic_1d(const ExcursionMask& mask);

/// Critical-point estimate of the modified Euler characteristic: every
/// active pixel not on the lattice border contributes 1 minus the number of
/// arcs its square shares with the squares of higher neighbours (ties broken
/// by lower linear index ranking higher). Summed over all pixels of a
/// lattice this equals the cubical Euler characteristic. Requires >= 3 x 3.
double modified_euler_2d(const ExcursionMask& mask);

/// Contribution of pixel p (row-major, not on the lattice border) to the
/// critical-point estimate at level u; 0 when values[p] < u.
int critical_index(std::span<const double> values, int cols, double u, std::size_t p);

/// One-dimensional analogue: interior local maxima above the level minus
/// interior local minima above the level.
double modified_euler_1d(const ExcursionMask& mask);

/// chi - (1/2) * (runs along the four border lines) + (1/4) * (active
/// corners), for a full rectangular mask. Kept as a cross-check.
double boundary_corrected_euler_2d(const ExcursionMask& mask);

/// Plain PBM (P1); the first output row is the lattice row with largest y.
std::string encode_pbm(const ExcursionMask& mask);
void write_pbm(const std::filesystem::path& path, const ExcursionMask& mask);

struct EulerRecord {
    std::uint64_t seed = 0;
    double u = 0.0;
    std::string domain_id;
    EulerStats stats;
};

/// Columns seed,u,domain-id,chi,phi_hat,n_components,n_holes.
void write_euler_csv(std::ostream& out, const std::string& config_hash, std::span<const EulerRecord> records);

}  // namespace excurse
