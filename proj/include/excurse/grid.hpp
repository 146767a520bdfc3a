#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "excurse/covariance.hpp"
#include "excurse/types.hpp"

namespace excurse {

/// Regular square lattice. Node (i, j) sits at origin + (j, i) * spacing:
/// rows run along y, columns along x.
struct GridSpec {
    Vec2 origin{0.0, 0.0};
    double spacing = 1.0;
    int rows = 2;
    int cols = 2;

    void validate() const;

    Vec2 point(int i, int j) const { return origin + spacing * Vec2(j, i); }
    std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
    Vec2 lower() const { return origin; }
    Vec2 upper() const { return origin + spacing * Vec2(cols - 1, rows - 1); }

    bool operator==(const GridSpec&) const = default;
};

/// Lattice of cell centres tiling the axis-aligned box [lo, hi] with square
/// cells of side `spacing`, extended by `margin` extra cells on every side.
/// The box extents must be integer multiples of the spacing.
GridSpec cell_centered_grid(const Vec2& lo, const Vec2& hi, double spacing, int margin = 0);

/// Sampled scalar field on a GridSpec, row-major values.
struct GridField {
    GridSpec spec;
    std::vector<double> values;
    std::uint64_t seed = 0;
    CovarianceModel model = CovarianceModel::gaussian();

    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * spec.cols + j]; }
    double& at(int i, int j) { return values[static_cast<std::size_t>(i) * spec.cols + j]; }

    /// Throws DomainError when the shape is inconsistent or a value is not finite.
    void validate() const;

    /// Copy of rows [i0, i0+n_rows) and columns [j0, j0+n_cols).
    GridField window(int i0, int j0, int n_rows, int n_cols) const;
};

/// Version written in the header of .gfd files.
inline constexpr int kGfdVersion = 1;

/// Serialize to the .gfd layout: a text header terminated by a line "end",
/// then rows*cols IEEE-754 binary64 values, little-endian, row-major.
std::string encode_gfd(const GridField& field);
GridField decode_gfd(std::span<const char> bytes);

void write_gfd(const std::filesystem::path& path, const GridField& field);
GridField read_gfd(const std::filesystem::path& path);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double x);

}  // namespace excurse
