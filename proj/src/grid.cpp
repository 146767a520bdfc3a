#include "excurse/grid.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "excurse/error.hpp"

namespace excurse {

void GridSpec::validate() const {
    if (!(spacing > 0.0) || !std::isfinite(spacing)) throw DomainError("grid spacing must be positive");
    if (rows < 2 || cols < 2) throw DomainError("grid shape components must be >= 2");
    if (!origin.allFinite()) throw DomainError("grid origin must be finite");
}

GridSpec cell_centered_grid(const Vec2& lo, const Vec2& hi, double spacing, int margin) {
    if (!(spacing > 0.0)) throw DomainError("grid spacing must be positive");
    if (margin < 0) throw DomainError("grid margin must be >= 0");
    const Vec2 extent = hi - lo;
    auto cells = [&](double w) {
        const double n = std::round(w / spacing);
        if (n < 1.0 || std::abs(n * spacing - w) > 1e-9 * std::max(1.0, w))
            throw DomainError("box extent " + format_double(w) + " is not a multiple of spacing " +
                              format_double(spacing));
        return static_cast<int>(n);
    };
    GridSpec g;
    g.spacing = spacing;
    g.cols = cells(extent.x()) + 2 * margin;
    g.rows = cells(extent.y()) + 2 * margin;
    g.origin = lo + Vec2::Constant((0.5 - margin) * spacing);
    g.validate();
    return g;
}

void GridField::validate() const {
    spec.validate();
    if (values.size() != spec.size()) throw DomainError("grid field: value count does not match shape");
    for (double v : values)
        if (!std::isfinite(v)) throw DomainError("grid field contains a non-finite value");
}

GridField GridField::window(int i0, int j0, int n_rows, int n_cols) const {
    if (i0 < 0 || j0 < 0 || i0 + n_rows > spec.rows || j0 + n_cols > spec.cols)
        throw DomainError("grid window out of range");
    GridField out;
    out.spec = spec;
    out.spec.origin = spec.point(i0, j0);
    out.spec.rows = n_rows;
    out.spec.cols = n_cols;
    out.seed = seed;
    out.model = model;
    out.values.reserve(out.spec.size());
    for (int i = 0; i < n_rows; ++i)
        for (int j = 0; j < n_cols; ++j) out.values.push_back(at(i0 + i, j0 + j));
    return out;
}

std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc()) throw Error("format_double: conversion failed");
    return std::string(buf, end);
}

namespace {

constexpr const char* kMagic = "excurse-gfd";

double parse_double(const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw IoError("gfd: malformed number '" + s + "'");
    return v;
}

}  // namespace

std::string encode_gfd(const GridField& field) {
    field.validate();
    std::string out;
    out += std::string(kMagic) + " " + std::to_string(kGfdVersion) + "\n";
    out += "rows " + std::to_string(field.spec.rows) + "\n";
    out += "cols " + std::to_string(field.spec.cols) + "\n";
    out += "origin " + format_double(field.spec.origin.x()) + " " + format_double(field.spec.origin.y()) + "\n";
    out += "spacing " + format_double(field.spec.spacing) + "\n";
    out += "model " + field.model.name() + " " + format_double(field.model.parameter()) + "\n";
    out += "scale " + format_double(field.model.scale()) + "\n";
    out += "seed " + std::to_string(field.seed) + "\n";
    out += "data float64-le row-major\n";
    out += "end\n";

    const std::size_t header = out.size();
    out.resize(header + field.values.size() * sizeof(double));
    char* dst = out.data() + header;
    for (double v : field.values) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        std::memcpy(dst, &bits, sizeof bits);
        dst += sizeof bits;
    }
    return out;
}

GridField decode_gfd(std::span<const char> bytes) {
    std::size_t pos = 0;
    std::map<std::string, std::vector<std::string>> header;
    bool first = true;
    for (;;) {
        const auto* begin = bytes.data() + pos;
        const auto* nl = static_cast<const char*>(std::memchr(begin, '\n', bytes.size() - pos));
        if (!nl) throw IoError("gfd: truncated header");
        std::string line(begin, nl);
        pos = static_cast<std::size_t>(nl - bytes.data()) + 1;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        std::vector<std::string> fields;
        for (std::string f; ls >> f;) fields.push_back(f);
        if (first) {
            if (key != kMagic || fields.size() != 1) throw IoError("gfd: bad magic line");
            if (fields[0] != std::to_string(kGfdVersion)) throw IoError("gfd: unsupported version " + fields[0]);
            first = false;
            continue;
        }
        if (key == "end") break;
        header[key] = fields;
    }
    auto need = [&](const std::string& k, std::size_t n) -> const std::vector<std::string>& {
        auto it = header.find(k);
        if (it == header.end() || it->second.size() != n) throw IoError("gfd: missing or malformed '" + k + "'");
        return it->second;
    };

    GridField f;
    f.spec.rows = static_cast<int>(parse_double(need("rows", 1)[0]));
    f.spec.cols = static_cast<int>(parse_double(need("cols", 1)[0]));
    const auto& o = need("origin", 2);
    f.spec.origin = Vec2(parse_double(o[0]), parse_double(o[1]));
    f.spec.spacing = parse_double(need("spacing", 1)[0]);
    const auto& m = need("model", 2);
    try {
        f.model = covariance_from_name(m[0], parse_double(m[1]));
    } catch (const DomainError& e) {
        throw IoError(std::string("gfd: ") + e.what());
    }
    f.seed = std::stoull(need("seed", 1)[0]);
    if (need("data", 2)[0] != "float64-le") throw IoError("gfd: unsupported data encoding");
    try {
        f.spec.validate();
    } catch (const DomainError& e) {
        throw IoError(std::string("gfd: ") + e.what());
    }

    const std::size_t n = f.spec.size();
    if (bytes.size() - pos != n * sizeof(double)) throw IoError("gfd: payload size does not match shape");
    f.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::uint64_t bits;
        std::memcpy(&bits, bytes.data() + pos + k * sizeof bits, sizeof bits);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        f.values[k] = std::bit_cast<double>(bits);
    }
    return f;
}

void write_gfd(const std::filesystem::path& path, const GridField& field) {
    const std::string bytes = encode_gfd(field);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

GridField read_gfd(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_gfd(bytes);
}

}  // namespace excurse
