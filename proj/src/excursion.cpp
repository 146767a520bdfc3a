#include "excurse/excursion.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <numeric>

#include "excurse/csv.hpp"
#include "excurse/error.hpp"

namespace excurse {

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

ExcursionMask threshold(int rows, int cols, std::span<const double> values, double u) {
    if (!std::isfinite(u)) throw DomainError("excursion level must be finite");
    ExcursionMask m;
    m.rows = rows;
    m.cols = cols;
    m.level = u;
    m.values.assign(values.begin(), values.end());
    m.bits.resize(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!std::isfinite(values[k])) throw DomainError("excursion mask: non-finite field value");
        m.bits[k] = values[k] >= u;
    }
    return m;
}

/// Strict order used for critical-point classification.
bool higher(const ExcursionMask& m, std::size_t q, std::size_t p) {
    const double vq = m.values[q], vp = m.values[p];
    return vq > vp || (vq == vp && q < p);
}

}  // namespace

ExcursionMask excursion_mask(const GridField& field, double u) {
    if (field.values.size() != field.spec.size()) throw DomainError("excursion mask: value count does not match shape");
    return threshold(field.spec.rows, field.spec.cols, field.values, u);
}

ExcursionMask excursion_mask(std::span<const double> samples, double u) {
    return threshold(1, static_cast<int>(samples.size()), samples, u);
}

ExcursionMask mask_from_bits(int rows, int cols, std::span<const std::uint8_t> bits) {
    if (rows < 1 || cols < 1 || bits.size() != static_cast<std::size_t>(rows) * cols)
        throw DomainError("mask shape does not match bit count");
    ExcursionMask m;
    m.rows = rows;
    m.cols = cols;
    m.level = 0.5;
    m.bits.assign(bits.begin(), bits.end());
    m.values.resize(bits.size());
    for (std::size_t k = 0; k < bits.size(); ++k) {
        m.bits[k] = bits[k] != 0;
        m.values[k] = m.bits[k] ? 1.0 : 0.0;
    }
    return m;
}

long cubical_euler(const ExcursionMask& m) {
    auto px = [&](int i, int j) { return i >= 0 && j >= 0 && i < m.rows && j < m.cols && m.active(i, j); };
    long v = 0, e = 0, f = 0;
    for (int a = 0; a <= m.rows; ++a)
        for (int b = 0; b <= m.cols; ++b) {
            if (px(a - 1, b - 1) || px(a - 1, b) || px(a, b - 1) || px(a, b)) ++v;
            if (b < m.cols && (px(a - 1, b) || px(a, b))) ++e;  // edge (a,b)-(a,b+1)
            if (a < m.rows && (px(a, b - 1) || px(a, b))) ++e;  // edge (a,b)-(a+1,b)
            if (a < m.rows && b < m.cols && px(a, b)) ++f;
        }
    return v - e + f;
}

EulerStats euler_characteristic_2d(const ExcursionMask& m) {
    EulerStats s;
    s.chi = cubical_euler(m);

    // Work on the mask framed by one background pixel on every side.
    const int R = m.rows + 2, C = m.cols + 2;
    auto fg = [&](int i, int j) {
        return i >= 1 && j >= 1 && i <= m.rows && j <= m.cols && m.active(i - 1, j - 1);
    };
    DisjointSets sets(static_cast<std::size_t>(R) * C);
    auto id = [&](int i, int j) { return static_cast<std::size_t>(i) * C + j; };
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j) {
            const bool f = fg(i, j);
            for (auto [di, dj] : std::array<std::pair<int, int>, 4>{{{0, 1}, {1, -1}, {1, 0}, {1, 1}}}) {
                const int ni = i + di, nj = j + dj;
                if (ni >= R || nj < 0 || nj >= C) continue;
                if (fg(ni, nj) != f) continue;
                // Background is 4-connected: skip diagonal links.
                if (!f && di != 0 && dj != 0) continue;
                sets.unite(id(i, j), id(ni, nj));
            }
        }
    long holes = 0;
    const std::size_t outside = sets.find(id(0, 0));
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j) {
            const std::size_t k = id(i, j);
            if (sets.find(k) != k) continue;
            if (fg(i, j)) ++s.n_components;
            else if (k != outside) ++holes;
        }
    s.n_holes = holes;
    if (s.chi != s.n_components - s.n_holes)
        throw NumericError("Euler characteristic mismatch: cubical " + std::to_string(s.chi) + " vs " +
                           std::to_string(s.n_components) + " components - " + std::to_string(s.n_holes) + " holes");
    return s;
}

EulerStats euler_characteristic_1d(const ExcursionMask& m) {
    EulerStats s;
    bool prev = false;
    for (int j = 0; j < m.cols; ++j) {
        const bool cur = m.active(0, j);
        if (cur && !prev) ++s.chi;
        prev = cur;
    }
    s.n_components = s.chi;
    return s;
}

int critical_index(std::span<const double> values, int cols, double u, std::size_t p) {
    // Boundary of the pixel square walked cyclically (corner, edge, corner,
    // ...), with the neighbours whose squares contain each element.
    static constexpr std::array<std::array<std::pair<int, int>, 3>, 8> kCover = {{
        {{{-1, -1}, {-1, 0}, {0, -1}}},
        {{{-1, 0}, {-1, 0}, {-1, 0}}},
        {{{-1, 0}, {-1, 1}, {0, 1}}},
        {{{0, 1}, {0, 1}, {0, 1}}},
        {{{0, 1}, {1, 1}, {1, 0}}},
        {{{1, 0}, {1, 0}, {1, 0}}},
        {{{1, 0}, {1, -1}, {0, -1}}},
        {{{0, -1}, {0, -1}, {0, -1}}},
    }};
    const double vp = values[p];
    if (!(vp >= u)) return 0;
    const auto c = static_cast<std::ptrdiff_t>(cols);
    std::array<bool, 8> covered{};
    int n_covered = 0;
    for (int k = 0; k < 8; ++k) {
        for (auto [di, dj] : kCover[k]) {
            const auto q = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + di * c + dj);
            const double vq = values[q];
            if (vq >= u && (vq > vp || (vq == vp && q < p))) {
                covered[k] = true;
                break;
            }
        }
        n_covered += covered[k];
    }
    if (n_covered == 0 || n_covered == 8) return 1;
    int arcs = 0;
    for (int k = 0; k < 8; ++k)
        if (covered[k] && !covered[(k + 7) % 8]) ++arcs;
    return 1 - arcs;
}

double modified_euler_2d(const ExcursionMask& m) {
    if (m.rows < 3 || m.cols < 3) throw DomainError("modified Euler characteristic needs a mask of at least 3 x 3");
    long total = 0;
    for (int i = 1; i + 1 < m.rows; ++i)
        for (int j = 1; j + 1 < m.cols; ++j)
            if (m.in_domain(i, j))
                total += critical_index(m.values, m.cols, m.level, static_cast<std::size_t>(i) * m.cols + j);
    return static_cast<double>(total);
}

double modified_euler_1d(const ExcursionMask& m) {
    if (m.cols < 3) throw DomainError("modified Euler characteristic needs at least 3 samples");
    long total = 0;
    for (int j = 1; j + 1 < m.cols; ++j) {
        if (!m.active(0, j)) continue;
        const auto p = static_cast<std::size_t>(j);
        const int n_higher = (m.at(0, j - 1) && higher(m, p - 1, p)) + (m.at(0, j + 1) && higher(m, p + 1, p));
        total += 1 - n_higher;
    }
    return static_cast<double>(total);
}

double boundary_corrected_euler_2d(const ExcursionMask& m) {
    if (!m.domain.empty()) throw DomainError("boundary correction applies to full rectangular masks only");
    const double chi = static_cast<double>(cubical_euler(m));
    auto runs = [&](int i0, int j0, int di, int dj, int n) {
        long r = 0;
        bool prev = false;
        for (int k = 0; k < n; ++k) {
            const bool cur = m.at(i0 + k * di, j0 + k * dj);
            if (cur && !prev) ++r;
            prev = cur;
        }
        return r;
    };
    const long edge_runs = runs(0, 0, 0, 1, m.cols) + runs(m.rows - 1, 0, 0, 1, m.cols) + runs(0, 0, 1, 0, m.rows) +
                           runs(0, m.cols - 1, 1, 0, m.rows);
    const int corners = m.at(0, 0) + m.at(0, m.cols - 1) + m.at(m.rows - 1, 0) + m.at(m.rows - 1, m.cols - 1);
    return chi - 0.5 * static_cast<double>(edge_runs) + 0.25 * corners;
}

std::string encode_pbm(const ExcursionMask& m) {
    std::string out = "P1\n# excursion above " + format_double(m.level) + "\n";
    out += std::to_string(m.cols) + " " + std::to_string(m.rows) + "\n";
    for (int i = m.rows - 1; i >= 0; --i) {
        for (int j = 0; j < m.cols; ++j) {
            out += m.active(i, j) ? '1' : '0';
            out += (j + 1 < m.cols) ? ' ' : '\n';
        }
    }
    return out;
}

void write_pbm(const std::filesystem::path& path, const ExcursionMask& mask) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << encode_pbm(mask);
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void write_euler_csv(std::ostream& out, const std::string& config_hash, std::span<const EulerRecord> records) {
    CsvWriter w(out, config_hash, {"seed", "u", "domain-id", "chi", "phi_hat", "n_components", "n_holes"});
    for (const auto& r : records) {
        w.cell(static_cast<unsigned long long>(r.seed)).cell(r.u).cell(r.domain_id).cell(r.stats.chi);
        w.cell(r.stats.phi_hat).cell(r.stats.n_components).cell(r.stats.n_holes);
        w.end_row();
    }
}

}  // namespace excurse
