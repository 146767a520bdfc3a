#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "excurse/covariance.hpp"
#include "excurse/deform.hpp"
#include "excurse/mean_table.hpp"

#include "json.hpp"

namespace excurse::cli {

using Json = nlohmann::ordered_json;

struct GridConfig {
    Vec2 lower{0.0, 0.0};
    Vec2 upper{10.0, 10.0};
    double spacing = 0.2;
};

struct TableConfig {
    std::string mode = "analytic";
    /// Uniform partition start + k * step, k < count.
    double sigma_start = 0.0;
    double sigma_step = 0.25;
    int sigma_count = 0;
    /// Explicit domains, used in addition to those generated from sigma.
    std::vector<TableDomain> domains;
    double field_spacing = 0.2;
    double domain_spacing = 0.2;
};

struct IdentifyConfig {
    std::string table;
    std::string method = "linear";
    double s = 1.0;
    double t = 1.0;
    std::optional<std::array<int, 2>> signs;
};

struct SpiralConfig {
    double r0 = 2.0;
    double phi0 = 0.0;
    std::vector<int> schedule{8, 12, 16, 24, 32};
    double pixel = 0.0;
    bool segments = true;
};

struct IsotropyConfig {
    double s = 2.0;
    double t = 1.0;
    Vec2 translation{0.5, 0.5};
    int angles = 16;
    std::string mode = "both";
    double tolerance = -1.0;
};

struct ExperimentConfig {
    Json model = Json{{"kind", "gaussian"}, {"parameter", 0.0}};
    Json deformation = Json{{"kind", "identity"}};
    GridConfig grid;
    std::vector<double> levels{1.0};
    int replications = 100;
    std::uint64_t seed = 0;
    std::string output = "out";
    TableConfig table;
    IdentifyConfig identify;
    SpiralConfig spiral;
    IsotropyConfig isotropy;

    /// Every field, defaults included.
    Json to_json() const;
    static ExperimentConfig from_json(const Json& j);

    /// FNV-1a 64 of the canonical dump, output directory excluded; 16 hex digits.
    std::string hash() const;

    CovarianceModel covariance() const;
    Deformation build_deformation() const;
    std::vector<double> sigma() const;
    /// Domains from sigma (every hseg, vseg and rect with nonzero sides)
    /// followed by the explicit ones.
    std::vector<TableDomain> table_domains() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

Deformation deformation_from_json(const Json& j);
CovarianceModel covariance_from_json(const Json& j);

}  // namespace excurse::cli
