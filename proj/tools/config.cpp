#include "config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "excurse/error.hpp"

namespace excurse::cli {

namespace {

Json vec(const Vec2& v) { return Json::array({v.x(), v.y()}); }

Vec2 to_vec(const Json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw DomainError("config: '" + what + "' must be a pair of numbers");
    return {j[0].get<double>(), j[1].get<double>()};
}

template <class T>
void read(const Json& obj, const char* key, T& out, const std::string& section) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw DomainError("config: bad value for '" + section + key + "'");
    }
}

void check_keys(const Json& obj, std::initializer_list<const char*> keys, const std::string& section) {
    if (!obj.is_object()) throw DomainError("config: section '" + section + "' must be an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : obj.items())
        if (!allowed.count(k)) throw DomainError("config: unknown key '" + section + k + "'");
}

ProbeBox probe_box(const Json& j) {
    ProbeBox box;
    if (j.contains("probe_box")) {
        const Json& b = j.at("probe_box");
        check_keys(b, {"lower", "upper"}, "probe_box.");
        if (b.contains("lower")) box.lower = to_vec(b.at("lower"), "probe_box.lower");
        if (b.contains("upper")) box.upper = to_vec(b.at("upper"), "probe_box.upper");
    }
    return box;
}

std::string text(const Json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_string())
        throw DomainError(std::string("config: deformation needs a string '") + key + "'");
    return j.at(key).get<std::string>();
}

}  // namespace

CovarianceModel covariance_from_json(const Json& j) {
    check_keys(j, {"kind", "parameter"}, "model.");
    std::string kind = "gaussian";
    double parameter = 0.0;
    read(j, "kind", kind, "model.");
    read(j, "parameter", parameter, "model.");
    return covariance_from_name(kind, parameter);
}

Deformation deformation_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
        throw DomainError("config: deformation needs a 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "identity") {
        check_keys(j, {"kind"}, "deformation.");
        return Deformation::identity();
    }
    if (kind == "linear") {
        check_keys(j, {"kind", "matrix", "probe_box"}, "deformation.");
        const Json& m = j.contains("matrix") ? j.at("matrix") : Json();
        if (!m.is_array() || m.size() != 2) throw DomainError("config: linear deformation needs a 2x2 'matrix'");
        Mat2 a;
        for (int i = 0; i < 2; ++i) {
            const Vec2 row = to_vec(m[i], "matrix");
            a(i, 0) = row.x();
            a(i, 1) = row.y();
        }
        return Deformation::linear(a, probe_box(j));
    }
    if (kind == "rotation") {
        check_keys(j, {"kind", "angle", "factor"}, "deformation.");
        double angle = 0.0, factor = 1.0;
        read(j, "angle", angle, "deformation.");
        read(j, "factor", factor, "deformation.");
        return Deformation::rotation(angle, factor);
    }
    if (kind == "tensorial") {
        check_keys(j, {"kind", "theta1", "theta2", "probe_box"}, "deformation.");
        return Deformation::tensorial(ScalarFunction::from_expression(text(j, "theta1")),
                                      ScalarFunction::from_expression(text(j, "theta2")), probe_box(j));
    }
    if (kind == "spiral") {
        check_keys(j, {"kind", "f", "g", "probe_box"}, "deformation.");
        SpiralSpec spec{ScalarFunction::from_expression(text(j, "f")),
                        j.contains("g") ? ScalarFunction::from_expression(text(j, "g")) : ScalarFunction::constant(0.0)};
        return Deformation::spiral(std::move(spec), probe_box(j));
    }
    if (kind == "composite") {
        check_keys(j, {"kind", "parts", "probe_box"}, "deformation.");
        if (!j.contains("parts") || !j.at("parts").is_array() || j.at("parts").empty())
            throw DomainError("config: composite deformation needs a non-empty 'parts' list");
        std::vector<Deformation> parts;
        for (const Json& p : j.at("parts")) parts.push_back(deformation_from_json(p));
        return Deformation::composite(std::move(parts), probe_box(j));
    }
    throw DomainError("config: unknown deformation kind '" + kind + "'");
}

Json ExperimentConfig::to_json() const {
    Json domains = Json::array();
    for (const auto& d : table.domains) domains.push_back({{"kind", to_string(d.kind)}, {"s", d.s}, {"t", d.t}});
    Json signs = nullptr;
    if (identify.signs) signs = Json::array({(*identify.signs)[0], (*identify.signs)[1]});
    return Json{
        {"seed", seed},
        {"replications", replications},
        {"levels", levels},
        {"output", output},
        {"model", model},
        {"deformation", deformation},
        {"grid", {{"lower", vec(grid.lower)}, {"upper", vec(grid.upper)}, {"spacing", grid.spacing}}},
        {"table",
         {{"mode", table.mode},
          {"sigma", {{"start", table.sigma_start}, {"step", table.sigma_step}, {"count", table.sigma_count}}},
          {"domains", domains},
          {"field_spacing", table.field_spacing},
          {"domain_spacing", table.domain_spacing}}},
        {"identify",
         {{"table", identify.table}, {"method", identify.method}, {"s", identify.s}, {"t", identify.t}, {"signs", signs}}},
        {"spiral",
         {{"point", {spiral.r0, spiral.phi0}},
          {"schedule", spiral.schedule},
          {"pixel", spiral.pixel},
          {"segments", spiral.segments}}},
        {"isotropy",
         {{"s", isotropy.s},
          {"t", isotropy.t},
          {"translation", vec(isotropy.translation)},
          {"angles", isotropy.angles},
          {"mode", isotropy.mode},
          {"tolerance", isotropy.tolerance}}},
    };
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
    ExperimentConfig c;
    check_keys(j,
               {"seed", "replications", "levels", "output", "model", "deformation", "grid", "table", "identify",
                "spiral", "isotropy"},
               "");
    read(j, "seed", c.seed, "");
    read(j, "replications", c.replications, "");
    read(j, "levels", c.levels, "");
    read(j, "output", c.output, "");
    if (j.contains("model")) c.model = j.at("model");
    if (j.contains("deformation")) c.deformation = j.at("deformation");
    if (j.contains("grid")) {
        const Json& g = j.at("grid");
        check_keys(g, {"lower", "upper", "spacing"}, "grid.");
        if (g.contains("lower")) c.grid.lower = to_vec(g.at("lower"), "grid.lower");
        if (g.contains("upper")) c.grid.upper = to_vec(g.at("upper"), "grid.upper");
        read(g, "spacing", c.grid.spacing, "grid.");
    }
    if (j.contains("table")) {
        const Json& t = j.at("table");
        check_keys(t, {"mode", "sigma", "domains", "field_spacing", "domain_spacing"}, "table.");
        read(t, "mode", c.table.mode, "table.");
        read(t, "field_spacing", c.table.field_spacing, "table.");
        read(t, "domain_spacing", c.table.domain_spacing, "table.");
        if (t.contains("sigma")) {
            const Json& s = t.at("sigma");
            check_keys(s, {"start", "step", "count"}, "table.sigma.");
            read(s, "start", c.table.sigma_start, "table.sigma.");
            read(s, "step", c.table.sigma_step, "table.sigma.");
            read(s, "count", c.table.sigma_count, "table.sigma.");
        }
        if (t.contains("domains")) {
            if (!t.at("domains").is_array()) throw DomainError("config: 'table.domains' must be a list");
            for (const Json& d : t.at("domains")) {
                check_keys(d, {"kind", "s", "t"}, "table.domains[].");
                TableDomain dom;
                std::string kind = "rect";
                read(d, "kind", kind, "table.domains[].");
                dom.kind = domain_kind_from_string(kind);
                read(d, "s", dom.s, "table.domains[].");
                read(d, "t", dom.t, "table.domains[].");
                c.table.domains.push_back(dom);
            }
        }
    }
    if (j.contains("identify")) {
        const Json& i = j.at("identify");
        check_keys(i, {"table", "method", "s", "t", "signs"}, "identify.");
        read(i, "table", c.identify.table, "identify.");
        read(i, "method", c.identify.method, "identify.");
        read(i, "s", c.identify.s, "identify.");
        read(i, "t", c.identify.t, "identify.");
        if (i.contains("signs") && !i.at("signs").is_null()) {
            const Json& s = i.at("signs");
            if (!s.is_array() || s.size() != 2) throw DomainError("config: 'identify.signs' must be two of +1/-1");
            c.identify.signs = std::array<int, 2>{s[0].get<int>(), s[1].get<int>()};
        }
    }
    if (j.contains("spiral")) {
        const Json& s = j.at("spiral");
        check_keys(s, {"point", "schedule", "pixel", "segments"}, "spiral.");
        if (s.contains("point")) {
            const Vec2 p = to_vec(s.at("point"), "spiral.point");
            c.spiral.r0 = p.x();
            c.spiral.phi0 = p.y();
        }
        read(s, "schedule", c.spiral.schedule, "spiral.");
        read(s, "pixel", c.spiral.pixel, "spiral.");
        read(s, "segments", c.spiral.segments, "spiral.");
    }
    if (j.contains("isotropy")) {
        const Json& s = j.at("isotropy");
        check_keys(s, {"s", "t", "translation", "angles", "mode", "tolerance"}, "isotropy.");
        read(s, "s", c.isotropy.s, "isotropy.");
        read(s, "t", c.isotropy.t, "isotropy.");
        if (s.contains("translation")) c.isotropy.translation = to_vec(s.at("translation"), "isotropy.translation");
        read(s, "angles", c.isotropy.angles, "isotropy.");
        read(s, "mode", c.isotropy.mode, "isotropy.");
        read(s, "tolerance", c.isotropy.tolerance, "isotropy.");
    }
    return c;
}

std::string ExperimentConfig::hash() const {
    Json j = to_json();
    j.erase("output");
    const std::string dump = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

CovarianceModel ExperimentConfig::covariance() const { return covariance_from_json(model); }

Deformation ExperimentConfig::build_deformation() const { return deformation_from_json(deformation); }

std::vector<double> ExperimentConfig::sigma() const {
    if (table.sigma_count < 0) throw DomainError("config: 'table.sigma.count' must be >= 0");
    if (table.sigma_count > 0 && !(table.sigma_step > 0.0)) throw DomainError("config: 'table.sigma.step' must be > 0");
    std::vector<double> s;
    for (int k = 0; k < table.sigma_count; ++k) s.push_back(table.sigma_start + k * table.sigma_step);
    return s;
}

std::vector<TableDomain> ExperimentConfig::table_domains() const {
    std::vector<TableDomain> out;
    const auto sig = sigma();
    for (double t : sig)
        for (double s : sig) {
            if (s != 0.0) out.push_back({DomainKind::HSeg, s, t});
            if (t != 0.0) out.push_back({DomainKind::VSeg, s, t});
            if (s != 0.0 && t != 0.0) out.push_back({DomainKind::Rect, s, t});
        }
    out.insert(out.end(), table.domains.begin(), table.domains.end());
    for (const auto& d : out) d.validate();
    return out;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    Json j;
    try {
        j = Json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw DomainError("config '" + path.string() + "': " + e.what());
    }
    return ExperimentConfig::from_json(j);
}

}  // namespace excurse::cli
