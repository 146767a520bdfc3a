#include "commands.hpp"

#include <Eigen/LU>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "excurse/csv.hpp"
#include "excurse/error.hpp"
#include "excurse/excursion.hpp"
#include "excurse/field_sim.hpp"
#include "excurse/identify.hpp"
#include "excurse/parallel.hpp"
#include "excurse/rng.hpp"
#include "excurse/spiral_est.hpp"
#include "excurse/version.hpp"

namespace excurse::cli {

namespace {

constexpr double kPi = std::numbers::pi;

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

/// x,y,yerr series for external plotting.
void write_plot(const std::filesystem::path& path, const std::string& hash, const std::vector<double>& x,
                const std::vector<double>& y, const std::vector<double>& yerr) {
    auto out = open_output(path);
    CsvWriter w(out, hash, {"x", "y", "yerr"});
    for (std::size_t k = 0; k < x.size(); ++k) {
        w.cell(x[k]).cell(y[k]).cell(yerr.empty() ? 0.0 : yerr[k]);
        w.end_row();
    }
    finish(out, path);
}

std::string num(double x) { return format_double(x); }

std::string matrix_text(const Mat2& m) {
    return "[[" + num(m(0, 0)) + ", " + num(m(0, 1)) + "], [" + num(m(1, 0)) + ", " + num(m(1, 1)) + "]]";
}

std::string complex_text(std::complex<double> z) {
    return num(z.real()) + (z.imag() < 0 ? " - " : " + ") + num(std::abs(z.imag())) + "i";
}

double level(const Context& ctx) {
    if (ctx.config.levels.empty()) throw DomainError("config: 'levels' must not be empty");
    return ctx.config.levels.front();
}

void header(const Context& ctx, std::ostream& r) {
    r << "excurse " << kVersion << "\n";
    r << "command: " << ctx.command << "\n";
    r << "config-hash: " << ctx.config.hash() << "\n";
    r << "seed: " << ctx.config.seed << "\n";
    r << "threads: " << max_threads() << "\n";
    r << "deformation: " << ctx.config.build_deformation().description() << "\n";
    r << "model: " << ctx.config.covariance().name() << "\n";
}

void emit_report(const Context& ctx, const std::string& text) {
    const auto path = ctx.out / "report.txt";
    auto out = open_output(path);
    out << text;
    finish(out, path);
    if (ctx.report) *ctx.report << text;
}

/// Sigma from the configuration, or the distinct coordinates of the table
/// (with 0) when none is configured.
std::vector<double> partition(const Context& ctx, const MeanECTable& table) {
    auto sigma = ctx.config.sigma();
    if (!sigma.empty()) return sigma;
    std::set<long long> seen{0};
    sigma.push_back(0.0);
    for (const auto& row : table.rows())
        for (double v : {row.domain.s, row.domain.t})
            if (seen.insert(std::llround(v * 1e9)).second) sigma.push_back(v);
    std::sort(sigma.begin(), sigma.end());
    return sigma;
}

std::array<int, 2> parse_signs(const std::string& s) {
    if (s.size() != 2 || (s[0] != '+' && s[0] != '-') || (s[1] != '+' && s[1] != '-'))
        throw DomainError("signs must be two characters from '+' and '-', e.g. '+-'");
    return {s[0] == '+' ? 1 : -1, s[1] == '+' ? 1 : -1};
}

}  // namespace

void validate_for(const Context& ctx) {
    const ExperimentConfig& c = ctx.config;
    c.covariance();
    c.build_deformation();
    for (double u : c.levels)
        if (!std::isfinite(u)) throw DomainError("config: levels must be finite");
    if (c.replications < 0) throw DomainError("config: 'replications' must be >= 0");
    const std::string& cmd = ctx.command;
    if (cmd == "simulate") {
        if (c.levels.empty()) throw DomainError("config: 'levels' must not be empty");
        cell_centered_grid(c.grid.lower, c.grid.upper, c.grid.spacing, 1);
    } else if (cmd == "table") {
        if (c.table.mode != "analytic" && c.table.mode != "montecarlo")
            throw DomainError("config: 'table.mode' must be analytic or montecarlo");
        if (c.table.mode == "montecarlo" && c.replications < 1)
            throw DomainError("config: Monte Carlo tables need replications >= 1");
        c.table_domains();
    } else if (cmd == "identify") {
        const std::string& m = c.identify.method;
        if (m != "linear" && m != "general" && m != "tensorial")
            throw DomainError("config: 'identify.method' must be linear, general or tensorial");
        const double u = level(ctx);
        if (u == 0.0 && m != "tensorial")
            throw DomainError("config: method " + m + " inverts an area and needs a level u != 0");
        if (c.identify.table.empty()) throw DomainError("config: 'identify.table' is required");
        if (c.identify.signs)
            for (int s : *c.identify.signs)
                if (s != 1 && s != -1) throw DomainError("config: signs must be +1 or -1");
        c.sigma();
    } else if (cmd == "estimate-spiral") {
        if (level(ctx) == 0.0) throw DomainError("config: spiral estimation needs a level u != 0");
        if (c.replications < 30) throw DomainError("config: spiral estimation needs replications >= 30");
        if (c.spiral.schedule.size() < 4) throw DomainError("config: the N schedule needs at least 4 values");
        for (int n : c.spiral.schedule)
            if (n < 1) throw DomainError("config: schedule entries must be positive");
        if (!(c.spiral.r0 > 0.0)) throw DomainError("config: spiral point radius must be > 0");
    } else if (cmd == "verify-isotropy") {
        const std::string& m = c.isotropy.mode;
        if (m != "analytic" && m != "jacobian" && m != "both")
            throw DomainError("config: 'isotropy.mode' must be analytic, jacobian or both");
        if (c.isotropy.angles < 2) throw DomainError("config: 'isotropy.angles' must be >= 2");
        if (c.isotropy.s == 0.0 || c.isotropy.t == 0.0) throw DomainError("config: isotropy rectangle is degenerate");
        level(ctx);
    }

    std::error_code ec;
    std::filesystem::create_directories(ctx.out, ec);
    if (ec) throw IoError("cannot create output directory '" + ctx.out.string() + "': " + ec.message());
    const auto probe = ctx.out / ".excurse-write-test";
    {
        std::ofstream f(probe);
        if (!f) throw IoError("output directory '" + ctx.out.string() + "' is not writable");
    }
    std::filesystem::remove(probe, ec);
}

void cmd_simulate(const Context& ctx) {
    const ExperimentConfig& c = ctx.config;
    const std::string hash = c.hash();
    const CovarianceModel model = c.covariance();
    const Deformation theta = c.build_deformation();
    const GridSpec target = cell_centered_grid(c.grid.lower, c.grid.upper, c.grid.spacing, 1);
    const bool identity = theta.matrix() && *theta.matrix() == Mat2::Identity();

    std::optional<FieldSimulator> sim;
    if (c.replications > 0) {
        if (identity) {
            sim.emplace(target, model);
        } else {
            Vec2 lo = Vec2::Constant(INFINITY), hi = Vec2::Constant(-INFINITY);
            for (int i = 0; i < target.rows; ++i)
                for (int j = 0; j < target.cols; ++j) {
                    const Vec2 y = theta.eval(target.point(i, j));
                    lo = lo.cwiseMin(y);
                    hi = hi.cwiseMax(y);
                }
            const double h = c.grid.spacing;
            GridSpec spec;
            spec.spacing = h;
            spec.origin = lo - Vec2::Constant(3.0 * h);
            spec.cols = static_cast<int>(std::ceil((hi.x() - lo.x()) / h)) + 7;
            spec.rows = static_cast<int>(std::ceil((hi.y() - lo.y()) / h)) + 7;
            sim.emplace(spec, model);
        }
    }

    std::vector<EulerRecord> records;
    const int width = std::max(4, static_cast<int>(std::to_string(std::max(c.replications - 1, 0)).size()));
    for (int r = 0; r < c.replications; ++r) {
        const std::uint64_t seed = replication_seed(c.seed, static_cast<std::uint64_t>(r));
        GridField field;
        if (identity) {
            field = sim->simulate(seed);
        } else {
            field = deformed_field(sim->simulate_sample(seed), theta, target);
            field.seed = seed;
            field.model = model;
        }
        std::ostringstream name;
        name << "field_" << std::setw(width) << std::setfill('0') << r << ".gfd";
        write_gfd(ctx.out / name.str(), field);
        for (double u : c.levels) records.push_back({seed, u, "grid", measure_lattice(field, u, 1)});
    }
    const auto path = ctx.out / "summary.csv";
    auto out = open_output(path);
    write_euler_csv(out, hash, records);
    finish(out, path);

    std::ostringstream r;
    header(ctx, r);
    r << "fields written: " << c.replications << "\n";
    if (sim) {
        const auto& rep = sim->report();
        r << "embedding torus: " << rep.torus_rows << " x " << rep.torus_cols << " (pad " << num(rep.pad_factor)
          << ", clipped eigenvalues " << rep.clipped_eigenvalues << ")\n";
    }
    for (double u : c.levels) {
        std::vector<double> chi, phi;
        for (const auto& rec : records)
            if (rec.u == u) {
                chi.push_back(static_cast<double>(rec.stats.chi));
                phi.push_back(rec.stats.phi_hat);
            }
        if (chi.size() < 2) continue;
        const auto sc = summarize(chi), sp = summarize(phi);
        r << "u = " << num(u) << ": mean chi " << num(sc.mean) << " +- " << num(sc.std_err) << ", mean phi_hat "
          << num(sp.mean) << " +- " << num(sp.std_err) << "\n";
    }
    emit_report(ctx, r.str());
}

void cmd_table(const Context& ctx) {
    const ExperimentConfig& c = ctx.config;
    const Deformation theta = c.build_deformation();
    const auto domains = c.table_domains();
    MeanECTable table;
    if (!domains.empty() && !c.levels.empty()) {
        if (c.table.mode == "analytic") {
            table = build_analytic_table(theta, domains, c.levels);
        } else {
            MonteCarloOptions mc;
            mc.model = c.covariance();
            mc.field_spacing = c.table.field_spacing;
            mc.domain_spacing = c.table.domain_spacing;
            mc.replications = c.replications;
            mc.seed = c.seed;
            table = build_monte_carlo_table(theta, domains, c.levels, mc);
        }
    }
    const auto path = ctx.out / "mean_table.csv";
    auto out = open_output(path);
    table.write_csv(out, c.hash());
    finish(out, path);

    std::ostringstream r;
    header(ctx, r);
    r << "mode: " << c.table.mode << "\n";
    r << "domains: " << domains.size() << ", levels: " << c.levels.size() << ", entries: " << table.size() << "\n";
    emit_report(ctx, r.str());
}

void cmd_identify(const Context& ctx) {
    const ExperimentConfig& c = ctx.config;
    const std::string hash = c.hash();
    const double u = level(ctx);
    const MeanECTable table = MeanECTable::read_csv(c.identify.table);
    std::ostringstream r;
    header(ctx, r);
    r << "table: " << c.identify.table << " (" << table.size() << " entries)\n";
    r << "method: " << c.identify.method << ", u = " << num(u) << "\n";

    if (c.identify.method == "linear") {
        const auto id = identify_linear(table, c.identify.s, c.identify.t, u);
        const auto path = ctx.out / "linear.csv";
        auto out = open_output(path);
        CsvWriter w(out, hash, {"a", "b", "c", "err_a", "err_b", "err_c", "delta_1", "delta_2", "mu_re", "mu_im_1",
                                "mu_im_2", "mu_modulus"});
        w.cell(id.abc.a).cell(id.abc.b).cell(id.abc.c);
        w.cell(id.std_err[0]).cell(id.std_err[1]).cell(id.std_err[2]);
        w.cell(id.delta[0]).cell(id.delta[1]);
        w.cell(id.mu.values[0].real()).cell(id.mu.values[0].imag()).cell(id.mu.values[1].imag()).cell(id.mu.modulus);
        w.end_row();
        finish(out, path);
        r << "a = " << num(id.abc.a) << " +- " << num(id.std_err[0]) << "\n";
        r << "b = " << num(id.abc.b) << " +- " << num(id.std_err[1]) << "\n";
        r << "c = " << num(id.abc.c) << " +- " << num(id.std_err[2]) << "\n";
        r << "representative 1: " << matrix_text(id.matrices.representatives[0]) << "\n";
        r << "representative 2: " << matrix_text(id.matrices.representatives[1]) << "\n";
        r << "mu 1: " << complex_text(id.mu.values[0]) << "\n";
        r << "mu 2: " << complex_text(id.mu.values[1]) << "\n";
        r << "|mu|: " << num(id.mu.modulus) << "\n";
    } else if (c.identify.method == "general") {
        const auto sigma = partition(ctx, table);
        const ABCField field = recover_abc_field(table, sigma, u);
        const auto path = ctx.out / "abc_field.csv";
        auto out = open_output(path);
        field.write_csv(out, hash);
        finish(out, path);
        std::size_t flagged = 0;
        for (const auto& n : field.nodes) flagged += n.flagged;
        r << "nodes: " << field.nodes.size() << ", flagged: " << flagged << "\n";
    } else {
        const auto sigma = partition(ctx, table);
        const auto id = identify_tensorial(table, sigma, u, c.identify.signs);
        const auto path = ctx.out / "tensorial.csv";
        auto out = open_output(path);
        CsvWriter w(out, hash, {"s", "d1", "err1", "d2", "err2", "theta1", "theta2"});
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t k = 0; k < id.sigma.size(); ++k) {
            w.cell(id.sigma[k]).cell(id.d1[k]).cell(id.err1[k]).cell(id.d2[k]).cell(id.err2[k]);
            w.cell(id.theta1.empty() ? nan : id.theta1[k]).cell(id.theta2.empty() ? nan : id.theta2[k]);
            w.end_row();
        }
        finish(out, path);
        if (id.magnitudes_only)
            r << "warning: no signs given; only |theta_1'| and |theta_2'| are identified (magnitudes only)\n";
        std::vector<double> s, d1, d2;
        for (std::size_t k = 0; k < id.sigma.size(); ++k)
            if (id.sigma[k] > 0.0) {
                s.push_back(id.sigma[k]);
                d1.push_back(id.d1[k]);
                d2.push_back(id.d2[k]);
            }
        if (s.size() >= 2) {
            const auto f1 = fit_power_law(s, d1), f2 = fit_power_law(s, d2);
            r << "power-law fit theta_1: alpha = " << num(f1.alpha) << " (rms residual " << num(f1.rms_residual)
              << ")\n";
            r << "power-law fit theta_2: alpha = " << num(f2.alpha) << " (rms residual " << num(f2.rms_residual)
              << ")\n";
        }
    }
    emit_report(ctx, r.str());
}

void cmd_estimate_spiral(const Context& ctx) {
    const ExperimentConfig& c = ctx.config;
    const std::string hash = c.hash();
    const Deformation theta = c.build_deformation();
    SpiralEstimationOptions opt;
    opt.schedule = c.spiral.schedule;
    opt.replications = c.replications;
    opt.u = level(ctx);
    opt.seed = c.seed;
    opt.model = c.covariance();
    opt.pixel = c.spiral.pixel;
    opt.segments = c.spiral.segments;
    const EstimatorRun run = run_spiral_estimation(theta, c.spiral.r0, c.spiral.phi0, opt);
    const DetJacFit fit = regress_detjac(run);

    const auto path = ctx.out / "estimator.csv";
    auto out = open_output(path);
    write_estimator_csv(out, hash, run, fit);
    finish(out, path);

    std::vector<double> n, z, ze, nv;
    for (const auto& l : run.levels) {
        n.push_back(l.N);
        z.push_back(l.z_stats.mean);
        ze.push_back(l.z_stats.std_err);
    }
    write_plot(ctx.out / "plot_mean_z.csv", hash, n, z, ze);
    write_plot(ctx.out / "plot_normalized_var.csv", hash, n, fit.normalized_var, {});
    std::vector<double> cn;
    if (c.spiral.segments) {
        cn = column_norm_estimates(run);
        write_plot(ctx.out / "plot_column_norm.csv", hash, n, cn, {});
    }

    std::ostringstream r;
    header(ctx, r);
    const Vec2 x = from_polar(c.spiral.r0, c.spiral.phi0);
    r << "point: r0 = " << num(c.spiral.r0) << ", phi0 = " << num(c.spiral.phi0) << "\n";
    r << "replications: " << c.replications << ", pixel: " << num(run.pixel) << "\n";
    r << "estimated |det J|: " << num(fit.detjac) << "\n";
    r << "configured |det J| at the point: " << num(std::abs(theta.jacobian_unchecked(x).determinant())) << "\n";
    const auto [lo, hi] = std::minmax_element(fit.normalized_var.begin(), fit.normalized_var.end());
    r << "normalized variance range: [" << num(*lo) << ", " << num(*hi) << "]\n";
    if (!cn.empty()) r << "||J^1|| estimate at largest N: " << num(cn.back()) << "\n";
    emit_report(ctx, r.str());
}

void cmd_verify_isotropy(const Context& ctx) {
    const ExperimentConfig& c = ctx.config;
    const std::string hash = c.hash();
    const Deformation theta = c.build_deformation();
    const Rect rect = Rect::make(c.isotropy.s, c.isotropy.t, 0.0, c.isotropy.translation);
    std::vector<double> angles;
    for (int k = 0; k < c.isotropy.angles; ++k) angles.push_back(2.0 * kPi * k / c.isotropy.angles);
    const double u = level(ctx);

    std::vector<IsotropyReport> reports;
    if (c.isotropy.mode != "jacobian")
        reports.push_back(chi_isotropy_test(theta, rect, angles, u, IsotropyMode::Analytic, c.isotropy.tolerance));
    if (c.isotropy.mode != "analytic")
        reports.push_back(chi_isotropy_test(theta, rect, angles, u, IsotropyMode::Jacobian, c.isotropy.tolerance));

    const auto path = ctx.out / "isotropy.csv";
    auto out = open_output(path);
    CsvWriter w(out, hash, {"mode", "angle", "value"});
    for (const auto& rep : reports)
        for (std::size_t k = 0; k < angles.size(); ++k) {
            w.cell(rep.mode == IsotropyMode::Analytic ? "analytic" : "jacobian").cell(angles[k]).cell(rep.values[k]);
            w.end_row();
        }
    finish(out, path);
    if (!reports.empty() && reports.front().mode == IsotropyMode::Analytic)
        write_plot(ctx.out / "plot_isotropy.csv", hash, angles, reports.front().values, {});

    std::ostringstream r;
    header(ctx, r);
    for (const auto& rep : reports) {
        r << (rep.mode == IsotropyMode::Analytic ? "analytic" : "jacobian") << ": "
          << (rep.pass ? "PASS" : "FAIL") << " (max relative deviation " << num(rep.max_deviation)
          << ", tolerance " << num(rep.tolerance) << ", worst angle " << num(rep.worst_angle) << ")\n";
    }
    const auto diag = is_spiral(theta);
    r << "spiral probe: " << (diag.is_spiral ? "radial" : "not radial") << " (worst radius " << num(diag.worst_r)
      << ", spread " << num(diag.worst_range) << ", max distortion " << num(diag.max_distortion) << ")\n";
    emit_report(ctx, r.str());
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Excursion sets of deformed Gaussian random fields", "excurse"};
    app.fallthrough();
    app.require_subcommand(0, 1);
    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = 0;
    bool print_config = false;
    app.add_option("--config", config_path, "JSON configuration file");
    auto* seed_opt = app.add_option("--seed", seed, "Master seed");
    auto* out_opt = app.add_option("--out", out_dir, "Output directory");
    app.add_option("--threads", threads, "Worker thread cap (0 = hardware)")->check(CLI::NonNegativeNumber);
    app.add_flag("--print-config", print_config, "Print the effective configuration and exit");

    auto* sim = app.add_subcommand("simulate", "Simulate fields and their excursion statistics");
    int sim_reps = -1;
    sim->add_option("--reps", sim_reps, "Number of fields");

    auto* tab = app.add_subcommand("table", "Build a mean modified Euler characteristic table");
    std::string table_mode;
    tab->add_option("--mode", table_mode, "analytic or montecarlo");

    auto* idf = app.add_subcommand("identify", "Identify a deformation from a mean table");
    std::string id_table, id_method, id_signs;
    double id_u = 0.0;
    idf->add_option("--table", id_table, "Mean table CSV");
    idf->add_option("--method", id_method, "linear, general or tensorial");
    auto* id_u_opt = idf->add_option("--u", id_u, "Level");
    idf->add_option("--signs", id_signs, "Signs of the tensorial components, e.g. ++");

    auto* est = app.add_subcommand("estimate-spiral", "Spiral estimators from single realizations");
    std::vector<double> est_point;
    std::vector<int> est_schedule;
    int est_reps = -1;
    double est_u = 0.0;
    est->add_option("--point", est_point, "r0,phi0")->delimiter(',')->expected(2);
    est->add_option("--schedule", est_schedule, "N values")->delimiter(',');
    est->add_option("--reps", est_reps, "Replications");
    auto* est_u_opt = est->add_option("--u", est_u, "Level");

    auto* iso = app.add_subcommand("verify-isotropy", "Check rotation invariance of the expected Euler characteristic");
    std::string iso_mode;
    iso->add_option("--mode", iso_mode, "analytic, jacobian or both");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    Context ctx;
    try {
        if (!config_path.empty()) ctx.config = load_config(config_path);
        ExperimentConfig& c = ctx.config;
        if (*seed_opt) c.seed = seed;
        if (*out_opt) c.output = out_dir;
        if (sim_reps >= 0) c.replications = sim_reps;
        if (!table_mode.empty()) c.table.mode = table_mode;
        if (!id_table.empty()) c.identify.table = id_table;
        if (!id_method.empty()) c.identify.method = id_method;
        if (*id_u_opt) c.levels = {id_u};
        if (!id_signs.empty()) c.identify.signs = parse_signs(id_signs);
        if (!est_point.empty()) {
            c.spiral.r0 = est_point[0];
            c.spiral.phi0 = est_point[1];
        }
        if (!est_schedule.empty()) c.spiral.schedule = est_schedule;
        if (est_reps >= 0) c.replications = est_reps;
        if (*est_u_opt) c.levels = {est_u};
        if (!iso_mode.empty()) c.isotropy.mode = iso_mode;

        if (print_config) {
            out << c.to_json().dump(2) << "\n";
            return kOk;
        }
        if (app.get_subcommands().empty()) {
            err << app.help();
            return kConfigError;
        }
        ctx.command = app.get_subcommands().front()->get_name();
        ctx.out = c.output;
        ctx.threads = threads;
        ctx.report = &out;
        set_max_threads(threads);
        validate_for(ctx);
        if (ctx.command == "simulate") cmd_simulate(ctx);
        else if (ctx.command == "table") cmd_table(ctx);
        else if (ctx.command == "identify") cmd_identify(ctx);
        else if (ctx.command == "estimate-spiral") cmd_estimate_spiral(ctx);
        else cmd_verify_isotropy(ctx);
        return kOk;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kNumericFailure;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return kIoFailure;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "i/o error: " << e.what() << "\n";
        return kIoFailure;
    } catch (const std::exception& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kNumericFailure;
    }
}

}  // namespace excurse::cli
