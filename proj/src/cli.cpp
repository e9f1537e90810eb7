#include "critheat/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "critheat/ansatz.hpp"
#include "critheat/bsystem.hpp"
#include "critheat/checks.hpp"
#include "critheat/dynamics.hpp"
#include "critheat/errors.hpp"
#include "critheat/green.hpp"
#include "critheat/linop.hpp"
#include "critheat/pdesim.hpp"

namespace critheat {

using nlohmann::json;

namespace {

const char* const kCommands[] = {"constants", "gmatrix", "bsolve", "spectrum", "residual", "dynamics", "simulate"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// A time series: CSV by default, or a JSON object of columns.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void write_csv(std::ostream& os) const {
        for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
        os << '\n';
        for (const auto& r : rows) {
            for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
            os << '\n';
        }
    }

    json to_json() const {
        json j = json::object();
        for (std::size_t c = 0; c < columns.size(); ++c) {
            json col = json::array();
            for (const auto& r : rows) {
                // numeric cells go back to numbers; the joined coordinates stay strings
                char* end = nullptr;
                const double v = std::strtod(r[c].c_str(), &end);
                if (end && *end == '\0' && !r[c].empty()) col.push_back(v);
                else col.push_back(r[c]);
            }
            j[columns[c]] = std::move(col);
        }
        return j;
    }
};

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("io", "cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("parse", path + ": " + e.what());
    }
}

template <class T>
T field(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("parse", std::string("field '") + key + "' has the wrong type");
    }
}

template <class T>
T required(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError("parse", std::string("missing field '") + key + "'");
    return field<T>(j, key, T{});
}

std::vector<Point> read_points(const json& j, const char* key, int n) {
    const auto pts = required<std::vector<std::vector<double>>>(j, key);
    for (const auto& p : pts) {
        if (static_cast<int>(p.size()) != n) throw ConfigError("dimension-mismatch", "point has wrong dimension");
    }
    return pts;
}

/// Anchors for the residual and dynamics commands when the input names none.
std::vector<Point> default_pair(int n) {
    std::vector<Point> q(2, Point(n, 0.0));
    q[0][0] = 0.7;
    q[1][0] = -0.6;
    q[1][1] = 0.2;
    return q;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

struct Outputs {
    const RunConfig& cfg;
    std::ostream& out;

    std::ostream& open(std::ofstream& file, const std::string& path) const {
        if (path.empty()) return out;
        file.open(path);
        if (!file) throw ConfigError("io", "cannot write " + path);
        return file;
    }

    void json_only(const json& j) const {
        if (cfg.format == "csv") throw ConfigError("format", cfg.command + " writes JSON only");
        std::ofstream f;
        open(f, cfg.output) << j.dump(2) << '\n';
    }

    /// Series to the primary output, the report to --summary (or stdout when
    /// the series went to a file).
    void series(const Table& t, const json& report) const {
        std::ofstream f;
        std::ostream& os = open(f, cfg.output);
        if (cfg.format == "json") {
            json j = t.to_json();
            j["report"] = report;
            os << j.dump(2) << '\n';
            return;
        }
        t.write_csv(os);
        if (!cfg.summary.empty()) {
            std::ofstream s;
            open(s, cfg.summary) << report.dump(2) << '\n';
        } else if (!cfg.output.empty()) {
            out << report.dump(2) << '\n';
        }
    }
};

int report_checks(const std::vector<CheckReport>& reports, std::ostream& out) {
    json j = json::array();
    bool ok = true;
    for (const auto& r : reports) {
        json items = json::array();
        for (const auto& it : r.items) {
            items.push_back({{"label", it.label},
                             {"value", it.value},
                             {"relation", it.relation},
                             {"threshold", it.threshold},
                             {"passed", it.passed},
                             {"informational", it.informational}});
        }
        j.push_back({{"criterion", r.id},
                     {"name", r.name},
                     {"passed", r.passed()},
                     {"seconds", r.seconds},
                     {"note", r.note},
                     {"items", items}});
        ok = ok && r.passed();
    }
    out << json{{"checks", j}, {"passed", ok}}.dump(2) << '\n';
    return ok ? exit_ok : exit_check_failed;
}

// --- subcommands -----------------------------------------------------------

json spectrum_json(int n, const std::vector<double>& radii) {
    const Dim d = compute_constants(n);
    const EigenPair ep = negative_eigenpair(d, eigen_grid(n, 100.0));
    json coer = json::array();
    for (double R : radii) {
        const auto c = coercivity_constant(d, R, ep);
        coer.push_back({{"R", R},
                        {"lambdaR", c.lambda_R},
                        {"unconstrained", c.unconstrained},
                        {"product_R_pow", c.lambda_R * std::pow(R, n - 2)}});
    }
    // r^k p₀ with k = min(n−4, 2) should stay bounded over the last decade of the grid
    const auto cor = corrector_p0(d, second_solution(d, fundamental_grid(n)));
    const int k = std::min(n - 4, 2);
    double sup = 0;
    for (double r = 1e4; r <= 1e5; r *= 1.1) sup = std::max(sup, std::pow(r, k) * std::abs(cor.profile.value(r)));
    const double at10 = std::pow(10.0, k) * std::abs(cor.profile.value(10.0));
    const double ratio = sup / at10;
    return {{"n", n},
            {"lambda0", ep.lambda0},
            {"shooting_lambda0", ep.shooting_lambda0},
            {"second_eigenvalue", ep.second_eigenvalue},
            {"truncation_shift", ep.truncation_shift},
            {"coercivity", coer},
            {"p0_decay_check",
             {{"exponent", k}, {"sup_ratio_last_decade", ratio}, {"bounded", ratio > 0.5 && ratio < 2.0},
              {"orthogonality", cor.orthogonality}}}};
}

void run_residual(const RunConfig& cfg, const Outputs& io) {
    const json in = cfg.input.empty() ? json::object() : read_json(cfg.input);
    const int n = field<int>(in, "n", cfg.n);
    const Dim d = compute_constants(n);
    const BallDomain dom(d, field<double>(in, "R", 1.0));
    const auto q = in.contains("points") ? read_points(in, "points", n) : default_pair(n);
    const auto gm = interaction_matrix(dom, q);
    const auto bs = solve_heights(gm);
    const Ansatz ansatz(d);
    const auto ts = field<std::vector<double>>(in, "t_values", {1e3, 4e3, 1.6e4});
    std::vector<Point> probes{Point(n, 0.0)};
    if (in.contains("probe_points")) probes = read_points(in, "probe_points", n);
    if (ts.empty() || probes.empty()) throw ConfigError("parse", "t_values and probe_points must be nonempty");

    ResidualOptions corrected, plain;
    corrected.space = plain.space = SpatialMode::analytic;
    plain.corrected = false;
    const double predicted = -far_field_mu0_exponent(n) / (n - 4.0);
    Table t{{"t", "x", "S_uncorrected", "S_corrected", "predicted_exponent", "fitted_exponent"}, {}};
    for (const auto& x : probes) {
        std::string xs;
        for (std::size_t c = 0; c < x.size(); ++c) xs += (c ? ";" : "") + fmt(x[c]);
        std::vector<double> su, sc;
        for (double tv : ts) {
            const auto c = configuration_at(d, dom, gm, bs, nullptr, nullptr, tv);
            su.push_back(ansatz.residual(c, x, plain));
            sc.push_back(ansatz.residual(c, x, corrected));
        }
        // least-squares slope of log|S_corrected| against log t
        double fitted = std::nan("");
        if (ts.size() >= 2) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (std::size_t i = 0; i < ts.size(); ++i) {
                const double lx = std::log(ts[i]), ly = std::log(std::abs(sc[i]));
                sx += lx;
                sy += ly;
                sxx += lx * lx;
                sxy += lx * ly;
            }
            const double m = static_cast<double>(ts.size());
            fitted = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        }
        for (std::size_t i = 0; i < ts.size(); ++i) {
            t.rows.push_back({fmt(ts[i]), xs, fmt(su[i]), fmt(sc[i]), fmt(predicted), fmt(fitted)});
        }
    }
    io.series(t, {{"n", n}, {"predicted_exponent", predicted}});
}

void run_dynamics(const RunConfig& cfg, const Outputs& io) {
    const json in = cfg.input.empty() ? json::object() : read_json(cfg.input);
    const int n = field<int>(in, "n", cfg.n);
    const Dim d = compute_constants(n);
    const BallDomain dom(d, field<double>(in, "R", 1.0));
    const auto q = in.contains("points") ? read_points(in, "points", n) : default_pair(n);
    const auto gm = interaction_matrix(dom, q);
    const auto bs = solve_heights(gm);
    const std::size_t k = q.size();
    const double t0 = field<double>(in, "t0", 10.0);
    const double t_end = field<double>(in, "t_end", 1e4);
    const int samples = field<int>(in, "samples", 61);
    if (!(t0 > 0 && t_end > t0) || samples < 2) throw ConfigError("parse", "need 0 < t0 < t_end and samples >= 2");
    std::vector<double> d0 = field<std::vector<double>>(in, "lambda_initial", std::vector<double>(k, 1e-3));
    if (d0.size() != k) throw ConfigError("dimension-mismatch", "lambda_initial needs one entry per point");

    const LambdaSystem lam(bs, nullptr, Eigen::Map<const Eigen::VectorXd>(d0.data(), static_cast<Eigen::Index>(k)), t0);
    const XiDrift drift(d, gm, bs);
    Table t;
    t.columns = {"t", "mu0"};
    for (std::size_t j = 0; j < k; ++j) t.columns.push_back("lambda_" + std::to_string(j + 1));
    for (std::size_t j = 0; j < k; ++j) {
        for (int c = 0; c < n; ++c) t.columns.push_back("xi_" + std::to_string(j + 1) + "_" + std::to_string(c + 1));
    }
    for (int i = 0; i < samples; ++i) {
        const double tv = t0 * std::pow(t_end / t0, static_cast<double>(i) / (samples - 1));
        std::vector<std::string> row{fmt(tv), fmt(mu0_of_t(d, tv))};
        const Eigen::VectorXd l = lam.lambda(tv);
        for (std::size_t j = 0; j < k; ++j) row.push_back(fmt(l[static_cast<Eigen::Index>(j)]));
        for (std::size_t j = 0; j < k; ++j) {
            for (double c : drift.xi(j, tv)) row.push_back(fmt(c));
        }
        t.rows.push_back(std::move(row));
    }

    // Z₀-projection of the first bubble with forcing 1/t²
    const double l0 = negative_eigenpair(d, eigen_grid(n, 100.0)).lambda0;
    const ScalarForcing f = [](double s) { return 1.0 / (s * s); };
    const double pt0 = field<double>(in, "projection_t0", 1.0);
    const ProjectionProblem prob(d, l0, bs.b[0], f, pt0);
    const auto st = projection_shoot(d, l0, bs.b[0], f, pt0, prob.horizon(1e9));
    io.series(t, {{"n", n},
                  {"lambda0", l0},
                  {"e0_star", st.e0_star},
                  {"e0_bisected", st.e0_bisected},
                  {"perturbation", st.eps},
                  {"horizon", st.T},
                  {"sup_e_star", st.sup_star},
                  {"growth_factor_plus", st.growth_plus},
                  {"growth_factor_minus", st.growth_minus}});
}

std::function<double(double)> read_profile(const json& in, double R) {
    const std::string name = field<std::string>(in, "profile", "bump");
    if (name == "bump") return default_profile(R);
    if (name == "gaussian") {
        const double w = field<double>(in, "width", 0.25 * R);
        return [w](double r) { return std::exp(-r * r / (w * w)); };
    }
    throw ConfigError("parse", "unknown profile '" + name + "' (bump or gaussian)");
}

json rate_fit_json(const RateFit& f) {
    return {{"available", f.available}, {"slope", f.slope},         {"raw_slope", f.raw_slope},
            {"t_origin", f.t_origin},   {"rms_residual", f.rms_residual}, {"t_begin", f.t_begin},
            {"t_end", f.t_end},         {"mu_begin", f.mu_begin},   {"mu_end", f.mu_end},
            {"samples", f.samples}};
}

Table trajectory(const std::vector<double>& t, const std::vector<double>& s, const std::vector<double>& e,
                 const std::vector<double>& mu) {
    Table tab{{"t", "sup_u", "energy", "mu_proxy"}, {}};
    for (std::size_t i = 0; i < t.size(); ++i) tab.rows.push_back({fmt(t[i]), fmt(s[i]), fmt(e[i]), fmt(mu[i])});
    return tab;
}

void run_simulate(const RunConfig& cfg, const Outputs& io) {
    if (cfg.input.empty()) throw ConfigError("parse", "simulate needs --input with a JSON configuration");
    const json in = read_json(cfg.input);
    const int n = field<int>(in, "n", cfg.n);
    SimConfig sc;
    sc.R = field<double>(in, "R_dom", sc.R);
    sc.nodes = field<std::size_t>(in, "nodes", sc.nodes);
    const auto profile = read_profile(in, sc.R);
    const bool has_alpha = in.contains("alpha"), has_bisect = in.contains("bisect");
    if (has_alpha == has_bisect) throw ConfigError("parse", "give exactly one of 'alpha' and 'bisect'");
    if (has_bisect) sc.horizon = field<double>(in.at("bisect"), "horizon", sc.horizon);
    const Simulator sim(compute_constants(n), sc);

    if (has_alpha) {
        const double alpha = required<double>(in, "alpha");
        const RunRecord rec = sim.run(sim.initial_state([&](double r) { return alpha * profile(r); }));
        io.series(trajectory(rec.t, rec.sup_u, rec.energy, rec.mu),
                  {{"alpha", alpha},
                   {"outcome", to_string(rec.outcome)},
                   {"t_final", rec.final_state.t},
                   {"sup_u", rec.final_state.sup_u},
                   {"energy", rec.final_state.energy},
                   {"steps", rec.final_state.steps},
                   {"energy_violations", rec.final_state.energy_violations}});
        return;
    }
    const json& b = in.at("bisect");
    ThresholdOptions o;
    o.depth = field<int>(b, "depth", o.depth);
    o.max_stages = field<int>(b, "max_stages", o.max_stages);
    o.time_budget = field<double>(b, "time_budget", o.time_budget);
    o.target_mu = field<double>(b, "target_mu", o.target_mu);
    o.fit_mu_max = field<double>(b, "fit_mu_max", o.fit_mu_max);
    o.ladder = field<std::vector<double>>(b, "ladder", {});
    const ThresholdResult r = bisect_threshold(sim, profile, o);
    json ladder = json::array();
    for (const auto& e : r.runs) ladder.push_back({{"alpha", e.alpha}, {"outcome", to_string(e.outcome)}});
    io.series(trajectory(r.t, r.sup_u, r.energy, r.mu),
              {{"alpha_lo", r.alpha_lo},
               {"alpha_hi", r.alpha_hi},
               {"initial_width", r.initial_width},
               {"ladder", ladder},
               {"ladder_monotone", r.ladder_monotone},
               {"stages", r.stages},
               {"total_runs", r.total_runs},
               {"rate_fit", rate_fit_json(r.rate_fit)},
               {"energy_violations", r.energy_violations},
               {"min_energy", r.min_energy},
               {"elapsed_seconds", r.elapsed_seconds},
               {"stop_reason", r.stop_reason}});
}

int dispatch(const RunConfig& cfg, std::ostream& out) {
    const Outputs io{cfg, out};
    const std::string& c = cfg.command;
    if (cfg.format != "" && cfg.format != "json" && cfg.format != "csv") {
        throw ConfigError("format", "format must be json or csv");
    }
    if (cfg.check) {
        if (c == "constants") return report_checks({check_constants(), check_bubble_residual(), check_energy_invariance()}, out);
        if (c == "gmatrix") return report_checks({check_green_matrix(cfg.seed)}, out);
        if (c == "bsolve") return report_checks({check_height_system(cfg.seed)}, out);
        if (c == "spectrum") return report_checks({check_spectral(), check_coercivity(), check_supersolution()}, out);
        if (c == "residual") return report_checks({check_correction_gain()}, out);
        if (c == "dynamics") return report_checks({check_parameter_dynamics()}, out);
        return report_checks({check_simulator_invariants()}, out);
    }
    if (c == "constants") {
        io.json_only(constants_json(cfg.n));
    } else if (c == "gmatrix") {
        json in;
        if (!cfg.input.empty()) {
            in = read_json(cfg.input);
        } else {
            // random configuration in B_{0.9} from the seed
            if (cfg.k < 1) throw ConfigError("parse", "k must be positive");
            std::mt19937_64 rng(cfg.seed);
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            json pts = json::array();
            for (int j = 0; j < cfg.k; ++j) {
                Point x(cfg.n);
                double s;
                do {
                    s = 0;
                    for (auto& v : x) {
                        v = u(rng);
                        s += v * v;
                    }
                } while (s >= 1.0);
                for (auto& v : x) v *= 0.9;
                pts.push_back(x);
            }
            in = {{"R", 1.0}, {"n", cfg.n}, {"points", pts}};
        }
        io.json_only(gmatrix_json(in));
    } else if (c == "bsolve") {
        if (cfg.input.empty()) throw ConfigError("parse", "bsolve needs --input with gmatrix output");
        io.json_only(bsolve_json(read_json(cfg.input)));
    } else if (c == "spectrum") {
        std::vector<double> radii{10.0, 20.0, 40.0};
        if (!cfg.input.empty()) radii = field<std::vector<double>>(read_json(cfg.input), "R_values", radii);
        io.json_only(spectrum_json(cfg.n, radii));
    } else if (c == "residual") {
        run_residual(cfg, io);
    } else if (c == "dynamics") {
        run_dynamics(cfg, io);
    } else {
        run_simulate(cfg, io);
    }
    return exit_ok;
}

void error_record(std::ostream& err, const std::string& kind, const std::string& message) {
    err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

bool is_known_command(const std::string& command) {
    for (const char* c : kCommands) {
        if (command == c) return true;
    }
    return false;
}

json constants_json(int n) {
    const Dim d = compute_constants(n);
    return {{"n", d.n},          {"p", d.p},         {"alpha_n", d.alpha_n}, {"a_n", d.a_n},
            {"c1", d.c1},        {"c1_alt", d.c1_alt}, {"c2", d.c2},         {"gamma_n", d.gamma_n},
            {"S_n", d.S_n},      {"omega_n", d.omega_n}, {"alpha_convention", d.alpha_convention}};
}

json gmatrix_json(const json& in) {
    const int n = required<int>(in, "n");
    const double R = field<double>(in, "R", 1.0);
    const Dim d = compute_constants(n);
    const auto gm = interaction_matrix(BallDomain(d, R), read_points(in, "points", n));
    return {{"R", gm.R},
            {"n", gm.n},
            {"points", gm.q},
            {"matrix", matrix_json(gm.matrix)},
            {"eigenvalues", gm.eigen},
            {"positive_definite", gm.is_positive_definite},
            {"cholesky_succeeds", gm.cholesky_succeeds}};
}

json bsolve_json(const json& in) {
    const int n = required<int>(in, "n");
    const double R = field<double>(in, "R", 1.0);
    const auto q = read_points(in, "points", n);
    const auto rows = required<std::vector<std::vector<double>>>(in, "matrix");
    const auto k = static_cast<Eigen::Index>(q.size());
    if (static_cast<Eigen::Index>(rows.size()) != k) throw ConfigError("dimension-mismatch", "matrix size differs from points");
    Eigen::MatrixXd m(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != k) throw ConfigError("dimension-mismatch", "matrix is not square");
        for (Eigen::Index j = 0; j < k; ++j) m(i, j) = rows[i][j];
    }
    const auto bs = solve_heights(green_matrix_from(n, R, q, m));
    return {{"n", n},
            {"R", R},
            {"points", q},
            {"b", vec(bs.b)},
            {"Lambda", vec(bs.Lambda)},
            {"sigma_bar", vec(bs.sigma_bar)},
            {"M", matrix_json(bs.M)},
            {"P", matrix_json(bs.P)},
            {"residual", bs.residual},
            {"grad_norm", bs.grad_norm},
            {"iterations", bs.iterations}};
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    if (!is_known_command(config.command)) {
        error_record(err, "unknown-command", "unknown command '" + config.command + "'");
        return exit_unknown_command;
    }
    try {
        if (config.n < 5) throw ConfigError("dimension-unsupported", "n must be at least 5");
        return dispatch(config, out);
    } catch (const Error& e) {
        error_record(err, e.kind(), e.what());
        return e.error_class() == ErrorClass::numerical ? exit_numerical : exit_invalid_config;
    } catch (const json::exception& e) {
        error_record(err, "parse", e.what());
        return exit_invalid_config;
    }
}

int main_entry(int argc, char** argv) {
    CLI::App app{"Critical heat equation: constants, Green matrices, spectra, ansatz residuals, dynamics, simulation"};
    RunConfig cfg;
    app.add_option("command", cfg.command, "constants | gmatrix | bsolve | spectrum | residual | dynamics | simulate")
        ->required();
    app.add_option("--n", cfg.n, "dimension (>= 5)");
    app.add_option("-i,--input", cfg.input, "JSON input file");
    app.add_option("-o,--output", cfg.output, "output file (default stdout)");
    app.add_option("--summary", cfg.summary, "JSON report file for residual, dynamics and simulate");
    app.add_option("--format", cfg.format, "json or csv");
    app.add_option("--seed", cfg.seed, "seed for randomized configurations and sweeps");
    app.add_option("--k", cfg.k, "number of random points for gmatrix without input");
    app.add_flag("--check", cfg.check, "run the command's invariant suite and report pass/fail");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        // an unknown leading word is an unknown command, anything else a bad configuration
        if (argc > 1 && argv[1][0] != '-' && !is_known_command(argv[1])) {
            error_record(std::cerr, "unknown-command", std::string("unknown command '") + argv[1] + "'");
            return exit_unknown_command;
        }
        error_record(std::cerr, "invalid-arguments", e.what());
        return exit_invalid_config;
    }
    return run(cfg, std::cout, std::cerr);
}

}  // namespace critheat
