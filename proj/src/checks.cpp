#include "critheat/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "critheat/ansatz.hpp"
#include "critheat/bsystem.hpp"
#include "critheat/bubble.hpp"
#include "critheat/dynamics.hpp"
#include "critheat/green.hpp"
#include "critheat/linop.hpp"
#include "critheat/pdesim.hpp"
#include "critheat/radial.hpp"

namespace critheat {

bool CheckReport::passed() const {
    bool any = false;
    for (const auto& it : items) {
        if (it.informational) continue;
        any = true;
        if (!it.passed) return false;
    }
    return any;
}

std::string CheckReport::summary_line() const {
    std::string s = (passed() ? "PASS" : "FAIL");
    s += " criterion " + std::to_string(id) + " (" + name + "):";
    char buf[256];
    for (const auto& it : items) {
        if (it.informational) continue;
        if (it.relation == "in") {
            std::snprintf(buf, sizeof buf, " %s=%.4g in [%.4g, %.4g]%s;", it.label.c_str(), it.value, it.threshold,
                          it.upper, it.passed ? "" : " (no)");
        } else {
            std::snprintf(buf, sizeof buf, " %s=%.3g %s %.3g%s;", it.label.c_str(), it.value, it.relation.c_str(),
                          it.threshold, it.passed ? "" : " (no)");
        }
        s += buf;
    }
    std::snprintf(buf, sizeof buf, " [%.1f s]", seconds);
    s += buf;
    if (!note.empty()) s += " -- " + note;
    return s;
}

namespace {

using clock = std::chrono::steady_clock;

double since(clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); }

CheckItem less(std::string label, double value, double threshold) {
    return {std::move(label), value, threshold, "<", 0, value < threshold, false};
}

CheckItem at_least(std::string label, double value, double threshold) {
    return {std::move(label), value, threshold, ">=", 0, value >= threshold, false};
}

CheckItem within(std::string label, double value, double lo, double hi) {
    return {std::move(label), value, lo, "in", hi, value >= lo && value <= hi, false};
}

CheckItem flag(std::string label, bool ok) { return {std::move(label), ok ? 1.0 : 0.0, 1.0, ">=", 0, ok, false}; }

CheckItem info(CheckItem it) {
    it.informational = true;
    return it;
}

std::string dim_label(const std::string& what, int n) { return what + "[n=" + std::to_string(n) + "]"; }

Point random_point(std::mt19937_64& rng, int n, double radius) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (;;) {
        Point x(n);
        double s = 0;
        for (auto& c : x) {
            c = u(rng);
            s += c * c;
        }
        if (s < 1.0) {
            for (auto& c : x) c *= radius;
            return x;
        }
    }
}

double max_abs(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

const EigenPair& ground_state5() {
    static const EigenPair ep = negative_eigenpair(compute_constants(5), eigen_grid(5, 100.0));
    return ep;
}

}  // namespace

CheckReport check_constants() {
    CheckReport r{1, "constants cross-check", {}, 0, ""};
    const auto t0 = clock::now();
    double worst = 0;
    for (int n : {5, 6, 7}) {
        const Dim d = compute_constants(n);
        const double rel = std::abs(d.c1 - d.c1_alt) / std::abs(d.c1);
        r.items.push_back(info(less(dim_label("c1 rel", n), rel, 1e-8)));
        worst = std::max(worst, rel);
    }
    r.seconds = since(t0);
    r.items.push_back(less("max c1 rel diff", worst, 1e-8));
    r.items.push_back(less("runtime s", r.seconds, 1.0));
    return r;
}

CheckReport check_bubble_residual() {
    CheckReport r{2, "bubble residual", {}, 0, ""};
    const auto t0 = clock::now();
    double worst_u = 0, worst_z = 0;
    for (int n : {5, 6, 7}) {
        const Dim d = compute_constants(n);
        const auto grid = bubble_check_grid(n);
        worst_u = std::max(worst_u, bubble_residual_max(n, d.alpha_n, grid));
        auto V = [&](double s) { return bubble_potential(d, s); };
        std::vector<double> z(grid.size()), w(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            z[i] = kernel_radial(d, grid[i]);
            w[i] = bubble_dr(d, grid[i]);
        }
        // Z_1..Z_n share the ℓ = 1 profile U'; Z_{n+1} is radial
        worst_z = std::max(worst_z, max_abs(apply_radial_operator(grid, w, V, 1, 7).values));
        worst_z = std::max(worst_z, max_abs(apply_radial_operator(grid, z, V, 0, 7).values));
    }
    r.items.push_back(less("max|dU+U^p|", worst_u, 1e-8));
    r.items.push_back(less("max|L0 Z_i|", worst_z, 1e-6));
    r.seconds = since(t0);
    return r;
}

CheckReport check_energy_invariance() {
    CheckReport r{3, "energy invariance", {}, 0, ""};
    const auto t0 = clock::now();
    const Dim d = compute_constants(5);
    const auto grid = RadialGrid::geometric(5, 1e-4, 1e4, 8001);
    auto bubble_mu = [&](double mu) {
        return RadialField::sample(grid, [&](double s) { return std::pow(mu, -1.5) * bubble_profile(d, s / mu); });
    };
    const double e1 = energy(d, bubble_mu(1.0));
    double worst = 0;
    for (double mu : {0.25, 0.5, 2.0, 4.0}) worst = std::max(worst, std::abs(energy(d, bubble_mu(mu)) - e1) / e1);
    r.items.push_back(less("max rel drift", worst, 1e-6));
    r.items.push_back(info(less("E(U)/S_n - 1", std::abs(e1 / d.S_n - 1), 1e-4)));
    r.seconds = since(t0);
    return r;
}

CheckReport check_green_matrix(std::uint64_t seed) {
    CheckReport r{4, "Green matrix criteria", {}, 0, ""};
    const auto t0 = clock::now();
    const Dim d = compute_constants(5);
    const BallDomain dom(d, 1.0);
    std::mt19937_64 rng(seed);
    int k1_pd = 0;
    for (int i = 0; i < 100; ++i) k1_pd += interaction_matrix(dom, {random_point(rng, 5, 0.999)}).is_positive_definite;
    int agree = 0, pd = 0;
    for (int i = 0; i < 100; ++i) {
        const auto gm = interaction_matrix(dom, {random_point(rng, 5, 0.9), random_point(rng, 5, 0.9)});
        const double scalar = gm.H(0) * gm.H(1) - gm.G(0, 1) * gm.G(0, 1);
        agree += gm.is_positive_definite == (scalar > 0);
        pd += gm.is_positive_definite;
    }
    std::vector<Point> tri;
    for (int j = 0; j < 3; ++j) {
        Point x(5, 0.0);
        x[0] = 0.95 * std::cos(2.0 * std::numbers::pi * j / 3.0);
        x[1] = 0.95 * std::sin(2.0 * std::numbers::pi * j / 3.0);
        tri.push_back(x);
    }
    r.items.push_back(at_least("k=1 PD of 100", k1_pd, 100));
    r.items.push_back(at_least("k=2 verdicts agreeing of 100", agree, 100));
    r.items.push_back(info(at_least("k=2 PD count", pd, 0)));
    r.items.push_back(flag("k=3 near-boundary PD", interaction_matrix(dom, tri).is_positive_definite));
    r.seconds = since(t0);
    return r;
}

CheckReport check_height_system(std::uint64_t seed) {
    CheckReport r{5, "height system", {}, 0, ""};
    const auto t0 = clock::now();
    double worst_res = 0, worst_closed = 0, worst_unique = 0, worst_bound = -1e300;
    std::mt19937_64 rng(seed);
    for (int n : {5, 6, 7}) {
        const Dim d = compute_constants(n);
        const BallDomain dom(d, 1.0);
        for (int rep = 0; rep < 3; ++rep) {
            const Point q = random_point(rng, n, 0.8);
            const auto gm = interaction_matrix(dom, {q});
            const auto bs = solve_heights(gm);
            const double expect = std::pow(2.0 / ((n - 2.0) * gm.H(0)), 1.0 / (n - 4.0));
            worst_closed = std::max(worst_closed, std::abs(bs.b(0) - expect) / expect);
        }
        for (int k : {2, 3}) {
            GreenMatrix gm;
            do {
                std::vector<Point> q;
                for (int j = 0; j < k; ++j) q.push_back(random_point(rng, n, 0.9));
                gm = interaction_matrix(dom, q);
            } while (!gm.is_positive_definite);
            const auto bs = solve_heights(gm);
            worst_res = std::max(worst_res, bs.residual);
            std::uniform_real_distribution<double> u(0.2, 5.0);
            for (int s = 0; s < 5; ++s) {
                SolveOptions o;
                o.start = bs.Lambda;
                for (int j = 0; j < k; ++j) o.start(j) *= u(rng);
                worst_unique = std::max(worst_unique, (solve_heights(gm, o).b - bs.b).lpNorm<Eigen::Infinity>());
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(bs.M);
            const double bound = (2.0 / (n - 2.0)) * (1.0 + bs.sigma_bar.minCoeff());
            worst_bound = std::max(worst_bound, bound - es.eigenvalues().minCoeff());
        }
    }
    r.items.push_back(less("max residual", worst_res, 1e-10));
    r.items.push_back(less("k=1 closed form rel", worst_closed, 1e-10));
    r.items.push_back(less("uniqueness spread", worst_unique, 1e-8));
    r.items.push_back(less("bound - min eig(M)", worst_bound, 1e-10));
    r.seconds = since(t0);
    return r;
}

CheckReport check_spectral() {
    CheckReport r{6, "spectral suite", {}, 0, ""};
    const auto t0 = clock::now();
    const auto& ep = ground_state5();
    r.items.push_back(less("lambda0", ep.lambda0, 0.0));
    r.items.push_back(at_least("second eigenvalue", ep.second_eigenvalue, 0.0));
    const auto& g = ep.Z0.grid();
    bool positive = true;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) positive = positive && ep.Z0[i] > 0;
    r.items.push_back(flag("Z0 > 0", positive));
    const std::size_t i1 = g.locate(10.0), i2 = g.locate(30.0);
    auto logz = [&](std::size_t i) { return std::log(ep.Z0[i]) + 2.0 * std::log(g[i]); };
    const double slope = (logz(i2) - logz(i1)) / (g[i2] - g[i1]);
    r.items.push_back(less("tail slope rel err", std::abs(slope / -std::sqrt(-ep.lambda0) - 1.0), 0.05));
    // r²p₀ over the last decade against the decade before it
    double worst_orth = 0;
    for (int n : {5, 6, 7}) {
        const Dim dn = compute_constants(n);
        const auto c = corrector_p0(dn, second_solution(dn, fundamental_grid(n)));
        worst_orth = std::max(worst_orth, c.orthogonality);
        // r²p₀ over the last decade against the decade before it
        double last = 0, prev = 0;
        for (double s = 1e4; s <= 1e5; s *= 1.05) last = std::max(last, s * s * std::abs(c.profile.value(s)));
        for (double s = 1e3; s <= 1e4; s *= 1.05) prev = std::max(prev, s * s * std::abs(c.profile.value(s)));
        CheckItem it = less(dim_label("r^2 p0 growth over last decade", n), last / prev, 1.5);
        // the 1/r tail for n = 5 makes r²p₀ grow linearly, so only n ≥ 6 decides
        r.items.push_back(n == 5 ? info(it) : it);
    }
    r.items.push_back(less("int q0 Z_{n+1} rel", worst_orth, 1e-8));
    r.seconds = since(t0);
    r.items.push_back(less("runtime s", r.seconds, 30.0));
    r.note = "p0 decay gated on n=6,7; n=5 decays only like 1/r";
    return r;
}

CheckReport check_coercivity() {
    CheckReport r{7, "coercivity scaling", {}, 0, ""};
    const auto t0 = clock::now();
    const Dim d = compute_constants(5);
    std::vector<double> products;
    double min_lambda = 1e300;
    for (double R : {10.0, 20.0, 40.0}) {
        const auto c = coercivity_constant(d, R, ground_state5());
        min_lambda = std::min(min_lambda, c.lambda_R);
        products.push_back(c.lambda_R * std::pow(R, d.n - 2));
    }
    const auto [lo, hi] = std::minmax_element(products.begin(), products.end());
    r.items.push_back(at_least("min lambda_R", min_lambda, 0.0));
    r.items.push_back(less("max/min lambda_R R^{n-2}", *hi / *lo, 4.0));
    r.seconds = since(t0);
    return r;
}

CheckReport check_supersolution() {
    CheckReport r{8, "supersolution size", {}, 0, ""};
    const auto t0 = clock::now();
    const Dim d = compute_constants(5);
    double worst = 0;
    for (double a : {0.5, 1.0, 1.5}) {
        const auto g20 = supersolution_g(d, a, 3.0, 20.0);
        const auto g40 = supersolution_g(d, a, 3.0, 40.0);
        const double s20 = max_abs(g20.g.values()), s40 = max_abs(g40.g.values());
        worst = std::max(worst, std::abs(s40 / s20 / std::pow(2.0, 2.0 - a) - 1.0));
    }
    r.items.push_back(less("a<2 scaling rel err", worst, 0.3));
    std::vector<double> bounds;
    for (double R : {20.0, 40.0, 80.0}) {
        const auto g = supersolution_g(d, 2.5, 3.0, R);
        double b = 0;
        for (std::size_t i = 0; i < g.g.size(); ++i) b = std::max(b, g.g[i] * std::pow(1.0 + g.g.grid()[i], 0.5));
        bounds.push_back(b);
    }
    r.items.push_back(less("a=2.5 bound growth R=20->80", bounds[2] / bounds[0], 1.3));
    r.seconds = since(t0);
    return r;
}

CheckReport check_correction_gain() {
    CheckReport r{9, "ansatz correction gain", {}, 0, ""};
    const auto t0 = clock::now();
    ResidualOptions corrected, plain;
    corrected.space = plain.space = SpatialMode::analytic;
    plain.corrected = false;
    for (int n : {5, 6, 7}) {
        const Dim d = compute_constants(n);
        const BallDomain dom(d, 1.0);
        Point a(n, 0.0), b(n, 0.0);
        a[0] = 0.7;
        b[0] = -0.7;
        const auto gm = interaction_matrix(dom, {a, b});
        const auto bs = solve_heights(gm);
        const Ansatz ansatz(d);
        const double t = std::pow(d.gamma_n / 0.05, n - 4);  // μ₀ = 0.05
        double ratio[2], m[2];
        for (int i = 0; i < 2; ++i) {
            const auto c = configuration_at(d, dom, gm, bs, nullptr, nullptr, t * (i ? 4 : 1));
            const Point y(n, 0.0);
            ratio[i] = ansatz.scaled_residual(c, 0, y, corrected) / ansatz.scaled_residual(c, 0, y, plain);
            m[i] = c.mu0;
        }
        const double measured = ratio[1] / ratio[0], predicted = std::pow(m[1] / m[0], 2);
        CheckItem it = less(dim_label("gain vs mu0^2 rel err", n), std::abs(measured / predicted - 1), 0.25);
        // for n = 5 the neighbour's 1/r correction tail leaves a μ₀^{n-1} term
        r.items.push_back(n == 5 ? info(it) : it);
    }
    r.seconds = since(t0);
    r.note = "k=2 at y=0, mu0 0.05 -> 4t; n=5 reported only";
    return r;
}

CheckReport check_parameter_dynamics() {
    CheckReport r{10, "parameter dynamics", {}, 0, ""};
    const auto t0 = clock::now();
    double worst_dev = 0, worst_xi = 0;
    for (int n : {5, 6, 7}) {
        const Dim d = compute_constants(n);
        const BallDomain dom(d, 1.0);
        std::vector<Point> q(2, Point(n, 0.0));
        q[0][0] = 0.7;
        q[1][0] = -0.6;
        q[1][1] = 0.2;
        const auto gm = interaction_matrix(dom, q);
        const auto bs = solve_heights(gm);
        std::vector<double> ts;
        for (int i = 0; i < 41; ++i) ts.push_back(10.0 * std::pow(100.0, i / 40.0));
        const double sigma = default_sigma(bs);
        const VectorForcing h = [&](double t) {
            Eigen::VectorXd v(2);
            const double s = std::pow(mu0_of_t(d, t), n - 3 + sigma);
            v << s, -0.5 * s;
            return v;
        };
        Eigen::VectorXd d0(2);
        d0 << 1e-3, -2e-3;
        worst_dev = std::max(worst_dev, lambda_system_solve(bs, h, d0, 10.0, ts).max_deviation);
        const XiDrift drift(d, gm, bs);
        for (std::size_t j = 0; j < 2; ++j) {
            double dist[2];
            for (int i = 0; i < 2; ++i) {
                const Point x = drift.xi(j, i ? 80.0 : 20.0);
                double s = 0;
                for (int c = 0; c < n; ++c) s += std::pow(x[c] - q[j][c], 2);
                dist[i] = std::sqrt(s);
            }
            const double e = std::log(dist[1] / dist[0]) / std::log(4.0);
            worst_xi = std::max(worst_xi, std::abs(e + 2.0 / (n - 4)));
        }
    }
    r.items.push_back(less("closed form vs RK", worst_dev, 1e-6));
    r.items.push_back(less("xi exponent err", worst_xi, 1e-6));
    const Dim d5 = compute_constants(5);
    const ScalarForcing f = [](double s) { return 1.0 / (s * s); };
    const ProjectionProblem prob(d5, ground_state5().lambda0, 1.0, f, 1.0);
    const auto st = projection_shoot(d5, ground_state5().lambda0, 1.0, f, 1.0, prob.horizon(1e9));
    r.items.push_back(at_least("growth e0*+1e-6", st.growth_plus, 1e3));
    r.items.push_back(at_least("growth e0*-1e-6", st.growth_minus, 1e3));
    r.items.push_back(less("sup|e*|", st.sup_star, 1.0));
    r.items.push_back(less("bisected e0* rel err", std::abs(st.e0_bisected - st.e0_star) / std::abs(st.e0_star), 1e-8));
    r.seconds = since(t0);
    return r;
}

CheckReport check_blowup_rate(double time_budget) {
    CheckReport r{11, "blow-up rate", {}, 0, ""};
    const auto t0 = clock::now();
    const Dim d = compute_constants(5);
    const Simulator sim(d);
    ThresholdOptions o;
    o.time_budget = time_budget;
    const ThresholdResult res = bisect_threshold(sim, default_profile(1.0), o);
    r.seconds = since(t0);
    const RateFit& f = res.rate_fit;
    r.items.push_back(flag("rate window available", f.available));
    r.items.push_back(within("slope (fitted origin)", f.slope, 1.05, 1.95));
    r.items.push_back(info(within("slope (origin t=0)", f.raw_slope, 1.05, 1.95)));
    r.items.push_back(less("energy increases", static_cast<double>(res.energy_violations), 0.5));
    r.items.push_back(info(at_least("min energy / S_5", res.min_energy / d.S_n, 1.0)));
    r.items.push_back(less("runtime s", r.seconds, 600.0));
    char buf[200];
    std::snprintf(buf, sizeof buf, "window mu %.3g->%.3g, t %.3g->%.3g, origin %.3g, %d stages, raw slope %.3f, stop %s",
                  f.mu_begin, f.mu_end, f.t_begin, f.t_end, f.t_origin, res.stages, f.raw_slope, res.stop_reason.c_str());
    r.note = buf;
    return r;
}

CheckReport check_simulator_invariants() {
    CheckReport r{0, "simulator invariants", {}, 0, ""};
    const auto t0 = clock::now();
    const Dim d = compute_constants(5);
    const Simulator sim(d);
    const auto phi = default_profile(1.0);
    SimState zero = sim.initial_state([](double) { return 0.0; });
    for (int i = 0; i < 10; ++i) sim.step(zero);
    r.items.push_back(less("zero stays zero", zero.sup_u, 1e-300));
    const RunRecord small = sim.run(sim.initial_state([&](double s) { return 0.01 * phi(s); }));
    r.items.push_back(flag("small data decays", small.outcome == RunStatus::decayed));
    const RunRecord big = sim.run(sim.initial_state([&](double s) { return 10 * d.alpha_n * phi(s); }));
    r.items.push_back(flag("large data blows up", big.outcome == RunStatus::blown_up));
    r.items.push_back(less("energy increases", static_cast<double>(small.final_state.energy_violations + big.final_state.energy_violations), 0.5));
    SimState lo = sim.initial_state([&](double s) { return 14.0 * phi(s); });
    SimState hi = sim.initial_state([&](double s) { return 15.0 * phi(s); });
    bool ordered = true;
    for (int k = 0; k < 300; ++k) {
        sim.step_fixed(lo, 1e-4);
        sim.step_fixed(hi, 1e-4);
        for (std::size_t i = 0; i < lo.u.size(); ++i) ordered = ordered && lo.u[i] <= hi.u[i];
    }
    r.items.push_back(flag("comparison kept", ordered));
    std::vector<RunStatus> ladder;
    for (double a : {2.0, 5.0, 10.0, 20.0, 40.0}) ladder.push_back(classify_run(sim, a, phi));
    const auto first = std::find(ladder.begin(), ladder.end(), RunStatus::blown_up);
    const bool monotone = std::all_of(ladder.begin(), first, [](RunStatus s) { return s == RunStatus::decayed; }) &&
                          std::all_of(first, ladder.end(), [](RunStatus s) { return s == RunStatus::blown_up; });
    r.items.push_back(flag("ladder monotone", monotone));
    r.seconds = since(t0);
    return r;
}

}  // namespace critheat
