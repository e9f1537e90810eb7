#include "doctest.h"

#include <cmath>

#include "critheat/ansatz.hpp"
#include "critheat/bsystem.hpp"
#include "critheat/errors.hpp"
#include "critheat/quadrature.hpp"

using namespace critheat;

namespace {

struct Setup {
    Dim dim;
    BallDomain dom;
    std::vector<Point> q;
    BSolution bs;
    Ansatz ansatz;

    Setup(int n, std::vector<Point> points)
        : dim(compute_constants(n)), dom(dim, 1.0), q(std::move(points)),
          bs(solve_heights(interaction_matrix(dom, q))), ansatz(dim) {}

    double mu0(double t) const { return dim.gamma_n * std::pow(t, -1.0 / (dim.n - 4)); }
    double t_for(double m) const { return std::pow(dim.gamma_n / m, dim.n - 4); }

    /// μ = bμ₀ + λ, ξ = q + (offset), with the rates of the closed forms.
    BubbleConfig config(double t, const std::vector<double>& lambda = {}, const std::vector<double>& lambda_dot = {},
                        const std::vector<Point>& xi_dot = {}) const {
        BubbleConfig c;
        c.dom = dom;
        c.q = q;
        c.t = t;
        c.mu0 = mu0(t);
        c.mu0_dot = -c.mu0 / ((dim.n - 4) * t);
        for (std::size_t j = 0; j < q.size(); ++j) {
            const double b = bs.b[j];
            c.b.push_back(b);
            c.mu.push_back(b * c.mu0 + (lambda.empty() ? 0.0 : lambda[j]));
            c.mu_dot.push_back(b * c.mu0_dot + (lambda_dot.empty() ? 0.0 : lambda_dot[j]));
            c.xi.push_back(q[j]);
            c.xi_dot.push_back(xi_dot.empty() ? Point(dim.n, 0.0) : xi_dot[j]);
        }
        return c;
    }
};

Point axis(int n, double s) {
    Point p(n, 0.0);
    p[0] = s;
    return p;
}

std::vector<Point> pair(int n) { return {axis(n, 0.7), axis(n, -0.7)}; }

ResidualOptions analytic(bool corrected) {
    ResidualOptions o;
    o.space = SpatialMode::analytic;
    o.corrected = corrected;
    return o;
}

}  // namespace

TEST_CASE("finite-difference machinery on an exact steady bubble") {
    const Dim d = compute_constants(5);
    Ansatz A(d);
    BubbleConfig c;
    c.dom = BallDomain(d, 10.0);
    c.q = {Point(5, 0.0)};
    c.b = {1.0};
    c.mu = {1.0};
    c.mu_dot = {0.0};
    c.xi = {Point(5, 0.0)};
    c.xi_dot = {Point(5, 0.0)};
    c.mu0 = 1.0;
    ResidualOptions o;
    o.corrected = false;
    o.regular_part = false;
    o.space = SpatialMode::finite_difference;
    o.step_factor = 2e-3;
    for (Point x : {Point{0, 0, 0, 0, 0}, Point{0.3, -0.2, 0.1, 0, 0.5}, Point{1, 1, 1, 1, 1}, Point{4, 0, 0, 0, 0}}) {
        CHECK(std::abs(A.residual(c, x, o)) < 1e-6);
    }
    o.space = SpatialMode::analytic;
    CHECK(std::abs(A.residual(c, Point{0.3, -0.2, 0.1, 0, 0.5}, o)) < 1e-12);
}

TEST_CASE("ansatz value: centre substitution, validation, domain") {
    Setup s(5, {Point(5, 0.0)});
    const auto c = s.config(s.t_for(0.05));
    const double a = 1.5;
    const double phi0 = s.ansatz.gamma(c.b[0]) * std::pow(c.mu0, 3) * s.ansatz.corrector().profile.value(0.0);
    const double expect = std::pow(c.mu[0], -a) * (s.dim.alpha_n + phi0) -
                          std::pow(c.mu[0], a) * regular_part(s.dom, c.xi[0], c.q[0]);
    CHECK(s.ansatz.value(c, c.xi[0]) == doctest::Approx(expect).epsilon(1e-13));
    CHECK_THROWS_AS(s.ansatz.value(c, axis(5, 1.2)), ConfigError);
    auto bad = c;
    bad.mu[0] = -1.0;
    CHECK_THROWS_AS(s.ansatz.residual(bad, c.xi[0]), ConfigError);
    Setup two(5, pair(5));
    auto drift = two.config(100.0);
    drift.xi[0][1] = 0.36;  // more than a quarter of the 1.4 separation
    CHECK_THROWS_AS(validate(drift), ConfigError);
    CHECK(satisfies_scaling_hypothesis(two.config(100.0), 0.1));
    CHECK(!satisfies_scaling_hypothesis(two.config(100.0, {0.02, 0.0}), 0.1));
    // the correction constant turns μ₀E₀ into −γμ₀^{n-2}q₀
    CHECK(s.ansatz.gamma(0.3) == doctest::Approx(2 * 0.09 / (3 * s.dim.c2)));
}

TEST_CASE("far from the anchors the ansatz is the Green-function superposition") {
    for (int n : {5, 6}) {
        Setup s(n, pair(n));
        std::vector<double> rel;
        for (double m : {0.05, 0.0125}) {
            const auto c = s.config(s.t_for(m));
            double worst = 0;
            for (Point x : {axis(n, 0.0), axis(n, 0.2), Point(n, 0.25)}) {
                double g = 0;
                for (std::size_t j = 0; j < 2; ++j) g += std::pow(c.mu[j], 0.5 * (n - 2)) * green_ball(s.dom, x, s.q[j]);
                worst = std::max(worst, std::abs(s.ansatz.value(c, x) - g) / g);
            }
            rel.push_back(worst);
        }
        CHECK(rel[1] < rel[0]);
        CHECK(rel[1] < 0.1);
    }
}

TEST_CASE("boundary size of the corrected ansatz") {
    // |u*| on ∂B scales like μ₀^{(n+2)/2} for n ≥ 6; the 1/r tail of p₀ makes it μ₀^{5/2} for n = 5.
    for (int n : {5, 6, 7}) {
        Setup s(n, {axis(n, 0.3)});
        const double expected = n == 5 ? 2.5 : 0.5 * (n + 2);
        double v[2], m[2];
        int i = 0;
        for (double mu0 : {0.04, 0.01}) {
            const auto c = s.config(s.t_for(mu0));
            Point x = axis(n, -0.999999);
            v[i] = std::abs(s.ansatz.value(c, x));
            m[i++] = c.mu0;
        }
        const double slope = std::log(v[0] / v[1]) / std::log(m[0] / m[1]);
        CHECK(slope == doctest::Approx(expected).epsilon(0.05));
    }
}

TEST_CASE("error channels assemble the uncorrected residual") {
    for (int n : {5, 6}) {
        for (const auto& q : {std::vector<Point>{Point(n, 0.0)}, pair(n)}) {
            Setup s(n, q);
            const auto c = s.config(s.t_for(0.02));
            Point y1(n, 0.0);
            y1[1] = 1.0;
            for (const Point& y : {Point(n, 0.0), y1}) {
                const auto ch = s.ansatz.error_channels(c, 0, y);
                CHECK(std::abs(ch.E0 + ch.E1 - ch.total) <= 0.1 * std::abs(ch.total));
            }
        }
    }
}

TEST_CASE("correction removes the mu0^{n-2} term at the bubble centre") {
    for (int n : {6, 7}) {
        Setup s(n, pair(n));
        const double t = s.t_for(0.05);
        double ratio[2], m[2];
        int i = 0;
        for (double tt : {t, 4 * t}) {
            const auto c = s.config(tt);
            const Point y(n, 0.0);
            ratio[i] = s.ansatz.scaled_residual(c, 0, y, analytic(true)) / s.ansatz.scaled_residual(c, 0, y, analytic(false));
            m[i++] = c.mu0;
        }
        CHECK(std::abs(ratio[0]) < 0.01);
        CHECK(ratio[1] / ratio[0] == doctest::Approx(std::pow(m[1] / m[0], 2)).epsilon(0.25));
    }
    // n = 5: the neighbour's correction decays only like 1/r, so the gain is one power of μ₀.
    Setup s(5, pair(5));
    const double t = s.t_for(0.05);
    double ratio[2];
    for (int i = 0; i < 2; ++i) {
        const auto c = s.config(t * (i ? 4 : 1));
        const Point y(5, 0.0);
        ratio[i] = s.ansatz.scaled_residual(c, 0, y, analytic(true)) / s.ansatz.scaled_residual(c, 0, y, analytic(false));
    }
    CHECK(ratio[1] / ratio[0] == doctest::Approx(0.25).epsilon(0.25));
}

TEST_CASE("uncorrected centre residual is of order mu0^{n-2}") {
    for (int n : {5, 6, 7}) {
        Setup s(n, {Point(n, 0.0)});
        const double t = s.t_for(0.05);
        const Point y(n, 0.0);
        const auto c1 = s.config(t), c2 = s.config(4 * t);
        const double r = s.ansatz.scaled_residual(c2, 0, y, analytic(false)) / s.ansatz.scaled_residual(c1, 0, y, analytic(false));
        CHECK(r == doctest::Approx(std::pow(c2.mu0 / c1.mu0, n - 2)).epsilon(0.05));
    }
}

TEST_CASE("far-field residual decay") {
    for (int n : {5, 6, 7}) {
        Setup s(n, pair(n));
        const double t = s.t_for(0.02);
        const Point x = axis(n, 0.0);
        const double S1 = s.ansatz.residual(s.config(t), x, analytic(true));
        const double S2 = s.ansatz.residual(s.config(4 * t), x, analytic(true));
        const double slope = std::log(std::abs(S2 / S1)) / std::log(4.0);
        CHECK(slope == doctest::Approx(-far_field_mu0_exponent(n) / (n - 4)).epsilon(0.2));
    }
}

TEST_CASE("spatial and temporal discretisations agree with the exact derivatives") {
    Setup s(5, pair(5));
    const double t = s.t_for(0.05);
    const auto c = s.config(t);
    Point x = c.xi[0];
    x[1] += c.mu[0];
    ResidualOptions o;
    o.corrected = true;
    o.space = SpatialMode::analytic;
    const double exact = s.ansatz.residual(c, x, o);
    o.space = SpatialMode::hybrid;
    CHECK(s.ansatz.residual(c, x, o) == doctest::Approx(exact).epsilon(1e-5));
    o.space = SpatialMode::analytic;
    o.time = TimeMode::central_difference;
    ParameterPath path = [&](double tt) { return s.config(tt); };
    CHECK(s.ansatz.residual(path, t, x, o) == doctest::Approx(exact).epsilon(1e-6));
    CHECK_THROWS_AS(s.ansatz.residual(c, x, o), ConfigError);
    o.time = TimeMode::chain_rule;
    o.space = SpatialMode::finite_difference;
    CHECK_THROWS_AS(s.ansatz.residual(c, axis(5, 0.9999999), o), ConfigError);
}

TEST_CASE("orthogonality projections") {
    SUBCASE("single centred bubble: translation modes vanish") {
        Setup s(5, {Point(5, 0.0)});
        const auto c = s.config(s.t_for(0.05), {1e-5}, {-2e-7});
        const auto P = s.ansatz.orthogonality_residuals(c, s.bs.M, 50.0);
        for (int l = 0; l < 5; ++l) CHECK(std::abs(P(0, l)) < 1e-12 * std::abs(P(0, 5)));
    }
    SUBCASE("translation balance") {
        for (int n : {5, 6}) {
            Setup s(n, pair(n));
            const double t = s.t_for(0.05);
            const auto c0 = s.config(t);
            // ξ̇_j = c μ₀^{n-2} v_j with c the ratio of the two translation integrals
            const double B = quad::integrate_to_infinity(
                [&](double r) { return bubble_potential(s.dim, r) * bubble_dr(s.dim, r) * std::pow(r, s.dim.n); }, 0.0);
            const double Aint = quad::integrate_to_infinity(
                [&](double r) { return std::pow(bubble_dr(s.dim, r), 2) * std::pow(r, s.dim.n - 1); }, 0.0);
            std::vector<Point> xi_dot;
            for (std::size_t j = 0; j < 2; ++j) {
                Point v = grad_x_regular_part(s.dom, s.q[j], s.q[j]);
                for (double& e : v) e *= std::pow(c0.b[j], n - 2);
                const Point g = grad_x_green(s.dom, s.q[j], s.q[1 - j]);
                for (int e = 0; e < n; ++e) v[e] -= std::pow(c0.b[0] * c0.b[1], 0.5 * (n - 2)) * g[e];
                for (double& e : v) e *= (B / Aint) * std::pow(c0.mu0, n - 2);
                xi_dot.push_back(v);
            }
            const auto still = s.ansatz.orthogonality_residuals(c0, s.bs.M, 50.0);
            const auto moving = s.ansatz.orthogonality_residuals(s.config(t, {}, {}, xi_dot), s.bs.M, 50.0);
            CHECK(std::abs(moving(0, 0)) * 5 < std::abs(still(0, 0)));
            CHECK(std::abs(moving(1, 0)) * 5 < std::abs(still(1, 0)));
        }
    }
    SUBCASE("dilation balance") {
        const int n = 7;
        Setup s(n, pair(n));
        const double t = s.t_for(0.05);
        // homogeneous λ-system solution λ = Pᵀν, ν_j = d_j t^{-κ_j}
        Eigen::VectorXd nu(2), nu_dot(2);
        for (int j = 0; j < 2; ++j) {
            const double kappa = (1 + s.bs.sigma_bar[j]) / (n - 4);
            nu[j] = 1e-4 * std::pow(s.mu0(t), 0.2) * (j + 1);
            nu_dot[j] = -kappa * nu[j] / t;
        }
        const Eigen::VectorXd lam = s.bs.P.transpose() * nu, lam_dot = s.bs.P.transpose() * nu_dot;
        const std::vector<double> l{lam[0], lam[1]}, ld{lam_dot[0], lam_dot[1]};
        const auto solved = s.ansatz.orthogonality_residuals(s.config(t, l, ld), s.bs.M, 50.0);
        const auto frozen = s.ansatz.orthogonality_residuals(s.config(t, l, {0.0, 0.0}), s.bs.M, 50.0);
        CHECK(std::abs(solved(0, n)) * 5 < std::abs(frozen(0, n)));
        CHECK(std::abs(solved(1, n)) * 5 < std::abs(frozen(1, n)));
    }
    Setup s(5, {Point(5, 0.0)});
    CHECK_THROWS_AS(s.ansatz.orthogonality_residuals(s.config(1.0), s.bs.M, 1e6), ConfigError);
}
