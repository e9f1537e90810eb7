#include "doctest.h"

#include <cmath>
#include <vector>

#include "critheat/bubble.hpp"
#include "critheat/errors.hpp"
#include "critheat/quadrature.hpp"

using namespace critheat;

TEST_CASE("amplitude selected by the PDE residual") {
    const Dim d = compute_constants(5);
    CHECK(d.alpha_n == doctest::Approx(std::pow(15.0, 0.75)).epsilon(1e-15));
    CHECK(d.alpha_convention == "(n(n-2))^((n-2)/4)");
    CHECK(bubble_profile(d, 0.0) == doctest::Approx(7.6220).epsilon(1e-4));
    // the rejected convention leaves an O(1) residual
    const auto grid = bubble_check_grid(5);
    CHECK(bubble_residual_max(5, alpha_root_form(5), grid) > 1.0);
    CHECK(bubble_residual_max(5, d.alpha_n, grid) < 1e-8);
}

TEST_CASE("profile values") {
    for (int n : {5, 6, 7}) {
        const Dim d = compute_constants(n);
        CHECK(bubble_profile(d, 1.0) == doctest::Approx(d.alpha_n * std::pow(2.0, -(n - 2) / 2.0)).epsilon(1e-14));
        const double r = 1e4;
        CHECK(std::pow(r, n - 2) * bubble_profile(d, r) == doctest::Approx(d.alpha_n).epsilon(1e-6));
        double prev = bubble_profile(d, 0.0);
        for (double x = 0.1; x < 50; x *= 1.3) {
            const double u = bubble_profile(d, x);
            CHECK(u < prev);
            prev = u;
        }
    }
}

TEST_CASE("kernel functions") {
    const Dim d = compute_constants(5);
    std::vector<double> zero(5, 0.0);
    CHECK(kernel_Z(d, 6, zero) == doctest::Approx(1.5 * d.alpha_n));
    CHECK(kernel_Z(d, 1, zero) == 0.0);
    CHECK_THROWS_AS(kernel_Z(d, 0, zero), ConfigError);
    CHECK_THROWS_AS(kernel_Z(d, 7, zero), ConfigError);
    CHECK(kernel_zero(d) == doctest::Approx(1.0).epsilon(1e-14));
    // exactly one sign change on a fine sweep
    int changes = 0;
    double prev = kernel_radial(d, 0.0);
    for (double r = 1e-3; r < 1e3; r *= 1.01) {
        const double z = kernel_radial(d, r);
        if (z * prev < 0) ++changes;
        prev = z;
    }
    CHECK(changes == 1);
    // Z_i = ∂U/∂y_i against a central difference of the closed form
    std::vector<double> y{0.3, -0.2, 0.5, 0.1, 0.7};
    for (int i = 1; i <= 5; ++i) {
        auto yp = y, ym = y;
        const double h = 1e-5;
        yp[i - 1] += h;
        ym[i - 1] -= h;
        auto U = [&](const std::vector<double>& v) {
            double s = 0;
            for (double c : v) s += c * c;
            return bubble_profile(d, std::sqrt(s));
        };
        CHECK(kernel_Z(d, i, y) == doctest::Approx((U(yp) - U(ym)) / (2 * h)).epsilon(1e-8));
    }
}

TEST_CASE("kernels solve the linearised equation") {
    const Dim d = compute_constants(5);
    const auto grid = bubble_check_grid(5);
    auto V = [&](double r) { return bubble_potential(d, r); };
    std::vector<double> z(grid.size()), w(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        z[i] = kernel_radial(d, grid[i]);
        w[i] = bubble_dr(d, grid[i]);
    }
    double mz = 0, mw = 0;
    for (double v : apply_radial_operator(grid, z, V, 0, 7).values) mz = std::max(mz, std::abs(v));
    for (double v : apply_radial_operator(grid, w, V, 1, 7).values) mw = std::max(mw, std::abs(v));
    CHECK(mz < 1e-6);
    CHECK(mw < 1e-6);
}

TEST_CASE("constants: frozen quadrature values and cross-checks") {
    struct Row { int n; double a, c1, c2, gamma, S; };
    // Independent reference values from a separate adaptive quadrature.
    const Row rows[] = {
        {5, 601.808, 902.712, 1182.104, 1.96425, 168.872},
        {6, 2976.60, 5953.205, 4762.56, 0.894427, 1190.64},
        {7, 14077.75, 35194.39, 27575.90, 0.867544, 9191.97},
    };
    for (const auto& row : rows) {
        const Dim d = compute_constants(row.n);
        CHECK(d.p == doctest::Approx((row.n + 2.0) / (row.n - 2.0)));
        CHECK(d.a_n == doctest::Approx(row.a).epsilon(1e-5));
        CHECK(d.c1 == doctest::Approx(row.c1).epsilon(1e-5));
        CHECK(d.c2 == doctest::Approx(row.c2).epsilon(1e-5));
        CHECK(d.gamma_n == doctest::Approx(row.gamma).epsilon(1e-5));
        CHECK(d.S_n == doctest::Approx(row.S).epsilon(1e-5));
        CHECK(std::abs(d.c1 - d.c1_alt) / d.c1 < 1e-8);
        CHECK(d.c1 > 0);
        CHECK(d.c2 > 0);
    }
    CHECK_THROWS_AS(compute_constants(4), ConfigError);
}

TEST_CASE("mu0 identity holds for the computed gamma") {
    const Dim d = compute_constants(5);
    // μ₀ = γ/t: d/dt μ₀ = −γ/t², and −(2c1/((n-2)c2)) μ₀² = −(2c1/(3c2)) γ²/t².
    const double lhs = -d.gamma_n;
    const double rhs = -(2.0 * d.c1 / (3.0 * d.c2)) * d.gamma_n * d.gamma_n;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
    CHECK(d.gamma_n == doctest::Approx(3.0 * d.c2 / (2.0 * d.c1)).epsilon(1e-14));
}

TEST_CASE("c2 diverges logarithmically in dimension four") {
    // Z ~ r^{2-n} makes the truncated integrand ~ r^{3-n} = 1/r for n = 4.
    Dim d;
    d.n = 4;
    d.alpha_n = alpha_exponent_form(4);
    auto trunc = [&](double R) {
        return quad::integrate([&](double r) { double z = kernel_radial(d, r); return z * z * r * r * r; }, 0.0, R);
    };
    const double i1 = trunc(1e2), i2 = trunc(1e3), i3 = trunc(1e4);
    CHECK((i3 - i2) == doctest::Approx(i2 - i1).epsilon(1e-3));
    CHECK(i3 - i2 > 0.1);
}

TEST_CASE("energy: invariance, homogeneity, refusal") {
    const Dim d = compute_constants(5);
    const auto grid = RadialGrid::geometric(5, 1e-4, 1e4, 8001);
    auto bubble_mu = [&](double mu) {
        return RadialField::sample(grid, [&](double r) { return std::pow(mu, -1.5) * bubble_profile(d, r / mu); });
    };
    const double e1 = energy(d, bubble_mu(1.0));
    CHECK(e1 == doctest::Approx(d.S_n).epsilon(1e-4));
    for (double mu : {0.25, 0.5, 2.0, 4.0}) CHECK(std::abs(energy(d, bubble_mu(mu)) - e1) / e1 < 1e-6);
    CHECK(energy(d, RadialField::sample(grid, [](double) { return 0.0; })) == 0.0);

    // E(2U) = 2∫|∇U|² − ((n-2)/(2n)) 2^{2n/(n-2)} ∫U^{2n/(n-2)}
    const auto u = bubble_mu(1.0);
    const auto du = gradient(grid, u.values());
    std::vector<double> g2(grid.size()), pq(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        g2[i] = du[i] * du[i];
        pq[i] = std::pow(u[i], 10.0 / 3.0);
    }
    const double expected = 2.0 * grid.ball_integral(g2) - 0.3 * std::pow(2.0, 10.0 / 3.0) * grid.ball_integral(pq);
    const auto u2 = RadialField::sample(grid, [&](double r) { return 2.0 * bubble_profile(d, r); });
    CHECK(energy(d, u2) == doctest::Approx(expected).epsilon(1e-12));

    CHECK_THROWS_AS(energy(d, RadialField::sample(RadialGrid::uniform(5, 1.0, 32), [](double) { return 0.0; })),
                    ConfigError);
}

TEST_CASE("grid weights reproduce the ball volume") {
    for (int n : {5, 6, 7}) {
        for (const auto& g : {RadialGrid::geometric(n, 1e-3, 10.0, 500), RadialGrid::sinh_graded(n, 0.1, 3.0, 333),
                              RadialGrid::uniform(n, 2.0, 17)}) {
            std::vector<double> one(g.size(), 1.0);
            const double vol = sphere_area(n) * std::pow(g.r_max(), n) / n;
            CHECK(std::abs(g.ball_integral(one) - vol) / vol < 1e-10);
        }
    }
}
