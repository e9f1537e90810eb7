#include "doctest.h"

#include <cmath>
#include <random>

#include "critheat/errors.hpp"
#include "critheat/linop.hpp"

using namespace critheat;

namespace {

double max_relative(const InteriorSamples& s) {
    double m = 0;
    for (std::size_t i = 0; i < s.values.size(); ++i) m = std::max(m, std::abs(s.values[i]) / s.scale[i]);
    return m;
}

const EigenPair& ground5() {
    static const EigenPair ep = negative_eigenpair(compute_constants(5), eigen_grid(5, 100.0));
    return ep;
}

}  // namespace

TEST_CASE("second solution: Wronskian, far-field constant, defining ODE") {
    for (int n : {5, 6, 7}) {
        const Dim d = compute_constants(n);
        const auto grid = fundamental_grid(n);
        const auto fs = second_solution(d, grid);
        // 50 sample radii spread over the grid
        for (int k = 0; k < 50; ++k) {
            const std::size_t i = k * (grid.size() - 1) / 49;
            const double r = grid[i];
            const double w = std::pow(r, n - 1) * (fs.Ztilde_dr[i] * fs.Z[i] - fs.Ztilde[i] * kernel_radial_dr(d, r));
            CHECK(std::abs(w - 1.0) < 1e-8);
        }
        const double far1 = fs.ztilde.value(1e4), far2 = fs.ztilde.value(1e3);
        CHECK(far1 != 0.0);
        CHECK(std::abs(far1 / far2 - 1.0) < 0.01);
        // r^{n-2} Z̃ bounded near the origin
        CHECK(std::abs(std::pow(grid[0], n - 2) * fs.Ztilde[0]) < 1.0);
        CHECK(std::abs(std::pow(grid[0], n - 2) * fs.Ztilde[0] * kernel_radial(d, 0.0) + 1.0 / (n - 2)) < 1e-4);
        auto V = [&](double r) { return bubble_potential(d, r); };
        CHECK(max_relative(apply_radial_operator(grid, fs.Ztilde.values(), V, 0, 5)) < 1e-6);
    }
    const Dim d = compute_constants(5);
    CHECK_THROWS_AS(second_solution(d, RadialGrid::geometric(5, 1.5, 100.0, 100, false)), ConfigError);
    CHECK_THROWS_AS(second_solution(d, RadialGrid::geometric(5, 1e-3, 100.0, 100, true)), ConfigError);
}

TEST_CASE("corrector p0: orthogonality, equation, decay") {
    for (int n : {5, 6, 7}) {
        const Dim d = compute_constants(n);
        const auto fs = second_solution(d, fundamental_grid(n));
        const auto c = corrector_p0(d, fs);
        CHECK(c.orthogonality < 1e-8);
        const auto& grid = c.p0.grid();
        auto V = [&](double r) { return bubble_potential(d, r); };
        auto q0 = [&](double r) { return corrector_source(d, r); };
        CHECK(max_relative(apply_radial_operator(grid, c.p0.values(), V, 0, 5, q0)) < 1e-6);
        // interpolant honours the equation between nodes to interpolation accuracy
        for (double r : {0.0005, 0.37, 1.9, 42.0}) {
            const double lhs = c.profile.second_derivative(r) + (n - 1) / r * c.profile.derivative(r) +
                               V(r) * c.profile.value(r);
            CHECK(lhs == doctest::Approx(q0(r)).epsilon(1e-4).scale(std::abs(V(r) * c.profile.value(r)) + std::abs(q0(r))));
        }
        // decay: sup of r^{max(n-4,2)}|p0| over the last decade against its value at r = 10
        const double k = std::min(n - 4, 2);
        double sup = 0;
        for (double r = 1e4; r <= 1e5; r *= 1.1) sup = std::max(sup, std::pow(r, k) * std::abs(c.profile.value(r)));
        const double at10 = std::pow(10.0, k) * std::abs(c.profile.value(10.0));
        CHECK(sup / at10 < 2.0);
        CHECK(sup / at10 > 0.5);
    }
}

TEST_CASE("p0 decays only like 1/r in dimension five") {
    const Dim d = compute_constants(5);
    const auto c = corrector_p0(d, second_solution(d, fundamental_grid(5)));
    // r²p₀ keeps growing linearly: the quadratic decay claim needs n ≥ 6
    const double a = 1e6 * c.profile.value(1e3), b = 1e8 * c.profile.value(1e4);
    CHECK(b / a == doctest::Approx(10.0).epsilon(0.02));
}

TEST_CASE("ground state of the linearised operator") {
    const Dim d = compute_constants(5);
    const auto& ep = ground5();
    CHECK(ep.lambda0 < 0.0);
    CHECK(ep.lambda0 == doctest::Approx(-5.730285).epsilon(1e-5));
    CHECK(std::abs(ep.lambda0 - ep.shooting_lambda0) < 1e-4 * std::abs(ep.shooting_lambda0));
    CHECK(ep.second_eigenvalue >= 0.0);
    CHECK(ep.truncation_shift < 1e-6);
    const auto& g = ep.Z0.grid();
    for (std::size_t i = 0; i + 1 < g.size(); ++i) CHECK(ep.Z0[i] > 0.0);
    std::vector<double> sq(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) sq[i] = ep.Z0[i] * ep.Z0[i];
    CHECK(g.ball_integral(sq) == doctest::Approx(1.0).epsilon(1e-12));
    // tail slope of r^{(n−1)/2} Z₀ over [10, 30] against −√|λ₀|
    const std::size_t i1 = g.locate(10.0), i2 = g.locate(30.0);
    auto logz = [&](std::size_t i) { return std::log(ep.Z0[i]) + 2.0 * std::log(g[i]); };
    const double slope = (logz(i2) - logz(i1)) / (g[i2] - g[i1]);
    CHECK(std::abs(slope / -std::sqrt(-ep.lambda0) - 1.0) < 0.05);
    CHECK_THROWS_AS(negative_eigenpair(d, eigen_grid(5, 20.0)), ConfigError);
}

TEST_CASE("coercivity: positive, R^{2-n} scaling, constraint matters") {
    const Dim d = compute_constants(5);
    // Dirichlet eigenvalues on B_{2R} from an independent shooting computation.
    const double reference[] = {1.388153e-3, 1.54569e-4, 1.81762e-5};
    int k = 0;
    std::vector<double> products;
    for (double R : {10.0, 20.0, 40.0}) {
        const auto c = coercivity_constant(d, R, ground5());
        CHECK(c.lambda_R >= 0.0);
        CHECK(c.lambda_R == doctest::Approx(reference[k++]).epsilon(1e-4));
        CHECK(c.unconstrained == doctest::Approx(ground5().lambda0).epsilon(1e-5));
        products.push_back(c.lambda_R * R * R * R);
    }
    const auto [lo, hi] = std::minmax_element(products.begin(), products.end());
    CHECK(*hi / *lo < 4.0);
    CHECK_THROWS_AS(coercivity_constant(d, 5.0, ground5()), ConfigError);
}

TEST_CASE("supersolution g") {
    const Dim d = compute_constants(5);
    for (double a : {0.5, 1.0, 1.5}) {
        const auto g20 = supersolution_g(d, a, 3.0, 20.0);
        const auto g40 = supersolution_g(d, a, 3.0, 40.0);
        CHECK(std::abs(g20.boundary_value) < 1e-10);
        CHECK(g20.residual_max < 1e-6);
        const double s20 = *std::max_element(g20.g.values().begin(), g20.g.values().end());
        const double s40 = *std::max_element(g40.g.values().begin(), g40.g.values().end());
        CHECK(std::abs(s40 / s20 / std::pow(2.0, 2.0 - a) - 1.0) < 0.3);
    }
    std::vector<double> bounds;
    for (double R : {20.0, 40.0, 80.0}) {
        const auto g = supersolution_g(d, 2.5, 3.0, R);
        double b = 0;
        for (std::size_t i = 0; i < g.g.size(); ++i) b = std::max(b, g.g[i] * std::pow(1.0 + g.g.grid()[i], 0.5));
        bounds.push_back(b);
    }
    CHECK(bounds[2] / bounds[0] < 1.3);
    CHECK_THROWS_AS(supersolution_g(d, 3.5, 3.0, 20.0), ConfigError);
    CHECK_THROWS_AS(supersolution_g(d, 1.0, -1.8, 20.0), ConfigError);
    CHECK(cutoff_chi(2.0, 3.0) == 1.0);
    CHECK(cutoff_chi(4.5, 3.0) == 0.0);
    CHECK(cutoff_chi(3.5, 3.0) == doctest::Approx(0.5));
}

TEST_CASE("mode-one operator and harmonic eigenvalues") {
    const Dim d = compute_constants(5);
    const auto grid = bubble_check_grid(5);
    const auto w = RadialField::sample(grid, [&](double r) { return bubble_dr(d, r); });
    const auto out = mode_operator_L1(d, w);
    double m = 0;
    for (double v : out.values()) m = std::max(m, std::abs(v));
    CHECK(m < 1e-6);
    CHECK(spherical_eigenvalue(5, 0) == 0.0);
    for (int n : {5, 6, 7}) CHECK(spherical_eigenvalue(n, 1) == n - 1);
    CHECK(spherical_eigenvalue(5, 2) == 10.0);
}

TEST_CASE("quadratic form identities") {
    const Dim d = compute_constants(5);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.5, 4.0);
    const auto grid = eigen_grid(5, 20.0, 2001);
    for (int t = 0; t < 10; ++t) {
        const double c1 = u(rng), c2 = u(rng), c3 = u(rng), support = pos(rng) * 3.0;
        std::vector<double> phi(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double r = grid[i];
            phi[i] = r < support ? (c1 + c2 * r + c3 * std::cos(r)) * std::pow(1.0 - r / support, 2) : 0.0;
        }
        const auto q = quadratic_form_check(d, grid, phi);
        CHECK(std::abs(q.bilinear - q.by_parts) <= 1e-8 * std::abs(q.bilinear));
    }
    for (int t = 0; t < 10; ++t) {
        const double ra = 0.05 + 0.2 * pos(rng), rb = ra + 2.0 * pos(rng);
        const double c1 = u(rng), c2 = u(rng);
        // vanishes at both ends
        auto phi = [&](double r) { return (r - ra) * (rb - r) * (c1 + c2 * r); };
        auto dphi = [&](double r) { return (rb - r) * (c1 + c2 * r) - (r - ra) * (c1 + c2 * r) + (r - ra) * (rb - r) * c2; };
        const auto m = mode_one_form(d, phi, dphi, ra, rb);
        CHECK(m.substituted >= 0.0);
        CHECK(m.direct == doctest::Approx(m.substituted).epsilon(1e-8));
    }
}
