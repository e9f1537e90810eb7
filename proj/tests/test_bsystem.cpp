#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "critheat/bsystem.hpp"
#include "critheat/errors.hpp"

using namespace critheat;

namespace {

Point random_point(std::mt19937_64& rng, int n, double radius) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (;;) {
        Point x(n);
        double s = 0;
        for (auto& c : x) { c = u(rng); s += c * c; }
        if (s < 1.0) {
            for (auto& c : x) c *= radius;
            return x;
        }
    }
}

Point on_plane(int n, double r, double angle) {
    Point x(n, 0.0);
    x[0] = r * std::cos(angle);
    x[1] = r * std::sin(angle);
    return x;
}

// Random positive definite configurations with points kept apart.
GreenMatrix random_pd(std::mt19937_64& rng, const BallDomain& dom, int k) {
    for (;;) {
        std::vector<Point> q;
        for (int j = 0; j < k; ++j) q.push_back(random_point(rng, dom.n, 0.9));
        auto gm = interaction_matrix(dom, q);
        if (gm.is_positive_definite) return gm;
    }
}

}  // namespace

TEST_CASE("functional: k = 1 stationary point, gradient, small-Λ sign") {
    const Dim d = compute_constants(5);
    const BallDomain dom(d, 1.0);
    const auto gm = interaction_matrix(dom, {on_plane(5, 0.3, 0.0)});
    const double H = gm.H(0);
    const double Lstar = std::pow(2.0 / (3.0 * H), 3.0 / 2.0);
    Eigen::VectorXd L(1);
    L << Lstar;
    CHECK(std::abs(functional_I_tilde(gm, L).grad(0)) < 1e-13);
    L << 1e-6;
    CHECK(functional_I_tilde(gm, L).value < 0.0);
    CHECK(functional_I_tilde(gm, L).value > -1e-7);
    L << -1.0;
    CHECK_THROWS_AS(functional_I_tilde(gm, L), ConfigError);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.05, 0.5);
    const auto gm3 = random_pd(rng, dom, 3);
    for (int t = 0; t < 10; ++t) {
        Eigen::VectorXd x(3);
        for (int i = 0; i < 3; ++i) x(i) = u(rng);
        const auto e = functional_I_tilde(gm3, x);
        for (int i = 0; i < 3; ++i) {
            const double h = 1e-6 * x(i);
            Eigen::VectorXd xp = x, xm = x;
            xp(i) += h;
            xm(i) -= h;
            const double fd = (functional_I_tilde(gm3, xp).value - functional_I_tilde(gm3, xm).value) / (2 * h);
            CHECK(std::abs(fd - e.grad(i)) <= 1e-6 * std::abs(e.grad(i)) + 1e-10);
            const Eigen::VectorXd hfd = (functional_I_tilde(gm3, xp).grad - functional_I_tilde(gm3, xm).grad) / (2 * h);
            CHECK((hfd - e.hess.col(i)).norm() <= 1e-6 * e.hess.norm());
        }
    }
}

TEST_CASE("heights: closed form for one bubble at the centre") {
    for (int n : {5, 6, 7}) {
        const Dim d = compute_constants(n);
        const BallDomain dom(d, 1.0);
        const auto bs = solve_heights(interaction_matrix(dom, {Point(n, 0.0)}));
        const double expected = std::pow(2.0 / ((n - 2.0) * d.alpha_n), 1.0 / (n - 4.0));
        CHECK(std::abs(bs.b(0) - expected) <= 1e-10 * expected);
        CHECK(bs.residual < 1e-10);
    }
    const Dim d5 = compute_constants(5);
    CHECK(solve_heights(interaction_matrix(BallDomain(d5, 1.0), {Point(5, 0.0)})).b(0) ==
          doctest::Approx(0.0874657).epsilon(1e-5));
}

TEST_CASE("heights: residual, uniqueness, M bound, spectral data") {
    const Dim d = compute_constants(5);
    const BallDomain dom(d, 1.0);
    std::mt19937_64 rng(17);
    for (int k : {1, 2, 3}) {
        for (int rep = 0; rep < 4; ++rep) {
            const auto gm = random_pd(rng, dom, k);
            const auto bs = solve_heights(gm);
            CHECK(bs.residual < 1e-10);
            CHECK(bs.grad_norm < 1e-12);
            CHECK((bs.b.array() > 0).all());
            // Hessian of Ĩ at the minimiser is positive definite
            CHECK(Eigen::LLT<Eigen::MatrixXd>(functional_I_tilde(gm, bs.Lambda).hess).info() == Eigen::Success);
            // M from its explicit formula equals D²I + 2/(n-2) I, and P diagonalises D²I
            Eigen::MatrixXd recon = (2.0 / 3.0) * bs.P.transpose() * bs.sigma_bar.asDiagonal() * bs.P;
            CHECK((recon - bs.hessI).norm() < 1e-10 * bs.hessI.norm());
            CHECK((bs.sigma_bar.array() > 0).all());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(bs.M);
            CHECK(es.eigenvalues().minCoeff() >= (2.0 / 3.0) * (1.0 + bs.sigma_bar.minCoeff()) - 1e-10);
            // distinct starting points reach the same minimiser
            std::uniform_real_distribution<double> u(0.2, 5.0);
            for (int s = 0; s < 5; ++s) {
                SolveOptions o;
                o.start = bs.Lambda;
                for (int j = 0; j < k; ++j) o.start(j) *= u(rng);
                CHECK((solve_heights(gm, o).b - bs.b).lpNorm<Eigen::Infinity>() < 1e-8);
            }
            // scaling coherence: tG rescales Λ* by t^{-(n-2)/(2(n-4))}
            for (double t : {0.5, 2.0}) {
                const auto gs = green_matrix_from(gm.n, gm.R, gm.q, t * gm.matrix);
                const auto bt = solve_heights(gs);
                CHECK((bt.Lambda - std::pow(t, -1.5) * bs.Lambda).norm() < 1e-10 * bs.Lambda.norm());
            }
        }
    }
}

TEST_CASE("M explicit formulas agree with a finite-difference Hessian of I_0") {
    const Dim d = compute_constants(6);
    const BallDomain dom(d, 1.0);
    std::mt19937_64 rng(23);
    const auto gm = random_pd(rng, dom, 3);
    const auto bs = solve_heights(gm);
    const int n = 6;
    auto I0 = [&](const Eigen::VectorXd& b) {
        double s = 0;
        for (int j = 0; j < 3; ++j) {
            s += std::pow(b(j), n - 2) * gm.H(j);
            for (int i = 0; i < 3; ++i) if (i != j) s -= std::pow(b(i) * b(j), 0.5 * (n - 2)) * gm.G(i, j);
        }
        return s / (n - 2);
    };
    const double h = 1e-4 * bs.b.minCoeff();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            Eigen::VectorXd pp = bs.b, pm = bs.b, mp = bs.b, mm = bs.b;
            pp(i) += h; pp(j) += h;
            pm(i) += h; pm(j) -= h;
            mp(i) -= h; mp(j) += h;
            mm(i) -= h; mm(j) -= h;
            const double fd = (I0(pp) - I0(pm) - I0(mp) + I0(mm)) / (4 * h * h);
            CHECK(fd == doctest::Approx(bs.M(i, j)).epsilon(1e-5).scale(bs.M.norm()));
        }
    }
}

TEST_CASE("non positive definite configurations are refused and escape") {
    const Dim d = compute_constants(5);
    const BallDomain dom(d, 1.0);
    Point a(5, 0.0), b(5, 0.0);
    a[0] = 0.05;
    b[0] = 0.051;
    const auto gm = interaction_matrix(dom, {a, b});
    CHECK_THROWS_AS(solve_heights(gm), ConfigError);
    const auto rc = positivity_reciprocal_check(gm);
    CHECK_FALSE(rc.solvable);
    CHECK(rc.escaped_to_boundary);

    std::vector<Point> tri;
    for (int j = 0; j < 3; ++j) tri.push_back(on_plane(5, 0.95, 2.0 * std::numbers::pi * j / 3.0));
    CHECK(positivity_reciprocal_check(interaction_matrix(dom, tri)).solvable);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 10; ++i) CHECK(positivity_reciprocal_check(interaction_matrix(dom, {random_point(rng, 5, 0.99)})).solvable);
}
