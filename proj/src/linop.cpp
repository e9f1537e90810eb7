#include "critheat/linop.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>

#include "critheat/errors.hpp"
#include "critheat/ode.hpp"
#include "critheat/quadrature.hpp"

namespace critheat {

namespace {

using Panel = boost::math::quadrature::gauss<double, 20>;

// ∫_a^b f on a single grid interval; intervals are short relative to the
// scale of every integrand used here, so one 20-point panel is plenty, but
// we still split long intervals.
double interval_integral(const std::function<double(double)>& f, double a, double b) {
    const double ratio = std::max(std::abs(b), std::abs(a)) / std::max(std::min(std::abs(a), std::abs(b)), 1e-300);
    if (ratio < 1.5) return Panel::integrate(f, a, b);
    return quad::integrate(f, a, b, 1e-13);
}

}  // namespace

RadialGrid fundamental_grid(int n) { return RadialGrid::geometric(n, 1e-3, 1e5, 9201, false); }

RadialGrid eigen_grid(int n, double truncation, std::size_t count) {
    return RadialGrid::sinh_graded(n, 0.5, truncation, count);
}

double corrector_source(const Dim& dim, double r) {
    return bubble_potential(dim, r) * dim.c2 + dim.c1 * kernel_radial(dim, r);
}

// ---------------------------------------------------------------------------
// Second solution by reduction of order on both sides of the zero of Z_{n+1},
// with an ODE bridge across it.

FundamentalSystem second_solution(const Dim& dim, const RadialGrid& grid) {
    const int n = dim.n;
    const auto& r = grid.nodes();
    const std::size_t N = r.size();
    if (r.front() <= 0.0) {
        throw ConfigError("grid", "the second solution is singular at r = 0; use a grid without the origin");
    }
    const double r0 = kernel_zero(dim);
    const double rL = 0.5 * r0, rR = 2.0 * r0;
    if (!(r.front() < rL && r.back() > rR)) {
        throw ConfigError("grid-missing-sign-change", "grid must extend well across the zero of Z_{n+1}");
    }
    auto finv = [&](double s) {
        const double z = kernel_radial(dim, s);
        return 1.0 / (std::pow(s, n - 1) * z * z);
    };
    auto V = [&](double s) { return bubble_potential(dim, s); };

    std::vector<double> zt(N), ztd(N);
    // Left branch: Z̃ = Z·F, F(r) = −∫_r^{rL} ds/(s^{n-1}Z²).
    std::size_t iL = grid.locate(rL);  // last node ≤ rL
    {
        double F = -interval_integral(finv, r[iL], rL);
        for (std::size_t i = iL + 1; i-- > 0;) {
            if (i < iL) F -= interval_integral(finv, r[i], r[i + 1]);
            const double z = kernel_radial(dim, r[i]);
            zt[i] = z * F;
            ztd[i] = kernel_radial_dr(dim, r[i]) * F + 1.0 / (std::pow(r[i], n - 1) * z);
        }
    }
    // Bridge: integrate L₀Z̃ = 0 from rL to rR.
    std::size_t iR = grid.locate(rR);  // last node ≤ rR
    std::vector<double> times{rL};
    for (std::size_t i = iL + 1; i <= iR; ++i) times.push_back(r[i]);
    if (times.back() != rR) times.push_back(rR);
    const double zL = kernel_radial(dim, rL);
    ode::State y0{0.0, 1.0 / (std::pow(rL, n - 1) * zL)};
    auto states = ode::integrate_at(
        [&](const ode::State& y, ode::State& dy, double s) {
            dy[0] = y[1];
            dy[1] = -(n - 1) / s * y[1] - V(s) * y[0];
        },
        y0, times, 1e-13, 1e-300);
    for (std::size_t i = iL + 1, k = 1; i <= iR; ++i, ++k) {
        zt[i] = states[k][0];
        ztd[i] = states[k][1];
    }
    // Right branch: Z̃ = Z·(C + ∫_{rR}^r ds/(s^{n-1}Z²)), C fixed by the value at rR.
    const double C = states.back()[0] / kernel_radial(dim, rR);
    {
        double F = interval_integral(finv, rR, r[iR + 1]);
        for (std::size_t i = iR + 1; i < N; ++i) {
            if (i > iR + 1) F += interval_integral(finv, r[i - 1], r[i]);
            const double z = kernel_radial(dim, r[i]);
            zt[i] = z * (C + F);
            ztd[i] = kernel_radial_dr(dim, r[i]) * (C + F) + 1.0 / (std::pow(r[i], n - 1) * z);
        }
    }

    std::vector<double> z(N), ztdd(N);
    for (std::size_t i = 0; i < N; ++i) {
        z[i] = kernel_radial(dim, r[i]);
        ztdd[i] = -(n - 1) / r[i] * ztd[i] - V(r[i]) * zt[i];
    }
    FundamentalSystem fs{RadialField(grid, z), RadialField(grid, zt), RadialField(grid, ztd), 1.0, r0,
                         SmoothProfile(r, zt, ztd, ztdd)};
    return fs;
}

// ---------------------------------------------------------------------------

Corrector corrector_p0(const Dim& dim, const FundamentalSystem& sys) {
    const int n = dim.n;
    const RadialGrid& grid = sys.Z.grid();
    const auto& r = grid.nodes();
    const std::size_t N = r.size();
    auto q0 = [&](double s) { return corrector_source(dim, s); };
    auto zq = [&](double s) { return kernel_radial(dim, s) * q0(s) * std::pow(s, n - 1); };

    // Orthogonality ∫ q₀ Z = 0 must hold before the tail formula for B can be used.
    const double split = sys.r_zero;
    // Scale for the orthogonality test: ∫(|Z| pU^{p-1}c₂ + c₁Z²) s^{n-1} ≥ ∫|Zq₀|,
    // smooth on each side of the zero of Z.
    auto bound = [&](double s) {
        const double z = kernel_radial(dim, s);
        return (std::abs(z) * bubble_potential(dim, s) * dim.c2 + dim.c1 * z * z) * std::pow(s, n - 1);
    };
    const double total = quad::integrate(bound, 0.0, split, 1e-12) + quad::integrate_to_infinity(bound, split, 1e-12);
    const double full = quad::integrate(zq, 0.0, split, 1e-13, 1e-15 * total) +
                        quad::integrate_to_infinity(zq, split, 1e-13, 1e-15 * total);
    const double ortho = std::abs(full) / total;
    if (ortho > 1e-8) throw NumericalError("orthogonality", "q0 is not orthogonal to Z_{n+1}; quadrature is off");

    // B(r) = ∫₀^r Z q₀ s^{n-1}: forward up to the zero of Z, then −∫_r^∞.
    std::vector<double> B(N);
    const std::size_t isplit = grid.locate(split);
    B[0] = quad::integrate(zq, 0.0, r[0], 1e-13);
    for (std::size_t i = 1; i <= isplit; ++i) B[i] = B[i - 1] + interval_integral(zq, r[i - 1], r[i]);
    B[N - 1] = -quad::integrate_to_infinity(zq, r[N - 1], 1e-13);
    for (std::size_t i = N - 1; i-- > isplit + 1;) B[i] = B[i + 1] - interval_integral(zq, r[i], r[i + 1]);

    // A(r) = ∫₀^r Z̃ q₀ s^{n-1}. Near 0, Z̃ s^{n-2} is constant to O(s²).
    auto ztq = [&](double s) { return sys.ztilde.value(s) * q0(s) * std::pow(s, n - 1); };
    std::vector<double> A(N);
    A[0] = sys.Ztilde[0] * std::pow(r[0], n - 2) * q0(0.0) * r[0] * r[0] / 2.0;
    for (std::size_t i = 1; i < N; ++i) A[i] = A[i - 1] + interval_integral(ztq, r[i - 1], r[i]);

    std::vector<double> p(N), dp(N), ddp(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double z = sys.Z[i], zd = kernel_radial_dr(dim, r[i]);
        p[i] = sys.Ztilde[i] * B[i] - z * A[i];
        dp[i] = sys.Ztilde_dr[i] * B[i] - zd * A[i];
        ddp[i] = q0(r[i]) - (n - 1) / r[i] * dp[i] - bubble_potential(dim, r[i]) * p[i];
    }
    // p₀(0) = p₀′(0) = 0 and n p₀″(0) = q₀(0) for the regular solution.
    std::vector<double> rr{0.0}, pp{0.0}, dpp{0.0}, ddpp{q0(0.0) / n};
    rr.insert(rr.end(), r.begin(), r.end());
    pp.insert(pp.end(), p.begin(), p.end());
    dpp.insert(dpp.end(), dp.begin(), dp.end());
    ddpp.insert(ddpp.end(), ddp.begin(), ddp.end());
    Corrector c{RadialField(grid, p), SmoothProfile(rr, pp, dpp, ddpp), ortho};
    return c;
}

// ---------------------------------------------------------------------------
// Ground state

double shooting_lambda0(const Dim& dim, double truncation, double guess) {
    const int n = dim.n;
    const double V0 = bubble_potential(dim, 0.0);
    const double r0 = 1e-4;
    auto end_value = [&](double lam) {
        ode::State y{1.0 - (V0 + lam) * r0 * r0 / (2.0 * n), -(V0 + lam) * r0 / n};
        auto s = ode::integrate_at(
            [&](const ode::State& u, ode::State& du, double r) {
                du[0] = u[1];
                du[1] = -(n - 1) / r * u[1] - (bubble_potential(dim, r) + lam) * u[0];
            },
            y, {r0, truncation}, 1e-12, 1e-300);
        return s.back()[0];
    };
    // Below the ground state the solution stays positive; above it crosses zero.
    double width = 0.01 * std::abs(guess);
    double lo = guess - width, hi = guess + width;
    for (int i = 0; i < 20 && end_value(lo) <= 0.0; ++i) lo -= (width *= 2);
    width = 0.01 * std::abs(guess);
    for (int i = 0; i < 20 && end_value(hi) >= 0.0; ++i) hi += (width *= 2);
    for (int it = 0; it < 100 && hi - lo > 1e-14 * std::abs(guess); ++it) {
        const double mid = 0.5 * (lo + hi);
        (end_value(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

struct DiscreteGround {
    double lambda0, lambda1;
    std::vector<double> phi;  // on all nodes, zero at the Dirichlet end
};

DiscreteGround discrete_ground(const Dim& dim, const RadialGrid& grid) {
    const FluxLaplacian F(grid);
    std::vector<double> pot(F.unknowns());
    for (std::size_t i = 0; i < pot.size(); ++i) pot[i] = bubble_potential(dim, grid[i]);
    const SymTridiag T = F.symmetric_operator(pot);
    DiscreteGround g;
    g.lambda0 = T.eigenvalue(0);
    g.lambda1 = T.eigenvalue(1);
    const auto x = T.eigenvector(g.lambda0);
    g.phi.assign(grid.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) g.phi[i] = x[i] / std::sqrt(F.volume[i]);
    if (g.phi[0] < 0) for (double& v : g.phi) v = -v;
    return g;
}

RadialGrid extend_grid(const RadialGrid& grid, double new_max) {
    std::vector<double> r = grid.nodes();
    double h = r.back() - r[r.size() - 2];
    const double growth = r.back() / r[r.size() - 2];
    while (r.back() < new_max) {
        h *= std::min(growth, 1.01);
        r.push_back(std::min(r.back() + h, new_max));
    }
    return RadialGrid::from_nodes(grid.dim(), r);
}

}  // namespace

EigenPair negative_eigenpair(const Dim& dim, const RadialGrid& grid) {
    if (grid.r_max() < 50.0) throw ConfigError("truncation", "eigenproblem truncation radius must be at least 50");
    if (grid[0] != 0.0) throw ConfigError("grid", "eigenproblem grid must start at the origin");
    DiscreteGround g = discrete_ground(dim, grid);
    std::vector<double> sq(g.phi.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = g.phi[i] * g.phi[i];
    const double norm = std::sqrt(grid.ball_integral(sq));
    for (double& v : g.phi) v /= norm;

    EigenPair ep{g.lambda0, g.lambda1, 0.0, 0.0, RadialField(grid, g.phi)};
    ep.shooting_lambda0 = shooting_lambda0(dim, grid.r_max(), g.lambda0);
    if (std::abs(ep.shooting_lambda0 - ep.lambda0) > 1e-4 * std::abs(ep.shooting_lambda0)) {
        throw NumericalError("resolution", "discrete and shooting ground-state eigenvalues disagree");
    }
    ep.truncation_shift = std::abs(discrete_ground(dim, extend_grid(grid, 2.0 * grid.r_max())).lambda0 - g.lambda0);
    return ep;
}

// ---------------------------------------------------------------------------
// Coercivity on B_{2R}

namespace {

double constrained_minimum(const Dim& dim, const RadialGrid& grid, const EigenPair& ground, double* unconstrained) {
    const FluxLaplacian F(grid);
    const std::size_t M = F.unknowns();
    std::vector<double> pot(M);
    for (std::size_t i = 0; i < M; ++i) pot[i] = bubble_potential(dim, grid[i]);
    const SymTridiag T = F.symmetric_operator(pot);
    const double l0 = T.eigenvalue(0), l1 = T.eigenvalue(1);
    if (unconstrained) *unconstrained = l0;

    // Constraint vector in the symmetric coordinates x = V^{1/2}φ.
    const RadialGrid& zg = ground.Z0.grid();
    std::vector<double> z(M);
    for (std::size_t i = 0; i < M; ++i) {
        const double s = grid[i];
        double zv = 0.0;
        if (s < zg.r_max()) {
            const std::size_t j = zg.locate(s);
            const double t = (s - zg[j]) / (zg[j + 1] - zg[j]);
            zv = (1 - t) * ground.Z0[j] + t * ground.Z0[j + 1];
        }
        z[i] = std::sqrt(F.volume[i]) * zv;
    }
    // The constrained minimum is the root in (λ₀, λ₁) of zᵀ(T − μ)^{-1}z,
    // which increases strictly between the two poles.
    std::vector<double> a(M, 0.0), c(M, 0.0), b(M);
    for (std::size_t i = 0; i + 1 < M; ++i) {
        a[i + 1] = T.e[i];
        c[i] = T.e[i];
    }
    auto secular = [&](double mu) {
        for (std::size_t i = 0; i < M; ++i) b[i] = T.d[i] - mu;
        std::vector<double> x = z;
        solve_tridiagonal(a, b, c, x);
        double s = 0.0;
        for (std::size_t i = 0; i < M; ++i) s += z[i] * x[i];
        return s;
    };
    double lo = l0, hi = l1;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (secular(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

CoercivityResult coercivity_constant(const Dim& dim, double R, const EigenPair& ground) {
    if (R < 10.0) throw ConfigError("coercivity", "coercivity radius must be at least 10");
    CoercivityResult res;
    res.R = R;
    // Two grids of the same family; the second halves the spacing, so the
    // O(h²) error is removed by Richardson extrapolation.
    const std::size_t coarse = 4001, fine = 8001;
    double unc = 0.0;
    const double lc = constrained_minimum(dim, RadialGrid::sinh_graded(dim.n, 0.5, 2.0 * R, coarse), ground, nullptr);
    const double lf = constrained_minimum(dim, RadialGrid::sinh_graded(dim.n, 0.5, 2.0 * R, fine), ground, &unc);
    res.lambda_R_coarse = lc;
    res.lambda_R = (4.0 * lf - lc) / 3.0;
    res.unconstrained = unc;
    if (res.lambda_R < -1e-9) throw NumericalError("discretization", "negative coercivity constant");
    return res;
}

// ---------------------------------------------------------------------------

double cutoff_chi(double s, double M) {
    if (s <= M) return 1.0;
    if (s >= M + 1.0) return 0.0;
    const double t = s - M;
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

SuperSolution supersolution_g(const Dim& dim, double a, double M, double R) {
    if (!(a > 0.0 && a < 3.0)) throw ConfigError("exponent", "a must lie in (0, 3)");
    const int n = dim.n;
    // |Z_{n+1}| must already be decreasing at M+2 (its extremum sits at
    // r² = (n+2)/(n-2)).
    if (!(kernel_radial_dr(dim, M + 2.0) > 0.0 && kernel_radial(dim, M + 2.0) < 0.0)) {
        throw ConfigError("cutoff", "M too small: |Z_{n+1}| is not decreasing at M+2");
    }
    const RadialGrid grid = RadialGrid::sinh_graded(n, 0.5, 2.0 * R, 4001);
    auto W = [&](double s) { return (1.0 - cutoff_chi(s, M)) * bubble_potential(dim, s); };
    auto f = [&](double s) { return 1.0 / (1.0 + std::pow(s, a)); };

    // State (g₂, g₂′, I, K) with I = ∫₀^r g₂ s^{n-1} f, K = ∫₀^r I/(g₂² s^{n-1}).
    const double r0 = std::min(1e-6, 0.1 * grid[1]);
    std::vector<double> times{r0};
    times.insert(times.end(), grid.nodes().begin() + 1, grid.nodes().end());
    ode::State y0{1.0, 0.0, std::pow(r0, n) / n, r0 * r0 / (2.0 * n)};
    auto st = ode::integrate_at(
        [&](const ode::State& y, ode::State& dy, double s) {
            dy[0] = y[1];
            dy[1] = -(n - 1) / s * y[1] - W(s) * y[0];
            dy[2] = y[0] * std::pow(s, n - 1) * f(s);
            dy[3] = y[2] / (y[0] * y[0] * std::pow(s, n - 1));
        },
        y0, times, 1e-12, 1e-15);
    const double Kend = st.back()[3];
    std::vector<double> g(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (st[i][0] <= 0.0) throw NumericalError("supersolution", "g2 lost positivity; increase M");
        g[i] = st[i][0] * (Kend - st[i][3]);
    }
    g[0] = Kend;  // g₂ = 1 and K = 0 at the origin
    g.back() = 0.0;
    SuperSolution out{RadialField(grid, g), 0.0, st.back()[0] * (Kend - st.back()[3])};
    const auto res = apply_radial_operator(grid, g, W, 0, 5, [&](double s) { return -f(s); });
    for (std::size_t i = 0; i < res.values.size(); ++i) {
        out.residual_max = std::max(out.residual_max, std::abs(res.values[i]) / res.scale[i]);
    }
    return out;
}

RadialField mode_operator_L1(const Dim& dim, const RadialField& phi) {
    const RadialGrid& grid = phi.grid();
    const auto res = apply_radial_operator(grid, phi.values(), [&](double r) { return bubble_potential(dim, r); }, 1, 7);
    std::vector<double> nodes(grid.nodes().begin() + res.first, grid.nodes().begin() + res.first + res.values.size());
    return RadialField(RadialGrid::from_nodes(grid.dim(), nodes), res.values);
}

double spherical_eigenvalue(int n, int ell) {
    if (ell < 0) throw ConfigError("index-out-of-range", "harmonic degree must be nonnegative");
    return static_cast<double>(ell) * (n - 2 + ell);
}

QuadraticForms quadratic_form_check(const Dim& dim, const RadialGrid& grid, std::span<const double> phi) {
    if (phi.size() != grid.size()) throw ConfigError("grid", "field length does not match grid");
    if (phi.back() != 0.0) throw ConfigError("boundary", "test function must vanish at the outer node");
    const FluxLaplacian F(grid);
    const std::size_t M = F.unknowns();
    QuadraticForms q;
    for (std::size_t i = 0; i < M; ++i) {
        const double pot = bubble_potential(dim, grid[i]);
        const double d = phi[i + 1] - phi[i];
        q.bilinear += F.conductance[i] * d * d - F.volume[i] * pot * phi[i] * phi[i];
        const double flux_r = F.conductance[i] * (phi[i + 1] - phi[i]);
        const double flux_l = i > 0 ? F.conductance[i - 1] * (phi[i] - phi[i - 1]) : 0.0;
        q.by_parts -= phi[i] * ((flux_r - flux_l) + F.volume[i] * pot * phi[i]);
    }
    q.bilinear *= dim.omega_n;
    q.by_parts *= dim.omega_n;
    return q;
}

ModeOneForms mode_one_form(const Dim& dim, const std::function<double(double)>& phi,
                           const std::function<double(double)>& dphi, double ra, double rb) {
    const int n = dim.n;
    ModeOneForms m;
    m.direct = quad::integrate(
        [&](double r) {
            const double v = phi(r), dv = dphi(r);
            return (dv * dv + (n - 1) * v * v / (r * r) - bubble_potential(dim, r) * v * v) * std::pow(r, n - 1);
        },
        ra, rb, 1e-13);
    m.substituted = quad::integrate(
        [&](double r) {
            const double w = bubble_dr(dim, r), dw = bubble_drr(dim, r);
            const double dpsi = (dphi(r) * w - phi(r) * dw) / (w * w);
            return w * w * dpsi * dpsi * std::pow(r, n - 1);
        },
        ra, rb, 1e-13);
    return m;
}

}  // namespace critheat
