#include "critheat/bubble.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "critheat/errors.hpp"
#include "critheat/quadrature.hpp"

namespace critheat {

namespace {

constexpr double kConstTol = 1e-13;

// ∫₀^∞ f(r) r^{n-1} dr, split at r = 1 where Z_{n+1} changes sign.
double radial_moment(int n, const quad::Integrand& f) {
    auto g = [&](double r) { return f(r) * std::pow(r, n - 1); };
    return quad::integrate(g, 0.0, 1.0, kConstTol) + quad::integrate_to_infinity(g, 1.0, kConstTol);
}

Dim with_alpha(int n, double alpha) {
    Dim d;
    d.n = n;
    d.p = (n + 2.0) / (n - 2.0);
    d.alpha_n = alpha;
    d.omega_n = sphere_area(n);
    return d;
}

}  // namespace

double alpha_exponent_form(int n) { return std::pow(n * (n - 2.0), (n - 2.0) / 4.0); }
double alpha_root_form(int n) { return std::pow(n * (n - 2.0), 1.0 / (n - 2.0)); }

double bubble_profile(const Dim& dim, double r) {
    return dim.alpha_n * std::pow(1.0 + r * r, -0.5 * (dim.n - 2));
}

double bubble_dr(const Dim& dim, double r) {
    const double m = 0.5 * (dim.n - 2);
    return -2.0 * m * dim.alpha_n * r * std::pow(1.0 + r * r, -m - 1.0);
}

double bubble_drr(const Dim& dim, double r) {
    const double m = 0.5 * (dim.n - 2);
    const double s = 1.0 + r * r;
    return dim.alpha_n * (-2.0 * m * std::pow(s, -m - 1.0) + 4.0 * m * (m + 1.0) * r * r * std::pow(s, -m - 2.0));
}

double bubble_potential(const Dim& dim, double r) {
    return dim.p * std::pow(bubble_profile(dim, r), dim.p - 1.0);
}

double kernel_radial(const Dim& dim, double r) {
    const double m = 0.5 * (dim.n - 2);
    return m * dim.alpha_n * (1.0 - r * r) * std::pow(1.0 + r * r, -m - 1.0);
}

double kernel_radial_dr(const Dim& dim, double r) {
    const double m = 0.5 * (dim.n - 2);
    const double s = 1.0 + r * r;
    return -2.0 * m * dim.alpha_n * r * std::pow(s, -m - 2.0) * (s + (m + 1.0) * (1.0 - r * r));
}

double kernel_zero(const Dim& dim) {
    // Z_{n+1}(0) > 0 and Z_{n+1}(r) < 0 for large r: bracket and bisect.
    double lo = 0.0, hi = 1.0;
    while (kernel_radial(dim, hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (kernel_radial(dim, mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double kernel_Z(const Dim& dim, int index, std::span<const double> y) {
    if (index < 1 || index > dim.n + 1) throw ConfigError("index-out-of-range", "kernel index must be in 1..n+1");
    if (static_cast<int>(y.size()) != dim.n) throw ConfigError("dimension-mismatch", "point has wrong dimension");
    double r2 = 0.0;
    for (double v : y) r2 += v * v;
    const double r = std::sqrt(r2);
    if (index == dim.n + 1) return kernel_radial(dim, r);
    // ∂U/∂y_i = U'(r) y_i / r = −(n-2) α y_i (1+r²)^{-n/2}, regular at 0.
    return -(dim.n - 2) * dim.alpha_n * y[index - 1] * std::pow(1.0 + r2, -0.5 * dim.n);
}

double bubble_residual_max(int n, double alpha, const RadialGrid& grid, int width) {
    if (width != 3 && width != 5 && width != 7) throw ConfigError("stencil", "stencil width must be 3, 5 or 7");
    const Dim d = with_alpha(n, alpha);
    // Near the origin the second-difference weights grow like 1/h², which
    // would amplify the rounding of U itself past the residual being
    // measured; U and its differences are therefore formed in long double.
    const auto& r = grid.nodes();
    std::vector<long double> u(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const long double s = 1.0L + static_cast<long double>(r[i]) * r[i];
        u[i] = static_cast<long double>(alpha) * std::pow(s, -0.5L * (n - 2));
    }
    const std::size_t half = static_cast<std::size_t>(width / 2);
    double mx = 0.0;
    for (std::size_t i = half; i + half < r.size(); ++i) {
        if (r[i] <= 0.0) continue;
        std::span<const double> xs(r.data() + (i - half), static_cast<std::size_t>(width));
        const auto w1 = fd_weights(r[i], xs, 1);
        const auto w2 = fd_weights(r[i], xs, 2);
        long double d1 = 0, d2 = 0;
        for (int k = 0; k < width; ++k) {
            const long double du = u[i - half + k] - u[i];
            d1 += w1[k] * du;
            d2 += w2[k] * du;
        }
        const long double res = d2 + (n - 1) / static_cast<long double>(r[i]) * d1 + std::pow(u[i], static_cast<long double>(d.p));
        mx = std::max(mx, static_cast<double>(std::abs(res)));
    }
    return mx;
}

RadialGrid bubble_check_grid(int n) { return RadialGrid::sinh_graded(n, 1.0, 1e3, 3801); }

Dim compute_constants(int n) {
    if (n < 5) {
        throw ConfigError("dimension-unsupported",
                          "n must be at least 5: the integral of Z_{n+1}^2 diverges for n <= 4");
    }
    // Select the amplitude convention by the PDE residual on a modest grid.
    const RadialGrid probe = RadialGrid::sinh_graded(n, 1.0, 50.0, 801);
    const double res_exp = bubble_residual_max(n, alpha_exponent_form(n), probe);
    const double res_root = bubble_residual_max(n, alpha_root_form(n), probe);
    Dim d = res_exp <= res_root ? with_alpha(n, alpha_exponent_form(n)) : with_alpha(n, alpha_root_form(n));
    d.alpha_convention = res_exp <= res_root ? "(n(n-2))^((n-2)/4)" : "(n(n-2))^(1/(n-2))";

    const double w = d.omega_n;
    d.a_n = w * radial_moment(n, [&](double r) { return std::pow(bubble_profile(d, r), d.p); });
    d.c1 = 0.5 * (n - 2) * d.a_n;
    d.c1_alt = -d.p * w * radial_moment(n, [&](double r) {
        return std::pow(bubble_profile(d, r), d.p - 1.0) * kernel_radial(d, r);
    });
    d.c2 = w * radial_moment(n, [&](double r) {
        const double z = kernel_radial(d, r);
        return z * z;
    });
    d.gamma_n = std::pow((n - 2.0) * d.c2 / (2.0 * (n - 4.0) * d.c1), 1.0 / (n - 4.0));
    const double grad2 = w * radial_moment(n, [&](double r) {
        const double g = bubble_dr(d, r);
        return g * g;
    });
    const double pot = w * radial_moment(n, [&](double r) { return std::pow(bubble_profile(d, r), d.p + 1.0); });
    d.S_n = 0.5 * grad2 - (n - 2.0) / (2.0 * n) * pot;
    return d;
}

double energy(const Dim& dim, const RadialField& u) {
    const RadialGrid& g = u.grid();
    if (g.size() < 64) throw ConfigError("grid-too-coarse", "energy needs at least 64 grid nodes");
    const auto du = gradient(g, u.values());
    const double q = 2.0 * dim.n / (dim.n - 2.0);
    std::vector<double> dens(g.size());
    for (std::size_t i = 0; i < dens.size(); ++i) {
        dens[i] = 0.5 * du[i] * du[i] - (dim.n - 2.0) / (2.0 * dim.n) * std::pow(std::abs(u[i]), q);
    }
    return g.ball_integral(dens);
}

}  // namespace critheat
