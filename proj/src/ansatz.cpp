#include "critheat/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "critheat/errors.hpp"
#include "critheat/quadrature.hpp"

namespace critheat {

namespace {

double dot(const Point& a, const Point& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Point scaled_offset(const Point& x, const Point& centre, double mu) {
    Point y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - centre[i]) / mu;
    return y;
}

double signed_pow(double u, double p) { return u >= 0 ? std::pow(u, p) : -std::pow(-u, p); }

}  // namespace

void validate(const BubbleConfig& cfg) {
    const std::size_t k = cfg.k();
    if (k == 0) throw ConfigError("configuration", "at least one bubble is required");
    if (cfg.b.size() != k || cfg.mu.size() != k || cfg.mu_dot.size() != k || cfg.xi.size() != k ||
        cfg.xi_dot.size() != k) {
        throw ConfigError("configuration", "parameter vectors must all have k entries");
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (!(cfg.mu[j] > 0.0)) throw ConfigError("configuration", "scalings must be positive");
        if (cfg.q[j].size() != static_cast<std::size_t>(cfg.dom.n) ||
            cfg.xi[j].size() != static_cast<std::size_t>(cfg.dom.n)) {
            throw ConfigError("configuration", "points must have n coordinates");
        }
    }
    if (k > 1) {
        double dmin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j < k; ++j) {
                Point d = cfg.q[i];
                for (std::size_t c = 0; c < d.size(); ++c) d[c] -= cfg.q[j][c];
                dmin = std::min(dmin, std::sqrt(dot(d, d)));
            }
        for (std::size_t j = 0; j < k; ++j) {
            Point d = cfg.xi[j];
            for (std::size_t c = 0; c < d.size(); ++c) d[c] -= cfg.q[j][c];
            if (std::sqrt(dot(d, d)) >= dmin / 4) {
                throw ConfigError("configuration", "centre drifted more than a quarter separation from its anchor");
            }
        }
    }
}

bool satisfies_scaling_hypothesis(const BubbleConfig& cfg, double sigma) {
    for (std::size_t j = 0; j < cfg.k(); ++j) {
        if (std::abs(cfg.mu[j] - cfg.b[j] * cfg.mu0) > std::pow(cfg.mu0, 1 + sigma)) return false;
    }
    return true;
}

double far_field_mu0_exponent(int n) { return std::min(0.5 * (3 * n - 10), 0.5 * (n + 2)); }

Ansatz::Ansatz(const Dim& dim) : Ansatz(dim, corrector_p0(dim, second_solution(dim, fundamental_grid(dim.n)))) {}

Ansatz::Ansatz(const Dim& dim, Corrector corrector) : dim_(dim), corrector_(std::move(corrector)) {}

double Ansatz::gamma(double b) const { return 2.0 * b * b / ((dim_.n - 2) * dim_.c2); }

double Ansatz::bubbles(const BubbleConfig& cfg, const Point& x) const {
    const double a = 0.5 * (dim_.n - 2);
    double s = 0;
    for (std::size_t i = 0; i < cfg.k(); ++i) {
        const Point y = scaled_offset(x, cfg.xi[i], cfg.mu[i]);
        s += std::pow(cfg.mu[i], -a) * bubble_profile(dim_, std::sqrt(dot(y, y)));
    }
    return s;
}

double Ansatz::remainder(const BubbleConfig& cfg, const Point& x, const ResidualOptions& opts) const {
    const double a = 0.5 * (dim_.n - 2);
    double s = 0;
    for (std::size_t i = 0; i < cfg.k(); ++i) {
        if (opts.regular_part) s -= std::pow(cfg.mu[i], a) * regular_part(cfg.dom, x, cfg.q[i]);
        if (opts.corrected) {
            const Point y = scaled_offset(x, cfg.xi[i], cfg.mu[i]);
            s += std::pow(cfg.mu[i], -a) * gamma(cfg.b[i]) * std::pow(cfg.mu0, dim_.n - 2) *
                 corrector_.profile.value(std::sqrt(dot(y, y)));
        }
    }
    return s;
}

double Ansatz::value(const BubbleConfig& cfg, const Point& x, bool corrected) const {
    if (!cfg.dom.contains(x)) throw ConfigError("outside-domain", "evaluation point must lie in the ball");
    ResidualOptions opts;
    opts.corrected = corrected;
    return bubbles(cfg, x) + remainder(cfg, x, opts);
}

double Ansatz::time_derivative(const BubbleConfig& cfg, const Point& x, const ResidualOptions& opts) const {
    const int n = dim_.n;
    const double a = 0.5 * (n - 2);
    double s = 0;
    for (std::size_t i = 0; i < cfg.k(); ++i) {
        const double mu = cfg.mu[i], mud = cfg.mu_dot[i];
        const Point y = scaled_offset(x, cfg.xi[i], mu);
        const double r = std::sqrt(dot(y, y));
        const double xi_dot_y = r > 0 ? dot(cfg.xi_dot[i], y) / r : 0.0;  // ξ̇·ŷ
        s -= std::pow(mu, -a - 1) * (mud * kernel_radial(dim_, r) + bubble_dr(dim_, r) * xi_dot_y);
        if (opts.regular_part) s -= a * std::pow(mu, a - 1) * mud * regular_part(cfg.dom, x, cfg.q[i]);
        if (opts.corrected) {
            const double P = corrector_.profile.value(r), dP = corrector_.profile.derivative(r);
            const double m = std::pow(cfg.mu0, n - 2);
            s += gamma(cfg.b[i]) *
                 ((n - 2) * std::pow(cfg.mu0, n - 3) * cfg.mu0_dot * std::pow(mu, -a) * P -
                  std::pow(mu, -a - 1) * mud * m * (a * P + r * dP) - std::pow(mu, -a - 1) * m * dP * xi_dot_y);
        }
    }
    return s;
}

namespace {

template <class F>
double fd_laplacian(const F& f, const BallDomain& dom, const Point& x, double h) {
    Point z = x;
    // the farthest stencil point must stay inside
    if (std::sqrt(dot(x, x)) + 2 * h >= dom.R) throw ConfigError("stencil", "finite-difference stencil leaves the domain");
    const double f0 = f(x);
    double s = 0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        double v[4];
        const double off[4] = {-2 * h, -h, h, 2 * h};
        for (int k = 0; k < 4; ++k) {
            z[d] = x[d] + off[k];
            v[k] = f(z);
        }
        z[d] = x[d];
        s += (-v[0] + 16 * v[1] - 30 * f0 + 16 * v[2] - v[3]) / (12 * h * h);
    }
    return s;
}

}  // namespace

double Ansatz::laplacian(const BubbleConfig& cfg, const Point& x, const ResidualOptions& opts) const {
    const double h = opts.step_factor * *std::min_element(cfg.mu.begin(), cfg.mu.end());
    switch (opts.space) {
        case SpatialMode::finite_difference:
            return fd_laplacian([&](const Point& z) { return bubbles(cfg, z) + remainder(cfg, z, opts); }, cfg.dom, x, h);
        case SpatialMode::hybrid:
            return fd_laplacian([&](const Point& z) { return remainder(cfg, z, opts); }, cfg.dom, x, h);
        case SpatialMode::analytic:
            break;
    }
    if (!opts.corrected) return 0.0;  // H(·, q) is harmonic
    const int n = dim_.n;
    const double a = 0.5 * (n - 2);
    double s = 0;
    for (std::size_t i = 0; i < cfg.k(); ++i) {
        const Point y = scaled_offset(x, cfg.xi[i], cfg.mu[i]);
        const double r = std::sqrt(dot(y, y));
        const double lap_p0 = corrector_source(dim_, r) - bubble_potential(dim_, r) * corrector_.profile.value(r);
        s += std::pow(cfg.mu[i], -a - 2) * gamma(cfg.b[i]) * std::pow(cfg.mu0, n - 2) * lap_p0;
    }
    return s;
}

// u^p − Σ_i U_i^p with U_i = μ_i^{-(n-2)/2}U(y_i), arranged to avoid cancellation
// next to the dominant bubble.
double Ansatz::nonlinear(const BubbleConfig& cfg, const Point& x, const ResidualOptions& opts) const {
    const double a = 0.5 * (dim_.n - 2), p = dim_.p;
    std::vector<double> B(cfg.k());
    for (std::size_t i = 0; i < cfg.k(); ++i) {
        const Point y = scaled_offset(x, cfg.xi[i], cfg.mu[i]);
        B[i] = std::pow(cfg.mu[i], -a) * bubble_profile(dim_, std::sqrt(dot(y, y)));
    }
    const std::size_t j = std::max_element(B.begin(), B.end()) - B.begin();
    double rest = remainder(cfg, x, opts);
    for (std::size_t i = 0; i < B.size(); ++i)
        if (i != j) rest += B[i];
    const double s = rest / B[j];
    double out;
    if (s > -1.0) {
        out = std::pow(B[j], p) * std::expm1(p * std::log1p(s));
    } else {
        out = signed_pow(B[j] + rest, p) - std::pow(B[j], p);
    }
    for (std::size_t i = 0; i < B.size(); ++i)
        if (i != j) out -= std::pow(B[i], p);
    return out;
}

double Ansatz::residual(const BubbleConfig& cfg, const Point& x, const ResidualOptions& opts) const {
    if (opts.time == TimeMode::central_difference) {
        throw ConfigError("time-mode", "central differences in time need a parameter path");
    }
    validate(cfg);
    if (!cfg.dom.contains(x)) throw ConfigError("outside-domain", "evaluation point must lie in the ball");
    const double ut = time_derivative(cfg, x, opts);
    if (opts.space == SpatialMode::finite_difference) {
        return -ut + laplacian(cfg, x, opts) + signed_pow(bubbles(cfg, x) + remainder(cfg, x, opts), dim_.p);
    }
    // ΔU_i = −U_i^p cancels against the bubble part of u^p
    return -ut + laplacian(cfg, x, opts) + nonlinear(cfg, x, opts);
}

double Ansatz::residual(const ParameterPath& path, double t, const Point& x, const ResidualOptions& opts) const {
    if (opts.time == TimeMode::chain_rule) return residual(path(t), x, opts);
    const BubbleConfig cfg = path(t);
    validate(cfg);
    if (!cfg.dom.contains(x)) throw ConfigError("outside-domain", "evaluation point must lie in the ball");
    const double dt = opts.time_step > 0 ? opts.time_step : 1e-4 * t;
    if (!(t - dt > 0)) throw ConfigError("time-step", "time step reaches t = 0");
    auto u_at = [&](const BubbleConfig& c) { return bubbles(c, x) + remainder(c, x, opts); };
    const double ut = (u_at(path(t + dt)) - u_at(path(t - dt))) / (2 * dt);
    if (opts.space == SpatialMode::finite_difference) {
        return -ut + laplacian(cfg, x, opts) + signed_pow(u_at(cfg), dim_.p);
    }
    return -ut + laplacian(cfg, x, opts) + nonlinear(cfg, x, opts);
}

double Ansatz::scaled_residual(const BubbleConfig& cfg, std::size_t j, const Point& y, const ResidualOptions& opts) const {
    if (j >= cfg.k()) throw ConfigError("index-out-of-range", "bubble index out of range");
    Point x = cfg.xi[j];
    for (std::size_t c = 0; c < x.size(); ++c) x[c] += cfg.mu[j] * y[c];
    return std::pow(cfg.mu[j], 0.5 * (dim_.n + 2)) * residual(cfg, x, opts);
}

ErrorChannels Ansatz::error_channels(const BubbleConfig& cfg, std::size_t j, const Point& y) const {
    validate(cfg);
    if (j >= cfg.k()) throw ConfigError("index-out-of-range", "bubble index out of range");
    const int n = dim_.n;
    const double a = 0.5 * (n - 2);
    const double mu = cfg.mu[j], r = std::sqrt(dot(y, y));
    const double V = bubble_potential(dim_, r);

    double scalar = -std::pow(mu, n - 3) * robin(cfg.dom, cfg.q[j]);
    Point g = grad_x_regular_part(cfg.dom, cfg.q[j], cfg.q[j]);
    for (double& c : g) c *= -std::pow(mu, n - 2);
    for (std::size_t i = 0; i < cfg.k(); ++i) {
        if (i == j) continue;
        scalar += std::pow(mu, 0.5 * (n - 4)) * std::pow(cfg.mu[i], a) * green_ball(cfg.dom, cfg.q[j], cfg.q[i]);
        const Point gg = grad_x_green(cfg.dom, cfg.q[j], cfg.q[i]);
        for (std::size_t c = 0; c < g.size(); ++c) g[c] += std::pow(mu * cfg.mu[i], a) * gg[c];
    }
    ErrorChannels out;
    out.E0 = mu * (V * scalar + cfg.mu_dot[j] * kernel_radial(dim_, r));
    const double grad_u = r > 0 ? bubble_dr(dim_, r) / r : 0.0;  // ∇U = grad_u · y
    out.E1 = mu * (V * dot(g, y) + grad_u * dot(cfg.xi_dot[j], y));
    ResidualOptions opts;
    opts.corrected = false;
    opts.space = SpatialMode::analytic;
    out.total = scaled_residual(cfg, j, y, opts);
    out.remainder = out.total - out.E0 - out.E1;
    return out;
}

Eigen::MatrixXd Ansatz::orthogonality_residuals(const BubbleConfig& cfg, const Eigen::MatrixXd& M, double Rwin) const {
    validate(cfg);
    const std::size_t k = cfg.k();
    const int n = dim_.n;
    const double a = 0.5 * (n - 2);
    if (static_cast<std::size_t>(M.rows()) != k || static_cast<std::size_t>(M.cols()) != k) {
        throw ConfigError("configuration", "M must be k×k");
    }
    if (!(Rwin > 0)) throw ConfigError("window", "window radius must be positive");

    Eigen::VectorXd lambda(k), lambda_dot(k);
    for (std::size_t j = 0; j < k; ++j) {
        lambda[j] = cfg.mu[j] - cfg.b[j] * cfg.mu0;
        lambda_dot[j] = cfg.mu_dot[j] - cfg.b[j] * cfg.mu0_dot;
    }
    const Eigen::VectorXd Mlambda = M.transpose() * lambda;

    Eigen::MatrixXd out(k, n + 1);
    for (std::size_t j = 0; j < k; ++j) {
        const double mu = cfg.mu[j], b = cfg.b[j], mu0j = b * cfg.mu0, mu0j_dot = b * cfg.mu0_dot;
        if (std::sqrt(dot(cfg.xi[j], cfg.xi[j])) + 2 * Rwin * mu0j >= cfg.dom.R) {
            throw ConfigError("window", "inner window leaves the domain");
        }
        // coefficients of E_{0j}[μ̄₀, μ̇_{0j}] and the translation forcing
        double scalar0 = -std::pow(b, n - 3) * robin(cfg.dom, cfg.q[j]);
        Point g = grad_x_regular_part(cfg.dom, cfg.q[j], cfg.q[j]);
        for (double& c : g) c *= -std::pow(mu, n - 2);
        for (std::size_t i = 0; i < k; ++i) {
            if (i == j) continue;
            scalar0 += std::pow(b, 0.5 * (n - 4)) * std::pow(cfg.b[i], a) * green_ball(cfg.dom, cfg.q[j], cfg.q[i]);
            const Point gg = grad_x_green(cfg.dom, cfg.q[j], cfg.q[i]);
            for (std::size_t c = 0; c < g.size(); ++c) g[c] += std::pow(mu * cfg.mu[i], a) * gg[c];
        }
        scalar0 *= std::pow(cfg.mu0, n - 3);
        const double ratio = mu0j / mu;
        const double scale = std::pow(ratio, 0.5 * (n + 2));

        auto proxy = [&](const Point& yv) {
            Point yj = yv;
            for (double& c : yj) c *= ratio;
            const double r = std::sqrt(dot(yj, yj));
            const double V = bubble_potential(dim_, r), Z = kernel_radial(dim_, r);
            const double grad_u = r > 0 ? bubble_dr(dim_, r) / r : 0.0;
            const double term1 = mu0j * (lambda_dot[j] * Z - std::pow(cfg.mu0, n - 4) * V * Mlambda[j]);
            const double term2 = lambda[j] * (V * scalar0 + mu0j_dot * Z);
            const double term3 = mu * (grad_u * dot(cfg.xi_dot[j], yj) + V * dot(g, yj));
            return scale * (term1 + term2 + term3);
        };
        // The proxy is radial plus linear in y and Z_ℓ is radial or linear, so
        // the 2n-point cross rule on each sphere is exact.
        const double sphere_weight = dim_.omega_n / (2 * n);
        for (int l = 1; l <= n + 1; ++l) {
            auto radial = [&](double r) {
                if (r == 0.0) return 0.0;
                double s = 0;
                Point yv(n, 0.0);
                for (int d = 0; d < n; ++d) {
                    for (double sgn : {-1.0, 1.0}) {
                        yv[d] = sgn * r;
                        const double Zl = l <= n ? bubble_dr(dim_, r) * yv[l - 1] / r : kernel_radial(dim_, r);
                        s += proxy(yv) * Zl;
                    }
                    yv[d] = 0.0;
                }
                return sphere_weight * s * std::pow(r, n - 1);
            };
            const double scale_abs = 1e-14 * std::pow(cfg.mu0, n - 2);
            out(j, l - 1) = quad::integrate(radial, 0.0, 2 * Rwin, 1e-10, scale_abs);
        }
    }
    return out;
}

}  // namespace critheat
