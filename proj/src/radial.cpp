#include "critheat/radial.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "critheat/errors.hpp"

namespace critheat {

namespace {

// Exact for polynomials up to degree 19, i.e. hat functions times r^{n-1}
// for every dimension this library accepts in practice.
using HatRule = boost::math::quadrature::gauss<double, 10>;

std::vector<double> hat_weights(int n, const std::vector<double>& r) {
    std::vector<double> w(r.size(), 0.0);
    const int m = n - 1;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
        const double a = r[i];
        const double h = r[i + 1] - a;
        w[i] += h * HatRule::integrate([&](double s) { return (1.0 - s) * std::pow(a + h * s, m); }, 0.0, 1.0);
        w[i + 1] += h * HatRule::integrate([&](double s) { return s * std::pow(a + h * s, m); }, 0.0, 1.0);
    }
    return w;
}

}  // namespace

double sphere_area(int n) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

RadialGrid::RadialGrid(int n, std::vector<double> nodes) : n_(n), nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw ConfigError("grid", "a radial grid needs at least two nodes");
    if (nodes_.front() < 0.0) throw ConfigError("grid", "radial nodes must be nonnegative");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (!(nodes_[i] > nodes_[i - 1])) throw ConfigError("grid", "radial nodes must be strictly increasing");
    }
    weights_ = hat_weights(n_, nodes_);
}

RadialGrid RadialGrid::from_nodes(int n, std::vector<double> nodes) {
    return RadialGrid(n, std::move(nodes));
}

RadialGrid RadialGrid::geometric(int n, double r_min, double r_max, std::size_t count, bool with_origin) {
    if (!(r_min > 0.0 && r_max > r_min)) throw ConfigError("grid", "geometric grid needs 0 < r_min < r_max");
    const std::size_t m = count - (with_origin ? 1 : 0);
    if (m < 2) throw ConfigError("grid", "geometric grid too small");
    const double log_ratio = std::log(r_max / r_min);
    std::vector<double> r;
    r.reserve(count);
    if (with_origin) r.push_back(0.0);
    for (std::size_t i = 0; i < m; ++i) {
        r.push_back(r_min * std::exp(log_ratio * static_cast<double>(i) / static_cast<double>(m - 1)));
    }
    r.back() = r_max;
    return RadialGrid(n, std::move(r));
}

RadialGrid RadialGrid::sinh_graded(int n, double A, double r_max, std::size_t count) {
    if (!(A > 0.0 && r_max > 0.0) || count < 3) throw ConfigError("grid", "bad sinh grid parameters");
    const double smax = std::asinh(r_max / A);
    std::vector<double> r(count);
    for (std::size_t i = 0; i < count; ++i) {
        r[i] = A * std::sinh(smax * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    r.front() = 0.0;
    r.back() = r_max;
    return RadialGrid(n, std::move(r));
}

RadialGrid RadialGrid::uniform(int n, double r_max, std::size_t count) {
    std::vector<double> r(count);
    for (std::size_t i = 0; i < count; ++i) r[i] = r_max * static_cast<double>(i) / static_cast<double>(count - 1);
    return RadialGrid(n, std::move(r));
}

double RadialGrid::integrate(std::span<const double> f) const {
    if (f.size() != nodes_.size()) throw ConfigError("grid", "field length does not match grid");
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += weights_[i] * f[i];
    return s;
}

double RadialGrid::ball_integral(std::span<const double> f) const {
    return sphere_area(n_) * integrate(f);
}

std::size_t RadialGrid::locate(double r) const {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
    if (it == nodes_.begin()) return 0;
    return static_cast<std::size_t>(it - nodes_.begin()) - 1;
}

RadialField::RadialField(RadialGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw ConfigError("field", "values length differs from node count");
    for (double v : values_) {
        if (!std::isfinite(v)) throw NumericalError("field", "radial field has a non-finite value");
    }
}

RadialField RadialField::sample(const RadialGrid& grid, const std::function<double(double)>& f) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid[i]);
    return RadialField(grid, std::move(v));
}

std::vector<double> fd_weights(double x0, std::span<const double> x, int order) {
    // Fornberg (1988), weights for derivatives 0..order at x0.
    const int m = static_cast<int>(x.size());
    std::vector<std::vector<double>> c(m, std::vector<double>(order + 1, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < m; ++i) {
        const int mn = std::min(i, order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(m);
    for (int i = 0; i < m; ++i) w[i] = c[i][order];
    return w;
}

InteriorSamples apply_radial_operator(const RadialGrid& grid, std::span<const double> u,
                                      const std::function<double(double)>& potential, int ell,
                                      int width, const std::function<double(double)>& rhs) {
    if (width != 3 && width != 5 && width != 7) throw ConfigError("stencil", "stencil width must be 3, 5 or 7");
    if (u.size() != grid.size()) throw ConfigError("grid", "field length does not match grid");
    const int n = grid.dim();
    const std::size_t half = static_cast<std::size_t>(width / 2);
    const auto& r = grid.nodes();
    std::size_t first = half;
    while (first < r.size() && r[first] <= 0.0) ++first;
    InteriorSamples out;
    out.first = first;
    const double ang = static_cast<double>(ell) * (ell + n - 2);
    for (std::size_t i = first; i + half < r.size(); ++i) {
        std::span<const double> xs(r.data() + (i - half), static_cast<std::size_t>(width));
        const auto w1 = fd_weights(r[i], xs, 1);
        const auto w2 = fd_weights(r[i], xs, 2);
        // the weights sum to zero, so differencing against u[i] first keeps
        // the cancellation error proportional to the variation, not to |u|
        double d1 = 0.0, d2 = 0.0;
        for (int k = 0; k < width; ++k) {
            const double du = u[i - half + k] - u[i];
            d1 += w1[k] * du;
            d2 += w2[k] * du;
        }
        const double t1 = d2;
        const double t2 = (n - 1) / r[i] * d1;
        const double t3 = -ang / (r[i] * r[i]) * u[i];
        const double t4 = potential ? potential(r[i]) * u[i] : 0.0;
        const double t5 = rhs ? -rhs(r[i]) : 0.0;
        out.values.push_back(t1 + t2 + t3 + t4 + t5);
        // |u|/r² is the natural size of a second derivative at scale r; it keeps
        // the scale meaningful where u is nearly constant.
        out.scale.push_back(std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(t4) + std::abs(t5) +
                            std::abs(u[i]) / (r[i] * r[i]));
    }
    return out;
}

std::vector<double> gradient(const RadialGrid& grid, std::span<const double> u) {
    const auto& r = grid.nodes();
    const std::size_t N = r.size();
    std::vector<double> g(N);
    for (std::size_t i = 1; i + 1 < N; ++i) {
        const double hm = r[i] - r[i - 1];
        const double hp = r[i + 1] - r[i];
        g[i] = (-hp / (hm * (hm + hp))) * u[i - 1] + ((hp - hm) / (hm * hp)) * u[i] +
               (hm / (hp * (hm + hp))) * u[i + 1];
    }
    g[0] = (u[1] - u[0]) / (r[1] - r[0]);
    g[N - 1] = (u[N - 1] - u[N - 2]) / (r[N - 1] - r[N - 2]);
    return g;
}

// ---------------------------------------------------------------------------
// Quintic Hermite interpolation

namespace {

// Basis polynomials on t ∈ [0,1] as coefficient arrays c0..c5 in t.
constexpr double kBasis[6][6] = {
    {1, 0, 0, -10, 15, -6},       // value at 0
    {0, 1, 0, -6, 8, -3},         // derivative at 0 (× h)
    {0, 0, 0.5, -1.5, 1.5, -0.5}, // second derivative at 0 (× h²)
    {0, 0, 0, 10, -15, 6},        // value at 1
    {0, 0, 0, -4, 7, -3},         // derivative at 1 (× h)
    {0, 0, 0, 0.5, -1, 0.5},      // second derivative at 1 (× h²)
};

void poly_eval(const double* c, double t, double out[3]) {
    double p = 0, dp = 0, ddp = 0;
    for (int k = 5; k >= 0; --k) {
        ddp = ddp * t + 2.0 * dp;
        dp = dp * t + p;
        p = p * t + c[k];
    }
    out[0] = p;
    out[1] = dp;
    out[2] = ddp;
}

}  // namespace

SmoothProfile::SmoothProfile(std::vector<double> r, std::vector<double> f, std::vector<double> f1,
                             std::vector<double> f2)
    : r_(std::move(r)), f_(std::move(f)), f1_(std::move(f1)), f2_(std::move(f2)) {
    if (r_.size() < 2 || f_.size() != r_.size() || f1_.size() != r_.size() || f2_.size() != r_.size()) {
        throw ConfigError("profile", "inconsistent interpolation data");
    }
}

void SmoothProfile::eval(double r, double out[3]) const {
    if (r >= r_.back()) {
        const std::size_t N = r_.size() - 1;
        if (f_[N] == 0.0) {
            out[0] = out[1] = out[2] = 0.0;
            return;
        }
        const double kappa = r_[N] * f1_[N] / f_[N];
        const double v = f_[N] * std::pow(r / r_[N], kappa);
        out[0] = v;
        out[1] = kappa * v / r;
        out[2] = kappa * (kappa - 1.0) * v / (r * r);
        return;
    }
    std::size_t i = 0;
    if (r > r_.front()) {
        i = static_cast<std::size_t>(std::upper_bound(r_.begin(), r_.end(), r) - r_.begin()) - 1;
    }
    const double h = r_[i + 1] - r_[i];
    const double t = (r - r_[i]) / h;
    const double coef[6] = {f_[i], f1_[i] * h, f2_[i] * h * h, f_[i + 1], f1_[i + 1] * h, f2_[i + 1] * h * h};
    out[0] = out[1] = out[2] = 0.0;
    for (int b = 0; b < 6; ++b) {
        double e[3];
        poly_eval(kBasis[b], t, e);
        out[0] += coef[b] * e[0];
        out[1] += coef[b] * e[1];
        out[2] += coef[b] * e[2];
    }
    out[1] /= h;
    out[2] /= h * h;
}

double SmoothProfile::value(double r) const {
    double e[3];
    eval(r, e);
    return e[0];
}

double SmoothProfile::derivative(double r) const {
    double e[3];
    eval(r, e);
    return e[1];
}

double SmoothProfile::second_derivative(double r) const {
    double e[3];
    eval(r, e);
    return e[2];
}

// ---------------------------------------------------------------------------
// Tridiagonal utilities

void solve_tridiagonal(std::span<const double> a, std::span<const double> b, std::span<const double> c,
                       std::span<double> d) {
    const std::size_t N = b.size();
    std::vector<double> cp(N);
    double denom = b[0];
    if (denom == 0.0) throw NumericalError("tridiagonal", "zero pivot");
    cp[0] = N > 1 ? c[0] / denom : 0.0;
    d[0] /= denom;
    for (std::size_t i = 1; i < N; ++i) {
        denom = b[i] - a[i] * cp[i - 1];
        if (denom == 0.0) throw NumericalError("tridiagonal", "zero pivot");
        cp[i] = i + 1 < N ? c[i] / denom : 0.0;
        d[i] = (d[i] - a[i] * d[i - 1]) / denom;
    }
    for (std::size_t i = N - 1; i-- > 0;) d[i] -= cp[i] * d[i + 1];
}

std::size_t SymTridiag::count_below(double x) const {
    std::size_t count = 0;
    double q = d[0] - x;
    if (q < 0) ++count;
    for (std::size_t i = 1; i < d.size(); ++i) {
        if (q == 0.0) q = 1e-300;
        q = d[i] - x - e[i - 1] * e[i - 1] / q;
        if (q < 0) ++count;
    }
    return count;
}

double SymTridiag::gershgorin_low() const {
    double lo = d[0] - (e.empty() ? 0.0 : std::abs(e[0]));
    for (std::size_t i = 1; i < d.size(); ++i) {
        const double rad = std::abs(e[i - 1]) + (i < e.size() ? std::abs(e[i]) : 0.0);
        lo = std::min(lo, d[i] - rad);
    }
    return lo;
}

double SymTridiag::gershgorin_high() const {
    double hi = d[0] + (e.empty() ? 0.0 : std::abs(e[0]));
    for (std::size_t i = 1; i < d.size(); ++i) {
        const double rad = std::abs(e[i - 1]) + (i < e.size() ? std::abs(e[i]) : 0.0);
        hi = std::max(hi, d[i] + rad);
    }
    return hi;
}

double SymTridiag::eigenvalue(std::size_t k) const {
    double lo = gershgorin_low();
    double hi = gershgorin_high();
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (count_below(mid) > k) hi = mid; else lo = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> SymTridiag::eigenvector(double lambda) const {
    const std::size_t N = d.size();
    // Shift slightly off the eigenvalue so the factorisation stays regular.
    const double shift = lambda + 1e-12 * std::max(1.0, std::abs(lambda));
    std::vector<double> a(N, 0.0), b(N), c(N, 0.0), x(N, 1.0);
    for (std::size_t i = 0; i < N; ++i) {
        b[i] = d[i] - shift;
        if (i > 0) a[i] = e[i - 1];
        if (i + 1 < N) c[i] = e[i];
    }
    for (int it = 0; it < 4; ++it) {
        solve_tridiagonal(a, b, c, x);
        double norm = 0.0;
        for (double v : x) norm += v * v;
        norm = std::sqrt(norm);
        for (double& v : x) v /= norm;
    }
    return x;
}

FluxLaplacian::FluxLaplacian(const RadialGrid& grid) {
    const auto& r = grid.nodes();
    const int n = grid.dim();
    if (r.front() != 0.0) throw ConfigError("grid", "finite-volume operator needs a grid starting at r = 0");
    const std::size_t N = r.size();
    conductance.resize(N - 1);
    volume.resize(N - 1);
    double face_lo = 0.0;
    for (std::size_t i = 0; i + 1 < N; ++i) {
        const double face = 0.5 * (r[i] + r[i + 1]);
        conductance[i] = std::pow(face, n - 1) / (r[i + 1] - r[i]);
        volume[i] = (std::pow(face, n) - std::pow(face_lo, n)) / n;
        face_lo = face;
    }
}

SymTridiag FluxLaplacian::symmetric_operator(std::span<const double> potential) const {
    const std::size_t M = unknowns();
    SymTridiag T;
    T.d.resize(M);
    T.e.resize(M > 0 ? M - 1 : 0);
    for (std::size_t i = 0; i < M; ++i) {
        const double cl = i > 0 ? conductance[i - 1] : 0.0;
        const double cr = conductance[i];  // face toward the Dirichlet node for i = M-1
        T.d[i] = (cl + cr) / volume[i] - potential[i];
        if (i + 1 < M) T.e[i] = -conductance[i] / std::sqrt(volume[i] * volume[i + 1]);
    }
    return T;
}

}  // namespace critheat
