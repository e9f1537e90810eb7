#include "critheat/green.hpp"

#include <cmath>

#include "critheat/errors.hpp"

namespace critheat {

namespace {

double dot(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void check_dim(const BallDomain& dom, const Point& x) {
    if (static_cast<int>(x.size()) != dom.n) throw ConfigError("dimension-mismatch", "point has the wrong dimension");
}

// |x|²|y|²/R² − 2x·y + R²: squared length of the scaled image vector.
// Written this way it stays regular as y → 0.
double image_distance2(const BallDomain& dom, const Point& x, const Point& y) {
    const double R2 = dom.R * dom.R;
    return dot(x, x) * dot(y, y) / R2 - 2.0 * dot(x, y) + R2;
}

void require_closed(const BallDomain& dom, const Point& x) {
    check_dim(dom, x);
    if (std::sqrt(dot(x, x)) > dom.R * (1.0 + 1e-13)) throw ConfigError("domain", "point outside the ball");
}

void require_open(const BallDomain& dom, const Point& x) {
    check_dim(dom, x);
    if (!dom.contains(x)) throw ConfigError("domain", "point not in the open ball");
}

}  // namespace

BallDomain::BallDomain(const Dim& dim, double radius) : n(dim.n), R(radius), alpha_n(dim.alpha_n) {
    if (!(R > 0.0)) throw ConfigError("domain", "ball radius must be positive");
    if (n < 5) throw ConfigError("dimension-unsupported", "n must be at least 5");
}

bool BallDomain::contains(const Point& x) const { return std::sqrt(dot(x, x)) < R; }

double fundamental_solution(const BallDomain& dom, const Point& z) {
    return dom.alpha_n * std::pow(dot(z, z), 0.5 * (2 - dom.n));
}

double regular_part(const BallDomain& dom, const Point& x, const Point& y) {
    require_closed(dom, x);
    require_open(dom, y);
    return dom.alpha_n * std::pow(image_distance2(dom, x, y), 0.5 * (2 - dom.n));
}

double green_ball(const BallDomain& dom, const Point& x, const Point& y) {
    require_closed(dom, x);
    require_open(dom, y);
    Point d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
    if (dot(d, d) == 0.0) throw ConfigError("singularity", "Green's function evaluated at x = y");
    return fundamental_solution(dom, d) - regular_part(dom, x, y);
}

double robin(const BallDomain& dom, const Point& x) {
    require_open(dom, x);
    return dom.alpha_n * std::pow((dom.R * dom.R - dot(x, x)) / dom.R, 2 - dom.n);
}

Point grad_x_regular_part(const BallDomain& dom, const Point& x, const Point& y) {
    require_closed(dom, x);
    require_open(dom, y);
    const double D = image_distance2(dom, x, y);
    const double yy = dot(y, y) / (dom.R * dom.R);
    const double f = dom.alpha_n * (2 - dom.n) * std::pow(D, -0.5 * dom.n);
    Point g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = f * (yy * x[i] - y[i]);
    return g;
}

Point grad_x_green(const BallDomain& dom, const Point& x, const Point& y) {
    Point g = grad_x_regular_part(dom, x, y);
    Point d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
    const double r2 = dot(d, d);
    if (r2 == 0.0) throw ConfigError("singularity", "Green's function gradient evaluated at x = y");
    const double f = dom.alpha_n * (2 - dom.n) * std::pow(r2, -0.5 * dom.n);
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = f * d[i] - g[i];
    return g;
}

double regular_part_half_space(const Dim& dim, const Point& x, const Point& y) {
    if (static_cast<int>(x.size()) != dim.n || static_cast<int>(y.size()) != dim.n) {
        throw ConfigError("dimension-mismatch", "point has the wrong dimension");
    }
    if (!(y.back() > 0.0) || x.back() < 0.0) throw ConfigError("domain", "points must lie in {x_n > 0}");
    double s = 0.0;
    for (int i = 0; i < dim.n; ++i) {
        const double d = i + 1 == dim.n ? x[i] + y[i] : x[i] - y[i];
        s += d * d;
    }
    return dim.alpha_n * std::pow(s, 0.5 * (2 - dim.n));
}

GreenMatrix green_matrix_from(int n, double R, std::vector<Point> q, const Eigen::MatrixXd& matrix) {
    GreenMatrix gm;
    gm.n = n;
    gm.R = R;
    gm.q = std::move(q);
    gm.matrix = matrix;
    const Eigen::MatrixXd sym = 0.5 * (matrix + matrix.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    gm.eigen.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    const double scale = std::max(std::abs(gm.eigen.front()), std::abs(gm.eigen.back()));
    gm.is_positive_definite = gm.eigen.front() > 1e-12 * scale;
    gm.cholesky_succeeds = Eigen::LLT<Eigen::MatrixXd>(sym).info() == Eigen::Success;
    return gm;
}

GreenMatrix interaction_matrix(const BallDomain& dom, const std::vector<Point>& q) {
    const std::size_t k = q.size();
    if (k == 0) throw ConfigError("invalid-config", "need at least one point");
    for (const auto& x : q) require_open(dom, x);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            double d2 = 0.0;
            for (int c = 0; c < dom.n; ++c) d2 += (q[i][c] - q[j][c]) * (q[i][c] - q[j][c]);
            if (std::sqrt(d2) <= 1e-12 * dom.R) {
                throw ConfigError("degenerate-configuration", "concentration points coincide");
            }
        }
    }
    Eigen::MatrixXd m(k, k);
    for (std::size_t i = 0; i < k; ++i) {
        m(i, i) = robin(dom, q[i]);
        for (std::size_t j = 0; j < i; ++j) {
            // G(q_i,q_j) and G(q_j,q_i) agree to rounding; store the average.
            const double g = 0.5 * (green_ball(dom, q[i], q[j]) + green_ball(dom, q[j], q[i]));
            m(i, j) = m(j, i) = -g;
        }
    }
    return green_matrix_from(dom.n, dom.R, q, m);
}

}  // namespace critheat
