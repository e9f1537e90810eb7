#include "critheat/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "critheat/errors.hpp"
#include "critheat/ode.hpp"
#include "critheat/quadrature.hpp"

namespace critheat {

double mu0_of_t(const Dim& dim, double t) {
    if (!(t > 0.0)) throw ConfigError("time", "mu0 needs t > 0");
    return dim.gamma_n * std::pow(t, -1.0 / (dim.n - 4));
}

double mu0_dot_of_t(const Dim& dim, double t) { return -mu0_of_t(dim, t) / ((dim.n - 4) * t); }

double mu0_ode_residual(const Dim& dim, double t) {
    const double rhs = 2.0 * dim.c1 / ((dim.n - 2) * dim.c2) * std::pow(mu0_of_t(dim, t), dim.n - 3);
    return std::abs(mu0_dot_of_t(dim, t) + rhs) / rhs;
}

// ---------------------------------------------------------------------------
// λ-system

LambdaSystem::LambdaSystem(const BSolution& bs, VectorForcing h, Eigen::VectorXd d, double t0)
    : P_(bs.P), d_(std::move(d)), h_(std::move(h)), t0_(t0) {
    const int n = bs.n;
    const auto k = static_cast<Eigen::Index>(bs.k());
    if (d_.size() != k) throw ConfigError("configuration", "need one free constant per bubble");
    if (!(t0 > 0)) throw ConfigError("time", "t0 must be positive");
    kappa_ = (1.0 + bs.sigma_bar.array()) / (n - 4.0);
    A_ = P_.transpose() * kappa_.asDiagonal() * P_;
}

Eigen::VectorXd LambdaSystem::forcing(double t) const {
    if (!h_) return Eigen::VectorXd::Zero(d_.size());
    Eigen::VectorXd h = h_(t);
    if (h.size() != d_.size()) throw ConfigError("configuration", "forcing has the wrong length");
    return h;
}

Eigen::VectorXd LambdaSystem::nu(double t) const {
    if (t < t0_) throw ConfigError("time", "the λ-system starts at t0");
    Eigen::VectorXd out(d_.size());
    for (Eigen::Index j = 0; j < d_.size(); ++j) {
        double integral = 0;
        if (h_ && t > t0_) {
            // s = t0·e^u keeps the quadrature well conditioned over many decades
            auto g = [&](double u) {
                const double s = t0_ * std::exp(u);
                return s * std::pow(s, kappa_[j]) * (P_ * forcing(s))[j];
            };
            integral = quad::integrate(g, 0.0, std::log(t / t0_), 1e-13, 1e-300);
        }
        out[j] = std::pow(t, -kappa_[j]) * (d_[j] + integral);
    }
    return out;
}

Eigen::VectorXd LambdaSystem::lambda(double t) const { return P_.transpose() * nu(t); }

Eigen::VectorXd LambdaSystem::lambda_dot(double t) const {
    const Eigen::VectorXd v = nu(t);
    const Eigen::VectorXd Ph = P_ * forcing(t);
    Eigen::VectorXd vdot(v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) vdot[j] = -kappa_[j] / t * v[j] + Ph[j];
    return P_.transpose() * vdot;
}

LambdaSolution lambda_system_solve(const BSolution& bs, const VectorForcing& h, const Eigen::VectorXd& d, double t0,
                                   const std::vector<double>& times) {
    if (times.empty() || times.front() != t0) throw ConfigError("time", "sample times must start at t0");
    if (!std::is_sorted(times.begin(), times.end())) throw ConfigError("time", "sample times must increase");
    const LambdaSystem sys(bs, h, d, t0);
    LambdaSolution out;
    out.times = times;
    double scale = 0;
    for (double t : times) {
        out.closed_form.push_back(sys.lambda(t));
        scale = std::max(scale, out.closed_form.back().cwiseAbs().maxCoeff());
        // residual of the closed form against the ODE, relative to its terms
        const Eigen::VectorXd lhs = sys.lambda_dot(t) + sys.matrix() * out.closed_form.back() / t;
        const Eigen::VectorXd hv = sys.forcing(t);
        const double term = std::max(hv.cwiseAbs().maxCoeff(), (sys.matrix() * out.closed_form.back() / t).cwiseAbs().maxCoeff());
        if (term > 0) out.max_residual = std::max(out.max_residual, (lhs - hv).cwiseAbs().maxCoeff() / term);
    }

    const auto k = d.size();
    const Eigen::VectorXd y0 = out.closed_form.front();
    ode::Rhs rhs = [&](const ode::State& y, ode::State& dy, double t) {
        const Eigen::Map<const Eigen::VectorXd> lam(y.data(), k);
        const Eigen::VectorXd r = sys.forcing(t) - sys.matrix() * lam / t;
        dy.assign(r.data(), r.data() + k);
    };
    const auto states = ode::integrate_at(rhs, ode::State(y0.data(), y0.data() + k), times, 1e-12, 1e-14 * std::max(scale, 1e-300));
    for (std::size_t i = 0; i < states.size(); ++i) {
        out.runge_kutta.push_back(Eigen::Map<const Eigen::VectorXd>(states[i].data(), k));
        if (scale > 0) {
            out.max_deviation =
                std::max(out.max_deviation, (out.runge_kutta.back() - out.closed_form[i]).cwiseAbs().maxCoeff() / scale);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// ξ drift

TranslationConstant translation_constant(const Dim& dim) {
    // Angular averages of y₁² cancel between numerator and denominator.
    TranslationConstant tc;
    const int n = dim.n;
    tc.numerator = dim.p * quad::integrate_to_infinity(
                               [&](double r) { return bubble_potential(dim, r) / dim.p * bubble_dr(dim, r) * std::pow(r, n); },
                               0.0, 1e-13);
    tc.denominator = quad::integrate_to_infinity(
        [&](double r) { return std::pow(bubble_dr(dim, r), 2) * std::pow(r, n - 1); }, 0.0, 1e-13);
    tc.numerator *= dim.omega_n / n;
    tc.denominator *= dim.omega_n / n;
    tc.c = tc.numerator / tc.denominator;
    return tc;
}

XiDrift::XiDrift(const Dim& dim, const GreenMatrix& gm, const BSolution& bs)
    : dim_(dim), q_(gm.q), c_(translation_constant(dim)) {
    const int n = dim.n;
    const BallDomain dom(dim, gm.R);
    const std::size_t k = gm.k();
    v_.assign(k, Point(n, 0.0));
    for (std::size_t j = 0; j < k; ++j) {
        const Point gh = grad_x_regular_part(dom, q_[j], q_[j]);
        for (int c = 0; c < n; ++c) v_[j][c] = std::pow(bs.b[j], n - 2) * gh[c];
        for (std::size_t i = 0; i < k; ++i) {
            if (i == j) continue;
            const Point gg = grad_x_green(dom, q_[j], q_[i]);
            for (int c = 0; c < n; ++c) v_[j][c] -= std::pow(bs.b[i] * bs.b[j], 0.5 * (n - 2)) * gg[c];
        }
    }
}

double XiDrift::tail_integral(double t) const {
    const int n = dim_.n;
    if (!(t > 0)) throw ConfigError("time", "drift needs t > 0");
    return std::pow(dim_.gamma_n, n - 2) * 0.5 * (n - 4) * std::pow(t, -2.0 / (n - 4));
}

Point XiDrift::xi(std::size_t j, double t) const {
    Point x = q_.at(j);
    const double s = c_.c * tail_integral(t);
    for (std::size_t c = 0; c < x.size(); ++c) x[c] -= s * v_[j][c];
    return x;
}

Point XiDrift::xi_dot(std::size_t j, double t) const {
    Point x = v_.at(j);
    const double s = c_.c * std::pow(mu0_of_t(dim_, t), dim_.n - 2);
    for (double& e : x) e *= s;
    return x;
}

// ---------------------------------------------------------------------------
// trajectories

double default_sigma(const BSolution& bs) { return 0.5 * bs.sigma_bar.minCoeff(); }

Trajectory build_trajectory(const Dim& dim, const GreenMatrix& gm, const BSolution& bs, const LambdaSystem& lam,
                            const std::vector<double>& times, double sigma) {
    if (!(sigma > 0)) throw ConfigError("sigma", "weight exponent must be positive");
    const XiDrift drift(dim, gm, bs);
    const int n = dim.n;
    Trajectory tr;
    tr.t0 = lam.t0();
    tr.sigma = sigma;
    for (double t : times) {
        TrajectorySample s;
        s.t = t;
        s.mu0 = mu0_of_t(dim, t);
        s.lambda = lam.lambda(t);
        s.lambda_dot = lam.lambda_dot(t);
        double dx = 0, dxd = 0;
        for (std::size_t j = 0; j < gm.k(); ++j) {
            s.xi.push_back(drift.xi(j, t));
            s.xi_dot.push_back(drift.xi_dot(j, t));
            double a = 0, b = 0;
            for (int c = 0; c < n; ++c) {
                a += std::pow(s.xi[j][c] - gm.q[j][c], 2);
                b += std::pow(s.xi_dot[j][c], 2);
            }
            dx = std::max(dx, std::sqrt(a));
            dxd = std::max(dxd, std::sqrt(b));
        }
        const double w1 = std::pow(s.mu0, -(1 + sigma)), w2 = std::pow(s.mu0, -(n - 3 + sigma));
        tr.lambda_norm = std::max(tr.lambda_norm, w1 * s.lambda.cwiseAbs().maxCoeff());
        tr.lambda_dot_norm = std::max(tr.lambda_dot_norm, w2 * s.lambda_dot.cwiseAbs().maxCoeff());
        tr.xi_norm = std::max(tr.xi_norm, w1 * dx);
        tr.xi_dot_norm = std::max(tr.xi_dot_norm, w2 * dxd);
        tr.samples.push_back(std::move(s));
    }
    return tr;
}

BubbleConfig configuration_at(const Dim& dim, const BallDomain& dom, const GreenMatrix& gm, const BSolution& bs,
                              const LambdaSystem* lam, const XiDrift* drift, double t) {
    BubbleConfig c;
    c.dom = dom;
    c.q = gm.q;
    c.t = t;
    c.mu0 = mu0_of_t(dim, t);
    c.mu0_dot = mu0_dot_of_t(dim, t);
    Eigen::VectorXd l = Eigen::VectorXd::Zero(gm.k()), ld = l;
    if (lam) {
        l = lam->lambda(t);
        ld = lam->lambda_dot(t);
    }
    for (std::size_t j = 0; j < gm.k(); ++j) {
        c.b.push_back(bs.b[j]);
        c.mu.push_back(bs.b[j] * c.mu0 + l[j]);
        c.mu_dot.push_back(bs.b[j] * c.mu0_dot + ld[j]);
        c.xi.push_back(drift ? drift->xi(j, t) : gm.q[j]);
        c.xi_dot.push_back(drift ? drift->xi_dot(j, t) : Point(dim.n, 0.0));
    }
    return c;
}

// ---------------------------------------------------------------------------
// projection shooting

ProjectionProblem::ProjectionProblem(const Dim& dim, double lambda0, double b, ScalarForcing f, double t0)
    : dim_(dim), lambda0_(lambda0), b_(b), t0_(t0), f_(std::move(f)) {
    if (!(lambda0 < 0)) throw ConfigError("eigenvalue", "the ground-state eigenvalue must be negative");
    if (!(b > 0)) throw ConfigError("height", "bubble height must be positive");
    if (!(t0 > 0)) throw ConfigError("time", "t0 must be positive");
}

double ProjectionProblem::A(double t) const {
    const double m = b_ * mu0_of_t(dim_, t);
    return 1.0 / (m * m);
}

double ProjectionProblem::Phi(double t) const {
    const int n = dim_.n;
    const double e = (n - 2.0) / (n - 4.0);
    const double g = b_ * dim_.gamma_n;
    return -lambda0_ / (g * g) * ((n - 4.0) / (n - 2.0)) * (std::pow(t, e) - std::pow(t0_, e));
}

double ProjectionProblem::horizon(double growth) const {
    const int n = dim_.n;
    const double e = (n - 2.0) / (n - 4.0);
    const double g = b_ * dim_.gamma_n;
    const double target = std::log(growth) * (g * g) / (-lambda0_) * ((n - 2.0) / (n - 4.0));
    return std::pow(std::pow(t0_, e) + target, 1.0 / e);
}

double ProjectionProblem::e0_star() const {
    if (!f_) return 0.0;
    // e^{-Φ} is below 1e-30 past this point
    const double end = horizon(std::exp(70.0));
    auto g = [&](double s) { return A(s) * f_(s) * std::exp(-Phi(s)); };
    return -quad::integrate(g, t0_, end, 1e-13, 1e-300);
}

std::vector<double> ProjectionProblem::integrate(double e0, const std::vector<double>& times) const {
    const double mu = -lambda0_;
    ode::Rhs rhs = [&](const ode::State& y, ode::State& dy, double t) {
        dy[0] = A(t) * (mu * y[0] + (f_ ? f_(t) : 0.0));
    };
    const auto states = ode::integrate_at(rhs, {e0}, times, 1e-12, 1e-300);
    std::vector<double> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s[0]);
    return out;
}

double ProjectionProblem::bisect(double T, double tol, int* steps) const {
    const std::vector<double> ends{t0_, T};
    auto final_sign = [&](double e0) { return integrate(e0, ends).back(); };
    double lo = -1.0, hi = 1.0;
    int it = 0;
    while ((final_sign(lo) > 0 || final_sign(hi) < 0) && it < 60) {
        lo *= 2;
        hi *= 2;
        ++it;
    }
    if (final_sign(lo) > 0 || final_sign(hi) < 0) throw NumericalError("bracket", "no sign change for the projection");
    int n = 0;
    while (hi - lo > tol * std::max(1.0, std::abs(0.5 * (lo + hi))) && n < 200) {
        const double mid = 0.5 * (lo + hi);
        (final_sign(mid) > 0 ? hi : lo) = mid;
        ++n;
    }
    if (steps) *steps = n;
    return 0.5 * (lo + hi);
}

ProjectionState projection_shoot(const Dim& dim, double lambda0, double b, const ScalarForcing& f, double t0, double T,
                                 double eps, std::size_t samples) {
    const ProjectionProblem prob(dim, lambda0, b, f, t0);
    ProjectionState st;
    st.lambda0 = lambda0;
    st.b = b;
    st.t0 = t0;
    st.T = T;
    st.eps = eps;
    if (!(T > t0)) throw ConfigError("horizon", "horizon must exceed t0");
    st.horizon_growth = std::exp(prob.Phi(T));
    if (st.horizon_growth < 10.0) throw ConfigError("horizon", "horizon too short to exhibit the dichotomy");
    if (samples < 2) samples = 2;
    for (std::size_t i = 0; i < samples; ++i) st.times.push_back(t0 + (T - t0) * i / (samples - 1));
    st.e0_star = prob.e0_star();
    st.e_star = prob.integrate(st.e0_star, st.times);
    st.e_plus = prob.integrate(st.e0_star + eps, st.times);
    st.e_minus = prob.integrate(st.e0_star - eps, st.times);
    for (double t : st.times) st.forcing.push_back(f ? f(t) : 0.0);
    auto sup = [](const std::vector<double>& v) {
        double m = 0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    };
    st.sup_star = sup(st.e_star);
    const double base = st.sup_star > 0 ? st.sup_star : eps;
    st.growth_plus = sup(st.e_plus) / base;
    st.growth_minus = sup(st.e_minus) / base;
    st.e0_bisected = prob.bisect(T, 1e-13, &st.bisection_steps);
    return st;
}

}  // namespace critheat
