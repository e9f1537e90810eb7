#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "critheat/ansatz.hpp"
#include "critheat/bsystem.hpp"
#include "critheat/bubble.hpp"
#include "critheat/green.hpp"

namespace critheat {

/// μ₀(t) = γ_n t^{-1/(n-4)} and its derivative. Throws ConfigError for t ≤ 0.
double mu0_of_t(const Dim& dim, double t);
double mu0_dot_of_t(const Dim& dim, double t);
/// Relative residual of μ̇₀ + (2c₁/((n−2)c₂))μ₀^{n-3} = 0.
double mu0_ode_residual(const Dim& dim, double t);

using VectorForcing = std::function<Eigen::VectorXd(double t)>;
using ScalarForcing = std::function<double(double t)>;

/// Closed-form solution of λ̇ + t⁻¹Pᵀdiag(κ)Pλ = h, κ_j = (1+σ̄_j)/(n−4):
/// λ = Pᵀν, ν_j = t^{-κ_j}[d_j + ∫_{t₀}^t s^{κ_j}(Ph)_j ds].
class LambdaSystem {
public:
    LambdaSystem(const BSolution& bs, VectorForcing h, Eigen::VectorXd d, double t0);

    Eigen::VectorXd lambda(double t) const;
    Eigen::VectorXd lambda_dot(double t) const;
    /// Pᵀdiag(κ)P.
    const Eigen::MatrixXd& matrix() const noexcept { return A_; }
    const Eigen::VectorXd& kappa() const noexcept { return kappa_; }
    Eigen::VectorXd forcing(double t) const;
    double t0() const noexcept { return t0_; }

private:
    Eigen::VectorXd nu(double t) const;
    Eigen::MatrixXd P_;
    Eigen::VectorXd kappa_, d_;
    Eigen::MatrixXd A_;
    VectorForcing h_;
    double t0_;
};

struct LambdaSolution {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> closed_form;
    std::vector<Eigen::VectorXd> runge_kutta;
    double max_deviation = 0;  // max |closed − RK| / max |closed|
    double max_residual = 0;   // max ODE residual of the closed form, relative
};

/// Evaluates the closed form at `times` and integrates the same system with
/// an adaptive Runge–Kutta pair from t₀ for comparison. A null forcing means h = 0.
LambdaSolution lambda_system_solve(const BSolution& bs, const VectorForcing& h, const Eigen::VectorXd& d, double t0,
                                   const std::vector<double>& times);

/// c = p∫U^{p-1}(∂₁U)y₁ / ∫(∂₁U)², both integrals reported.
struct TranslationConstant {
    double c = 0;
    double numerator = 0;
    double denominator = 0;
};
TranslationConstant translation_constant(const Dim& dim);

/// ξ_j(t) = q_j − c v_j ∫_t^∞ μ₀^{n-2} ds with
/// v_j = b_j^{n-2}∇H(q_j,q_j) − Σ_{i≠j}(b_ib_j)^{(n-2)/2}∇_xG(q_j,q_i),
/// which solves ξ̇_j = c v_j μ₀^{n-2} and tends to q_j.
class XiDrift {
public:
    XiDrift(const Dim& dim, const GreenMatrix& gm, const BSolution& bs);

    Point xi(std::size_t j, double t) const;
    Point xi_dot(std::size_t j, double t) const;
    const Point& direction(std::size_t j) const { return v_.at(j); }
    double constant() const noexcept { return c_.c; }
    const TranslationConstant& translation() const noexcept { return c_; }
    /// ∫_t^∞ μ₀^{n-2} ds in closed form.
    double tail_integral(double t) const;

private:
    Dim dim_;
    std::vector<Point> q_, v_;
    TranslationConstant c_;
};

struct TrajectorySample {
    double t = 0;
    double mu0 = 0;
    Eigen::VectorXd lambda;
    Eigen::VectorXd lambda_dot;
    std::vector<Point> xi;
    std::vector<Point> xi_dot;
};

/// Samples of (μ₀, λ, ξ) with the weighted sup norms ‖g‖_δ = sup μ₀^{-δ}|g|
/// taken over the samples.
struct Trajectory {
    double t0 = 0;
    double sigma = 0;
    std::vector<TrajectorySample> samples;
    double lambda_norm = 0;      // ‖λ‖_{1+σ}
    double lambda_dot_norm = 0;  // ‖λ̇‖_{n-3+σ}
    double xi_norm = 0;          // ‖ξ − q‖_{1+σ}
    double xi_dot_norm = 0;      // ‖ξ̇‖_{n-3+σ}
};

/// σ̄_min/2, the default weight exponent.
double default_sigma(const BSolution& bs);

Trajectory build_trajectory(const Dim& dim, const GreenMatrix& gm, const BSolution& bs, const LambdaSystem& lam,
                            const std::vector<double>& times, double sigma);

/// Ansatz parameters μ_j = b_jμ₀ + λ_j, ξ_j from the drift, at time t.
BubbleConfig configuration_at(const Dim& dim, const BallDomain& dom, const GreenMatrix& gm, const BSolution& bs,
                              const LambdaSystem* lam, const XiDrift* drift, double t);

/// The Z₀-projection e(t) of the inner problem obeys μ_{0j}²ė = |λ₀|e + f.
/// With A(t) = μ_{0j}(t)^{-2} and Φ(t) = |λ₀|∫_{t₀}^t A, the only bounded
/// solution starts from e₀* = −∫_{t₀}^∞ A f e^{-Φ} ds.
struct ProjectionState {
    double lambda0 = 0;
    double b = 0;
    double t0 = 0;
    double T = 0;
    double eps = 0;
    double e0_star = 0;           // quadrature value
    double e0_bisected = 0;       // recovered by shooting bisection
    int bisection_steps = 0;
    std::vector<double> times;
    std::vector<double> e_star, e_plus, e_minus;  // from e₀*, e₀* + ε, e₀* − ε
    std::vector<double> forcing;                  // f at the sample times
    double sup_star = 0;
    double growth_plus = 0;   // sup|e₊| / sup|e*|
    double growth_minus = 0;
    double horizon_growth = 0;  // exp(Φ(T))
};

class ProjectionProblem {
public:
    ProjectionProblem(const Dim& dim, double lambda0, double b, ScalarForcing f, double t0);

    double A(double t) const;
    double Phi(double t) const;
    /// Time at which exp(Φ) reaches `growth`.
    double horizon(double growth) const;
    double e0_star() const;
    /// Adaptive RK from e(t₀) = e0, sampled at `times` (first entry t₀).
    std::vector<double> integrate(double e0, const std::vector<double>& times) const;
    /// Sign-bisection on e(T; e₀) for the bounded initial value.
    double bisect(double T, double tol, int* steps = nullptr) const;

private:
    Dim dim_;
    double lambda0_, b_, t0_;
    ScalarForcing f_;
};

/// Runs the three shootings of the dichotomy on [t₀, T]. Throws
/// ConfigError("horizon") when exp(Φ(T)) < 10.
ProjectionState projection_shoot(const Dim& dim, double lambda0, double b, const ScalarForcing& f, double t0, double T,
                                 double eps = 1e-6, std::size_t samples = 200);

}  // namespace critheat
