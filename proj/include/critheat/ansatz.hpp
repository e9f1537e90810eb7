#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "critheat/bubble.hpp"
#include "critheat/green.hpp"
#include "critheat/linop.hpp"

namespace critheat {

/// Snapshot of the k-bubble parameters at one time, together with their
/// rates of change (which ∂_t needs).
struct BubbleConfig {
    BallDomain dom;
    std::vector<Point> q;       // anchor points
    std::vector<double> b;      // heights
    std::vector<double> mu;     // scalings μ_j > 0
    std::vector<double> mu_dot;
    std::vector<Point> xi;      // centres
    std::vector<Point> xi_dot;
    double mu0 = 0;             // reference scaling μ₀(t)
    double mu0_dot = 0;
    double t = 0;

    std::size_t k() const noexcept { return q.size(); }
};

/// Throws ConfigError unless μ_j > 0, all vectors agree in size and
/// |ξ_j − q_j| < (min pairwise distance)/4.
void validate(const BubbleConfig& cfg);

/// |μ_j − b_jμ₀| ≤ μ₀^{1+σ} for all j.
bool satisfies_scaling_hypothesis(const BubbleConfig& cfg, double sigma);

using ParameterPath = std::function<BubbleConfig(double t)>;

enum class SpatialMode {
    analytic,           // ΔU = −U^p for the bubbles, L₀p₀ = q₀ for the correction, ΔH = 0
    hybrid,             // bubbles analytic, fourth-order differences on the smooth remainder
    finite_difference,  // fourth-order differences on the whole ansatz
};
enum class TimeMode {
    chain_rule,          // exact derivative through (μ, μ̇, ξ, ξ̇)
    central_difference,  // second-order differences of the path
};

struct ResidualOptions {
    bool corrected = true;         // include Φ̃
    bool regular_part = true;      // include −μ_j^{(n-2)/2}H(x, q_j)
    SpatialMode space = SpatialMode::hybrid;
    TimeMode time = TimeMode::chain_rule;
    double step_factor = 0.01;     // spatial step = step_factor · min μ_j
    double time_step = 0;          // central-difference step; 0 picks 1e-4·t
};

/// Lemma-type decomposition of the uncorrected error near bubble j, all
/// scaled by μ_j^{(n+2)/2}: total = E0 + E1 + remainder.
struct ErrorChannels {
    double E0 = 0;         // μ_j E_{0j}[μ, μ̇_j](y)
    double E1 = 0;         // μ_j E_{1j}[μ, ξ̇_j](y)
    double total = 0;      // μ_j^{(n+2)/2} S(u_{μ,ξ})(ξ_j + μ_j y)
    double remainder = 0;
};

/// Corrected multi-bubble ansatz u* = Σ_j [U_{μ_j,ξ_j} − μ_j^{(n-2)/2}H(·,q_j)
/// + μ_j^{-(n-2)/2}γ_jμ₀^{n-2}p₀((· − ξ_j)/μ_j)] and its parabolic error
/// S(u) = −u_t + Δu + u^p.
class Ansatz {
public:
    explicit Ansatz(const Dim& dim);
    Ansatz(const Dim& dim, Corrector corrector);

    const Dim& dim() const noexcept { return dim_; }
    const Corrector& corrector() const noexcept { return corrector_; }

    /// γ_j = 2b_j²/((n−2)c₂), so that μ_{0j}E_{0j} = −γ_jμ₀^{n-2}q₀.
    double gamma(double b) const;

    double value(const BubbleConfig& cfg, const Point& x, bool corrected = true) const;
    double residual(const ParameterPath& path, double t, const Point& x, const ResidualOptions& opts = {}) const;
    double residual(const BubbleConfig& cfg, const Point& x, const ResidualOptions& opts = {}) const;
    /// μ_j^{(n+2)/2} S at x = ξ_j + μ_j y.
    double scaled_residual(const BubbleConfig& cfg, std::size_t j, const Point& y,
                           const ResidualOptions& opts = {}) const;

    ErrorChannels error_channels(const BubbleConfig& cfg, std::size_t j, const Point& y) const;

    /// ∫_{B_{2Rwin}} h_j Z_ℓ dy for ℓ = 1..n+1 and every j (row j), where h_j
    /// is the computable dominant part of the inner error at scale μ_{0j}:
    /// μ_{0j}[λ̇_jZ_{n+1} − μ₀^{n-4}pU^{p-1}(Mλ)_j] + λ_jE_{0j}[μ̄₀, μ̇_{0j}]
    /// + μ_j[ξ̇_j·∇U + pU^{p-1}(−μ_j^{n-2}∇H(q_j,q_j) + Σ(μ_iμ_j)^{(n-2)/2}∇G(q_j,q_i))·y],
    /// evaluated at y_j = μ_{0j}y/μ_j and rescaled by (μ_{0j}/μ_j)^{(n+2)/2}.
    Eigen::MatrixXd orthogonality_residuals(const BubbleConfig& cfg, const Eigen::MatrixXd& M, double Rwin) const;

private:
    double bubbles(const BubbleConfig& cfg, const Point& x) const;
    double remainder(const BubbleConfig& cfg, const Point& x, const ResidualOptions& opts) const;
    double time_derivative(const BubbleConfig& cfg, const Point& x, const ResidualOptions& opts) const;
    double laplacian(const BubbleConfig& cfg, const Point& x, const ResidualOptions& opts) const;
    double nonlinear(const BubbleConfig& cfg, const Point& x, const ResidualOptions& opts) const;

    Dim dim_;
    Corrector corrector_;
};

/// Exponent of μ₀ in the far-field size of S(u*) along the leading
/// trajectory: min((3n−10)/2, (n+2)/2).
double far_field_mu0_exponent(int n);

}  // namespace critheat
