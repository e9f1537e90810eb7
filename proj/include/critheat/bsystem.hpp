#pragma once

#include <Eigen/Dense>

#include "critheat/green.hpp"

namespace critheat {

/// Value, gradient and Hessian of Ĩ(Λ) = ΛᵀGΛ − Σ Λ_j^{4/(n-2)}, where G is
/// the interaction matrix.
struct ITildeEval {
    double value = 0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
};

ITildeEval functional_I_tilde(const GreenMatrix& gm, const Eigen::VectorXd& Lambda);

/// Solution of the height system and the spectral data built on it.
struct BSolution {
    int n = 0;
    Eigen::VectorXd b;
    Eigen::VectorXd Lambda;    // b^{(n-2)/2}
    Eigen::MatrixXd hessI;     // D²I(b)
    Eigen::MatrixXd M;         // explicit M_ij formulas
    Eigen::MatrixXd P;         // rows are eigenvectors: D²I = (2/(n-2)) Pᵀ diag(σ̄) P
    Eigen::VectorXd sigma_bar;
    double residual = 0;       // max-norm of the height-system residual
    double grad_norm = 0;      // |∇Ĩ(Λ*)|
    int iterations = 0;

    std::size_t k() const noexcept { return static_cast<std::size_t>(b.size()); }
};

struct SolveOptions {
    int max_iterations = 200;
    double grad_tol = 1e-12;
    /// Optional starting point in Λ; empty means the decoupled k = 1 guess.
    Eigen::VectorXd start;
};

/// Minimises Ĩ by damped Newton in log variables. Throws ConfigError for a
/// non-positive-definite matrix and NumericalError on non-convergence.
BSolution solve_heights(const GreenMatrix& gm, const SolveOptions& opts = {});

/// Residual of b_j^{n-3}H_j − Σ_{i≠j} b_i^{(n-2)/2} b_j^{(n-4)/2} G_ij − 2b_j/(n-2).
Eigen::VectorXd height_system_residual(const GreenMatrix& gm, const Eigen::VectorXd& b);

struct ReciprocalCheck {
    bool solvable = false;            // solve_heights produced a finite positive minimiser
    bool escaped_to_boundary = false; // descent drove some Λ_j to 0 or ∞
    int iterations = 0;
};

/// Positive definiteness ⇒ finite minimiser; otherwise damped descent on Ĩ
/// is run and escape to the orthant boundary is recorded.
ReciprocalCheck positivity_reciprocal_check(const GreenMatrix& gm);

}  // namespace critheat
