#pragma once

#include <functional>

#include "critheat/bubble.hpp"
#include "critheat/radial.hpp"

namespace critheat {

/// Ground state of −L₀ = −(Δ + pU^{p-1}) restricted to radial functions.
struct EigenPair {
    double lambda0 = 0;            // lowest eigenvalue (< 0)
    double second_eigenvalue = 0;  // next radial eigenvalue on the truncated ball
    double shooting_lambda0 = 0;   // independent ODE-shooting value
    double truncation_shift = 0;   // |λ₀(2T) − λ₀(T)|
    RadialField Z0;                // positive, ω_n∫Z₀² r^{n-1} dr = 1
};

/// Z = Z_{n+1} and a second solution Z̃ of L₀Z̃ = 0 with
/// r^{n-1}(Z̃′Z − Z̃Z′) = 1.
struct FundamentalSystem {
    RadialField Z;
    RadialField Ztilde;
    RadialField Ztilde_dr;
    double wronskian_constant = 1.0;
    double r_zero = 1.0;  // zero of Z_{n+1}
    SmoothProfile ztilde;
};

/// Grid used by the fundamental system and p₀: geometric, no origin
/// (Z̃ is singular there).
RadialGrid fundamental_grid(int n);
/// Grid used for the eigenproblems: sinh-graded from the origin.
RadialGrid eigen_grid(int n, double truncation, std::size_t count = 8001);

FundamentalSystem second_solution(const Dim& dim, const RadialGrid& grid);

/// q₀ = pU^{p-1}c₂ + c₁Z_{n+1}.
double corrector_source(const Dim& dim, double r);

struct Corrector {
    RadialField p0;          // on the fundamental-system grid
    SmoothProfile profile;   // p₀, p₀′, p₀″ interpolant, with r = 0 prepended
    double orthogonality = 0;  // |∫q₀Z| / ∫|q₀Z|
};

/// p₀ = Z̃(r)∫₀^r Z q₀ s^{n-1} − Z(r)∫₀^r Z̃ q₀ s^{n-1}, the regular
/// solution of L₀p₀ = q₀. Throws NumericalError ("orthogonality") if
/// ∫q₀Z is not zero to 1e-8 relative.
Corrector corrector_p0(const Dim& dim, const FundamentalSystem& sys);

/// Discrete ground state on a grid from the origin to a truncation ≥ 50,
/// validated by shooting and by doubling the truncation.
EigenPair negative_eigenpair(const Dim& dim, const RadialGrid& grid);
/// Dirichlet ground-state eigenvalue on [0, truncation] by shooting.
double shooting_lambda0(const Dim& dim, double truncation, double guess);

struct CoercivityResult {
    double R = 0;
    double lambda_R = 0;         // min Q(φ,φ)/∫φ² over radial φ ∈ H₀¹(B_{2R}), ∫φZ₀ = 0
    double unconstrained = 0;    // the same minimum without the constraint
    double lambda_R_coarse = 0;  // value on the coarser of the two grids
};

/// Constrained minimum by the secular equation z·(T − μ)^{-1}z = 0 for the
/// discrete operator, Richardson-extrapolated over two grids.
CoercivityResult coercivity_constant(const Dim& dim, double R, const EigenPair& ground);

/// Smooth cut-off: 1 for s ≤ M, 0 for s ≥ M+1, quintic in between.
double cutoff_chi(double s, double M);

struct SuperSolution {
    RadialField g;
    double residual_max = 0;     // max relative |𝓛_M g + 1/(1+r^a)| over interior nodes
    double boundary_value = 0;   // g(2R)
};

/// g(r) = g₂(r)∫_r^{2R} dρ/(g₂²ρ^{n-1}) ∫₀^ρ g₂ s^{n-1}/(1+s^a) ds, where
/// 𝓛_M = Δ + (1−χ_M)pU^{p-1} and 𝓛_M g₂ = 0, g₂(0) = 1.
SuperSolution supersolution_g(const Dim& dim, double a, double M, double R);

/// ∂_rr φ + (n−1)φ_r/r − (n−1)φ/r² + pU^{p-1}φ at the interior nodes
/// (the returned field lives on that sub-grid).
RadialField mode_operator_L1(const Dim& dim, const RadialField& phi);

/// Eigenvalues ℓ(n−2+ℓ) of −Δ on S^{n-1}.
double spherical_eigenvalue(int n, int ell);

/// Discrete quadratic form of −L₀ on the finite-volume grid, evaluated two
/// ways: as the bilinear form and as −∫φ L₀φ.
struct QuadraticForms {
    double bilinear = 0;
    double by_parts = 0;
};
QuadraticForms quadratic_form_check(const Dim& dim, const RadialGrid& grid, std::span<const double> phi);

/// Mode-one form Q₁(φ,φ) = ∫(φ′² + (n−1)φ²/r² − pU^{p-1}φ²) r^{n-1} dr on
/// [ra, rb] and its substituted form ∫U′²ψ′² r^{n-1} dr with φ = U′ψ.
struct ModeOneForms {
    double direct = 0;
    double substituted = 0;
};
ModeOneForms mode_one_form(const Dim& dim, const std::function<double(double)>& phi,
                           const std::function<double(double)>& dphi, double ra, double rb);

}  // namespace critheat
