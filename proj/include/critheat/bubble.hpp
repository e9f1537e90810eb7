#pragma once

#include <span>
#include <string>

#include "critheat/radial.hpp"

namespace critheat {

/// Ambient dimension and the derived constants of the critical problem.
/// Integrals are over all of R^n (sphere area included).
struct Dim {
    int n = 0;
    double p = 0;        // (n+2)/(n-2)
    double alpha_n = 0;  // bubble amplitude U(0)
    double a_n = 0;      // ∫ U^p
    double c1 = 0;       // (n-2)/2 · a_n
    double c1_alt = 0;   // −p ∫ U^{p-1} Z_{n+1}; must agree with c1
    double c2 = 0;       // ∫ Z_{n+1}²
    double gamma_n = 0;  // μ₀(t) = γ_n t^{-1/(n-4)}
    double S_n = 0;      // energy of the bubble
    double omega_n = 0;  // |S^{n-1}|
    std::string alpha_convention;
};

/// Fills every Dim field by quadrature. Throws ConfigError
/// ("dimension-unsupported") for n < 5.
Dim compute_constants(int n);

/// The two amplitude conventions in circulation, and the selector that keeps
/// whichever makes ΔU + U^p vanish.
double alpha_exponent_form(int n);  // (n(n-2))^{(n-2)/4}
double alpha_root_form(int n);      // (n(n-2))^{1/(n-2)}
double bubble_residual_max(int n, double alpha, const RadialGrid& grid, int width = 7);

/// U(r) = α_n (1+r²)^{-(n-2)/2} and its radial derivatives.
double bubble_profile(const Dim& dim, double r);
double bubble_dr(const Dim& dim, double r);
double bubble_drr(const Dim& dim, double r);
/// pU^{p-1}, the potential of the linearised operator L₀.
double bubble_potential(const Dim& dim, double r);

/// Z_{n+1}(r) = (n-2)/2 U + r U' and its derivative.
double kernel_radial(const Dim& dim, double r);
double kernel_radial_dr(const Dim& dim, double r);
/// Radius of the single zero of Z_{n+1}, found by bisection on the closed form.
double kernel_zero(const Dim& dim);

/// Z_i(y) = ∂U/∂y_i for i ≤ n, Z_{n+1} for i = n+1.
double kernel_Z(const Dim& dim, int index, std::span<const double> y);

/// E(u) = ½∫|∇u|² − (n-2)/(2n)∫|u|^{2n/(n-2)} on the field's grid.
/// The gradient uses centered differences. Grids with fewer than 64 nodes are refused.
double energy(const Dim& dim, const RadialField& u);

/// Default grid used by the residual checks: sinh-graded, origin to 10³.
RadialGrid bubble_check_grid(int n);

}  // namespace critheat
