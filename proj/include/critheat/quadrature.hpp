#pragma once

#include <functional>

namespace critheat::quad {

using Integrand = std::function<double(double)>;

/// Composite 20-point Gauss–Legendre on [a, b]. The panel count doubles
/// until two successive values agree to `rel_tol` (relative) or `abs_tol`.
double integrate(const Integrand& f, double a, double b, double rel_tol = 1e-12, double abs_tol = 0.0);

/// Integral over [a, ∞) through the substitution r = a + L·s/(1-s), L = max(|a|, 1).
/// The integrand must decay faster than 1/r.
double integrate_to_infinity(const Integrand& f, double a, double rel_tol = 1e-12, double abs_tol = 0.0);

/// Fixed composite rule with `panels` equal panels; no adaptivity.
double integrate_fixed(const Integrand& f, double a, double b, int panels);

}  // namespace critheat::quad
