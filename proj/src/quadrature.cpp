#include "critheat/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>

#include "critheat/errors.hpp"

namespace critheat::quad {

namespace {
using Rule = boost::math::quadrature::gauss<double, 20>;
}

double integrate_fixed(const Integrand& f, double a, double b, int panels) {
    const double h = (b - a) / panels;
    double sum = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double lo = a + k * h;
        sum += Rule::integrate(f, lo, k + 1 == panels ? b : lo + h);
    }
    return sum;
}

double integrate(const Integrand& f, double a, double b, double rel_tol, double abs_tol) {
    if (a == b) return 0.0;
    int panels = 4;
    double prev = integrate_fixed(f, a, b, panels);
    // 2^14 panels of a 20-point rule is far beyond anything a smooth
    // integrand needs; hitting it means the integrand is singular.
    while (panels < (1 << 14)) {
        panels *= 2;
        const double cur = integrate_fixed(f, a, b, panels);
        if (std::abs(cur - prev) <= std::max(rel_tol * std::abs(cur), abs_tol) || std::abs(cur - prev) < 1e-300) {
            return cur;
        }
        prev = cur;
    }
    throw NumericalError("quadrature", "composite Gauss-Legendre failed to converge");
}

double integrate_to_infinity(const Integrand& f, double a, double rel_tol, double abs_tol) {
    // Length scale of the map, so that a far-out lower limit is not squeezed
    // into a thin layer next to s = 1.
    const double L = std::max(std::abs(a), 1.0);
    auto g = [&](double s) {
        if (s >= 1.0) return 0.0;
        const double one_minus = 1.0 - s;
        const double r = a + L * s / one_minus;
        return L * f(r) / (one_minus * one_minus);
    };
    return integrate(g, 0.0, 1.0, rel_tol, abs_tol);
}

}  // namespace critheat::quad

// ---------------------------------------------------------------------------
// ODE integration (kept next to the quadrature helpers: both wrap Boost).

#include <boost/numeric/odeint.hpp>

#include "critheat/ode.hpp"

namespace critheat::ode {

std::vector<State> integrate_at(const Rhs& rhs, State y0, const std::vector<double>& times,
                                double rel_tol, double abs_tol) {
    namespace odeint = boost::numeric::odeint;
    std::vector<State> out;
    out.reserve(times.size());
    if (times.empty()) return out;
    auto stepper = odeint::make_controlled(abs_tol, rel_tol, odeint::runge_kutta_dopri5<State>());
    const double span = times.back() - times.front();
    const double dt0 = span == 0.0 ? 1.0 : span * 1e-6;
    odeint::integrate_times(
        stepper, [&](const State& y, State& dy, double t) { rhs(y, dy, t); }, y0, times.begin(), times.end(),
        dt0, [&](const State& y, double) { out.push_back(y); },
        odeint::max_step_checker(10'000'000));
    return out;
}

}  // namespace critheat::ode
