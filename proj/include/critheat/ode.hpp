#pragma once

#include <functional>
#include <vector>

namespace critheat::ode {

using State = std::vector<double>;
using Rhs = std::function<void(const State& y, State& dydt, double t)>;

/// Adaptive Dormand–Prince 4(5) integration reporting the state at each
/// requested time (times must be monotone, in either direction, and start
/// at the initial time). The stepper lands exactly on every output time.
std::vector<State> integrate_at(const Rhs& rhs, State y0, const std::vector<double>& times,
                                double rel_tol = 1e-12, double abs_tol = 1e-14);

}  // namespace critheat::ode
