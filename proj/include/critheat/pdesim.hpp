#pragma once

#include <functional>
#include <string>
#include <vector>

#include "critheat/bubble.hpp"
#include "critheat/radial.hpp"

namespace critheat {

enum class RunStatus { running, decayed, blown_up, horizon_reached };
std::string to_string(RunStatus s);

struct SimConfig {
    double R = 1.0;                // ball radius
    std::size_t nodes = 2048;      // including r = 0 and the Dirichlet node
    double grading = 1e-3;         // sinh grid parameter: spacing ≈ grading·h near 0
    double max_rel_change = 0.02;  // per accepted step, in the sup norm
    double reaction_dt_factor = 0.25;  // dt·p·sup^{p-1} bound
    bool reaction = true;          // false gives the heat equation
    double decay_level = 1e-4;
    double blowup_cap = 1e6;
    double horizon = 100.0;
    double dt_initial = 1e-6;
    double dt_max = 0.05;
    int max_halvings = 10;
};

/// Radial solution u(r,t) on [0, R]; the last node carries the Dirichlet
/// value 0.
struct SimState {
    std::vector<double> u;
    double t = 0;
    double dt = 0;
    double energy = 0;
    double sup_u = 0;
    RunStatus status = RunStatus::running;
    std::size_t steps = 0;
    std::size_t energy_violations = 0;
    std::vector<double> rate;  // last (u_new − u_old)/dt, used as the Newton predictor
};

struct RunOptions {
    double t_end = 0;                     // 0: use the configured horizon
    std::vector<double> checkpoints;      // increasing dyadic times at which to store the state
    bool record_history = true;
    /// Also stop once E_h < 0 (blow-up) or u lies under the stationary
    /// supersolution A(R² − r²) (decay).
    bool early_classification = false;
};

struct RunRecord {
    RunStatus outcome = RunStatus::running;
    std::vector<double> t, sup_u, energy, mu;  // per accepted step; mu = (α_n/sup_u)^{2/(n-2)}
    std::vector<double> checkpoint_times;
    std::vector<SimState> checkpoint_states;  // full stepper state, so restarts reproduce the run
    SimState final_state;
};

/// Semi-implicit finite-volume solver for u_t = Δu + u^p on a ball with
/// Neumann symmetry at r = 0 and u = 0 on the boundary.
class Simulator {
public:
    Simulator(const Dim& dim, SimConfig cfg = {});

    const Dim& dim() const noexcept { return dim_; }
    const SimConfig& config() const noexcept { return cfg_; }
    const RadialGrid& grid() const noexcept { return grid_; }

    SimState initial_state(std::vector<double> u0, double t0 = 0) const;
    SimState initial_state(const std::function<double(double)>& profile, double t0 = 0) const;

    /// E_h = ω_n[½Σc_{i+½}(u_{i+1}−u_i)² − (1/(p+1))ΣV_i|u_i|^{p+1}].
    double energy(const std::vector<double>& u) const;

    /// One accepted backward-Euler step. dt is a power of two adapted to the
    /// relative-change target and the reaction rate, and t stays a multiple
    /// of dt. Newton failures halve dt; throws NumericalError after too many
    /// halvings.
    void step(SimState& s) const;
    /// One step of exactly dt (no adaptation).
    void step_fixed(SimState& s, double dt) const;

    /// Steps until decay, blow-up or the horizon, storing u at the requested
    /// checkpoint times.
    RunRecord run(SimState s, const RunOptions& opts = {}) const;

private:
    bool newton(const std::vector<double>& u_old, std::vector<double>& u, double dt,
                const std::vector<double>* rate = nullptr) const;
    void classify(SimState& s, std::vector<double>& log_marks, bool early) const;
    bool below_supersolution(const std::vector<double>& u) const;
    void check_positivity(const SimState& s) const;

    Dim dim_;
    SimConfig cfg_;
    RadialGrid grid_;
    FluxLaplacian flux_;
};

/// Runs α·profile until decay, blow-up or the configured horizon.
RunStatus classify_run(const Simulator& sim, double alpha, const std::function<double(double)>& profile);

/// The default initial shape (1 − (r/R)²)².
std::function<double(double)> default_profile(double R);

struct LadderEntry {
    double alpha = 0;
    RunStatus outcome = RunStatus::running;
};

struct RateFit {
    bool available = false;
    double slope = 0;         // d log sup_u / d log(t − t_origin)
    double raw_slope = 0;     // same with the origin pinned at t = 0
    double t_origin = 0;
    double rms_residual = 0;
    double t_begin = 0, t_end = 0;
    double mu_begin = 0, mu_end = 0;
    std::size_t samples = 0;
};

struct ThresholdOptions {
    std::vector<double> ladder;     // amplitudes to classify first (empty: geometric default)
    int depth = 44;                 // bisection steps per stage
    int max_stages = 200;
    double separation = 1e-3;       // restart where the bracketing runs differ by this (relative)
    double target_mu = 0.05;        // stop once the near-threshold run reaches this scale
    double fit_mu_max = 0.25;       // rate window starts once μ falls below this
    double checkpoint_spacing = 0.1;  // in units of μ² at the stage start
    std::size_t checkpoints_per_stage = 160;
    double time_budget = 540.0;     // seconds
    bool early_classification = true;
    std::function<void(int stage, double t, double sup_u)> on_stage;  // progress hook
};

struct ThresholdResult {
    double alpha_lo = 0, alpha_hi = 0;       // bracket after the first stage
    double initial_width = 0;                // from the ladder
    std::vector<LadderEntry> runs;           // ladder outcomes
    bool ladder_monotone = true;
    int stages = 0;
    int total_runs = 0;
    // the near-threshold trajectory assembled across stages
    std::vector<double> t, sup_u, energy, mu;
    RateFit rate_fit;
    std::size_t energy_violations = 0;
    double min_energy = 0;
    double elapsed_seconds = 0;
    std::string stop_reason;
};

/// Classifies a ladder of amplitudes, bisects the amplitude of `profile`
/// between the last decaying and first blowing-up rung, then keeps
/// re-bisecting from stored checkpoints: the new initial data interpolate
/// between the two bracketing states, which the comparison principle keeps
/// ordered.
ThresholdResult bisect_threshold(const Simulator& sim, const std::function<double(double)>& profile,
                                 const ThresholdOptions& opts = {});

/// Fits sup_u ≈ C(t − t*)^κ by least squares in log–log form over the samples
/// after μ first drops below mu_max; the origin t* is a free parameter.
RateFit fit_rate(const std::vector<double>& t, const std::vector<double>& sup_u, const std::vector<double>& mu,
                 double mu_max);

}  // namespace critheat
