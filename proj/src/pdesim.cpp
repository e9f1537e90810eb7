#include "critheat/pdesim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <cstdlib>
#include <thread>

#include <boost/math/tools/minima.hpp>

#include "critheat/errors.hpp"

namespace critheat {

std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::running: return "running";
        case RunStatus::decayed: return "decayed";
        case RunStatus::blown_up: return "blown_up";
        case RunStatus::horizon_reached: return "horizon_reached";
    }
    return "unknown";
}

namespace {

double sup_norm(const std::vector<double>& u) {
    double m = 0.0;
    for (double v : u) m = std::max(m, std::abs(v));
    return m;
}

// |u|^{p-1}; the cube-root path covers n = 5 without pow.
struct Power {
    int n;
    double pm1;
    double operator()(double u) const {
        const double a = std::abs(u);
        if (n == 5) {
            const double c = std::cbrt(a);
            return a * c;
        }
        if (n == 6) return a;
        return std::pow(a, pm1);
    }
};

std::size_t thread_count() {
    if (const char* env = std::getenv("CRITHEAT_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

Simulator::Simulator(const Dim& dim, SimConfig cfg)
    : dim_(dim), cfg_(cfg), grid_(RadialGrid::sinh_graded(dim.n, cfg.grading, cfg.R, cfg.nodes)), flux_(grid_) {
    if (dim.n < 5) throw ConfigError("dimension-unsupported", "simulation needs n >= 5");
    if (cfg.nodes < 8) throw ConfigError("grid", "need at least 8 nodes");
    if (!(cfg.max_rel_change > 0 && cfg.reaction_dt_factor > 0)) throw ConfigError("step", "step controls must be positive");
    if (!(cfg.decay_level > 0 && cfg.blowup_cap > cfg.decay_level)) throw ConfigError("classify", "bad classification levels");
}

SimState Simulator::initial_state(std::vector<double> u0, double t0) const {
    if (u0.size() != grid_.size()) throw ConfigError("initial-data", "initial data length does not match the grid");
    for (double v : u0) {
        if (!std::isfinite(v)) throw ConfigError("initial-data", "initial data must be finite");
    }
    u0.back() = 0.0;
    SimState s;
    s.u = std::move(u0);
    s.t = t0;
    s.dt = cfg_.dt_initial;
    s.sup_u = sup_norm(s.u);
    s.energy = energy(s.u);
    return s;
}

SimState Simulator::initial_state(const std::function<double(double)>& profile, double t0) const {
    std::vector<double> u(grid_.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = profile(grid_[i]);
    return initial_state(std::move(u), t0);
}

double Simulator::energy(const std::vector<double>& u) const {
    const std::size_t m = flux_.unknowns();
    const double p = dim_.p;
    const Power pw{dim_.n, p - 1};
    double grad = 0.0, pot = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double d = u[i + 1] - u[i];
        grad += flux_.conductance[i] * d * d;
        if (cfg_.reaction) pot += flux_.volume[i] * pw(u[i]) * u[i] * u[i];
    }
    return grid_.dim() > 0 ? sphere_area(dim_.n) * (0.5 * grad - pot / (p + 1)) : 0.0;
}

bool Simulator::newton(const std::vector<double>& u_old, std::vector<double>& u, double dt,
                       const std::vector<double>* rate) const {
    const std::size_t m = flux_.unknowns();
    const auto& c = flux_.conductance;
    const auto& V = flux_.volume;
    const Power pw{dim_.n, dim_.p - 1};
    const double p = dim_.p;
    std::vector<double> a(m), b(m), sup(m), rhs(m);
    u = u_old;
    if (rate && rate->size() == u.size()) {
        for (std::size_t i = 0; i < m; ++i) u[i] += dt * (*rate)[i];
    }
    const double scale = std::max(sup_norm(u_old), std::numeric_limits<double>::min());
    for (int it = 0; it < 12; ++it) {
        for (std::size_t i = 0; i < m; ++i) {
            const double cl = i > 0 ? c[i - 1] : 0.0;
            const double ul = i > 0 ? u[i - 1] : 0.0;
            const double ur = u[i + 1];  // u[m] is the boundary zero
            const double flux = cl * (ul - u[i]) + c[i] * (ur - u[i]);
            double react = 0.0, dreact = 0.0;
            if (cfg_.reaction) {
                const double q = pw(u[i]);
                react = q * u[i];
                dreact = p * q;
            }
            rhs[i] = -(V[i] * (u[i] - u_old[i]) / dt - flux - V[i] * react);
            a[i] = -cl;
            sup[i] = -c[i];
            b[i] = V[i] / dt + cl + c[i] - V[i] * dreact;
        }
        solve_tridiagonal(a, b, sup, rhs);
        double dmax = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (!std::isfinite(rhs[i])) return false;
            u[i] += rhs[i];
            dmax = std::max(dmax, std::abs(rhs[i]));
        }
        // quadratic convergence: the remaining error is of order dmax²/scale
        if (dmax <= 1e-8 * std::max(scale, sup_norm(u))) return true;
    }
    return false;
}

void Simulator::step_fixed(SimState& s, double dt) const {
    if (!(dt > 0)) throw ConfigError("step", "dt must be positive");
    std::vector<double> next;
    if (!newton(s.u, next, dt)) throw NumericalError("newton", "Newton iteration failed at fixed dt");
    next.back() = 0.0;
    s.u = std::move(next);
    s.t += dt;
    ++s.steps;
    const double e = energy(s.u);
    if (e > s.energy + 1e-8 * std::abs(s.energy)) ++s.energy_violations;
    s.energy = e;
    s.sup_u = sup_norm(s.u);
    check_positivity(s);
}

void Simulator::check_positivity(const SimState& s) const {
    // the maximum principle keeps nonnegative data nonnegative; allow rounding
    const double floor = -1e-12 * s.sup_u;
    for (double v : s.u) {
        if (v < floor) throw NumericalError("positivity", "solution became negative at t = " + std::to_string(s.t));
    }
}

namespace {

// Largest power of two ≤ x.
double dyadic_floor(double x) {
    int e = 0;
    std::frexp(x, &e);
    return std::ldexp(1.0, e - 1);
}

bool on_lattice(double t, double h) { return std::fmod(t, h) == 0.0; }

}  // namespace

void Simulator::step(SimState& s) const {
    // dt is a power of two and t stays a multiple of dt, so every run visits
    // the same dyadic time lattice and a restart from a stored state
    // reproduces the original run exactly
    double cap = cfg_.dt_max;
    if (cfg_.reaction && s.sup_u > 0) {
        // keeps dt·p·u^{p-1} small so the implicit step follows the unstable mode
        cap = std::min(cap, cfg_.reaction_dt_factor / (dim_.p * Power{dim_.n, dim_.p - 1}(s.sup_u)));
    }
    double dt = dyadic_floor(std::min(s.dt > 0 ? s.dt : cfg_.dt_initial, cap));
    while (!on_lattice(s.t, dt)) dt *= 0.5;
    std::vector<double> next;
    int halvings = 0, rejections = 0;
    double rel = 0.0;
    for (;;) {
        if (!newton(s.u, next, dt, &s.rate)) {
            if (++halvings > cfg_.max_halvings) {
                throw NumericalError("newton", "Newton failed after repeated step halving at t = " + std::to_string(s.t));
            }
            dt *= 0.5;
            continue;
        }
        next.back() = 0.0;
        double change = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) change = std::max(change, std::abs(next[i] - s.u[i]));
        rel = s.sup_u > 0 ? change / s.sup_u : 0.0;
        if (rel > cfg_.max_rel_change && ++rejections < 60) {
            dt *= 0.5;
            continue;
        }
        break;
    }
    s.rate.resize(s.u.size());
    for (std::size_t i = 0; i < s.u.size(); ++i) s.rate[i] = (next[i] - s.u[i]) / dt;
    s.u = std::move(next);
    s.t += dt;
    s.dt = (rel < 0.4 * cfg_.max_rel_change && on_lattice(s.t, 2 * dt)) ? 2 * dt : dt;
    ++s.steps;
    const double e = energy(s.u);
    if (e > s.energy + 1e-8 * std::abs(s.energy)) ++s.energy_violations;
    s.energy = e;
    s.sup_u = sup_norm(s.u);
    if (!std::isfinite(s.sup_u)) throw NumericalError("non-finite", "solution became non-finite");
    check_positivity(s);
}

bool Simulator::below_supersolution(const std::vector<double>& u) const {
    // ψ = A(R² − r²) has Δ_hψ = −2nA exactly on the finite-volume stencil,
    // so it is a stationary supersolution while 2nA ≥ (AR²)^p
    const double R2 = cfg_.R * cfg_.R;
    const double A = 0.99 * std::pow(2.0 * dim_.n, 1.0 / (dim_.p - 1)) * std::pow(R2, -dim_.p / (dim_.p - 1));
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] > A * (R2 - grid_[i] * grid_[i])) return false;
    }
    return true;
}

void Simulator::classify(SimState& s, std::vector<double>& marks, bool early) const {
    if (early && cfg_.reaction) {
        // the discrete energy is non-increasing, and once it is negative the
        // solution cannot stay bounded
        if (s.energy < 0) {
            s.status = RunStatus::blown_up;
            return;
        }
        // trapped under a stationary supersolution: no positive steady state
        // exists on the ball, so the solution decays
        if (below_supersolution(s.u)) {
            s.status = RunStatus::decayed;
            return;
        }
    }
    if (s.sup_u < cfg_.decay_level) {
        s.status = RunStatus::decayed;
        return;
    }
    // times at which sup_u first crossed cap/16·2^k
    const double base = cfg_.blowup_cap / 16.0;
    while (s.sup_u >= base * std::ldexp(1.0, static_cast<int>(marks.size()))) marks.push_back(s.t);
    if (s.sup_u > cfg_.blowup_cap && marks.size() >= 4) {
        const std::size_t k = marks.size();
        const double d1 = marks[k - 3] - marks[k - 4], d2 = marks[k - 2] - marks[k - 3], d3 = marks[k - 1] - marks[k - 2];
        // equal log-increments over shrinking time intervals: accelerating growth
        if (d3 <= d2 && d2 <= d1) {
            s.status = RunStatus::blown_up;
            return;
        }
    }
    if (s.sup_u > 1e6 * cfg_.blowup_cap) s.status = RunStatus::blown_up;
}

RunRecord Simulator::run(SimState s, const RunOptions& opts) const {
    const double t_end = opts.t_end > 0 ? opts.t_end : cfg_.horizon;
    RunRecord rec;
    std::vector<double> marks;
    const double mu_exp = 2.0 / (dim_.n - 2);
    auto record = [&] {
        if (!opts.record_history) return;
        rec.t.push_back(s.t);
        rec.sup_u.push_back(s.sup_u);
        rec.energy.push_back(s.energy);
        rec.mu.push_back(s.sup_u > 0 ? std::pow(dim_.alpha_n / s.sup_u, mu_exp) : std::numeric_limits<double>::infinity());
    };
    std::size_t ck = 0;
    while (ck < opts.checkpoints.size() && opts.checkpoints[ck] <= s.t) ++ck;
    record();
    classify(s, marks, opts.early_classification);
    while (s.status == RunStatus::running) {
        if (s.t >= t_end) {
            s.status = RunStatus::horizon_reached;
            break;
        }
        step(s);
        record();
        // a checkpoint is stored only when a step lands on it exactly
        while (ck < opts.checkpoints.size() && opts.checkpoints[ck] <= s.t) {
            if (opts.checkpoints[ck] == s.t) {
                rec.checkpoint_times.push_back(s.t);
                rec.checkpoint_states.push_back(s);
            }
            ++ck;
        }
        classify(s, marks, opts.early_classification);
    }
    rec.outcome = s.status;
    rec.final_state = std::move(s);
    return rec;
}

RunStatus classify_run(const Simulator& sim, double alpha, const std::function<double(double)>& profile) {
    if (!(alpha >= 0)) throw ConfigError("amplitude", "amplitude must be nonnegative");
    RunOptions quiet;
    quiet.record_history = false;
    return sim.run(sim.initial_state([&](double r) { return alpha * profile(r); }), quiet).outcome;
}

std::function<double(double)> default_profile(double R) {
    return [R](double r) {
        const double x = 1.0 - (r / R) * (r / R);
        return x > 0 ? x * x : 0.0;
    };
}

namespace {

struct LineFit {
    double slope = 0, intercept = 0, sse = 0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double m = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LineFit f;
    const double den = m * sxx - sx * sx;
    if (!(den > 0)) return f;
    f.slope = (m * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / m;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        f.sse += r * r;
    }
    return f;
}

}  // namespace

RateFit fit_rate(const std::vector<double>& t, const std::vector<double>& sup_u, const std::vector<double>& mu,
                 double mu_max) {
    RateFit fit;
    if (t.size() != sup_u.size() || t.size() != mu.size()) throw ConfigError("fit", "sample arrays differ in length");
    // thin to at most ~400 samples evenly spread in time so that the dense
    // late steps do not dominate the fit
    std::vector<double> ts, ys;
    const auto first = std::find_if(mu.begin(), mu.end(), [&](double m) { return m <= mu_max; }) - mu.begin();
    if (static_cast<std::size_t>(first) + 3 > t.size()) return fit;
    const double t0 = t[first], t1 = t.back();
    if (!(t1 > t0)) return fit;
    double next = t0;
    for (std::size_t i = first; i < t.size(); ++i) {
        if (t[i] >= next && sup_u[i] > 0) {
            ts.push_back(t[i]);
            ys.push_back(std::log(sup_u[i]));
            next = t[i] + (t1 - t0) / 400.0;
        }
    }
    if (ts.size() < 5) return fit;
    auto fit_with_origin = [&](double origin) {
        std::vector<double> xs(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) xs[i] = std::log(ts[i] - origin);
        return least_squares(xs, ys);
    };
    fit.available = true;
    fit.raw_slope = t0 > 0 ? fit_with_origin(0.0).slope : std::numeric_limits<double>::quiet_NaN();
    // sup_u ∝ (t − t*)^κ with the origin t* free: minimise the residual over
    // t* < t_begin
    const double span = t1 - t0;
    const auto best = boost::math::tools::brent_find_minima(
        [&](double s) { return fit_with_origin(t0 - span * std::exp(s)).sse; }, std::log(1e-3), std::log(1e3), 40);
    const double origin = t0 - span * std::exp(best.first);
    const LineFit lf = fit_with_origin(origin);
    fit.slope = lf.slope;
    fit.t_origin = origin;
    fit.rms_residual = std::sqrt(lf.sse / ts.size());
    fit.samples = ts.size();
    fit.t_begin = t0;
    fit.t_end = t1;
    fit.mu_begin = mu[first];
    fit.mu_end = mu.back();
    return fit;
}

namespace {

std::vector<double> interpolate(const std::vector<double>& a, const std::vector<double>& b, double theta) {
    std::vector<double> u(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) u[i] = a[i] + theta * (b[i] - a[i]);
    return u;
}

// The state between two bracketing states; the step size and predictor are
// taken from the lower one so that θ = 0 continues that run exactly.
SimState blend(const Simulator& sim, const SimState& a, const SimState& b, double theta) {
    if (theta == 0.0) {
        SimState s = a;
        s.status = RunStatus::running;
        s.steps = 0;
        s.energy_violations = 0;
        return s;
    }
    SimState s = sim.initial_state(interpolate(a.u, b.u, theta), a.t);
    s.dt = a.dt;
    if (a.rate.size() == b.rate.size() && !a.rate.empty()) s.rate = interpolate(a.rate, b.rate, theta);
    return s;
}

}  // namespace

ThresholdResult bisect_threshold(const Simulator& sim, const std::function<double(double)>& profile,
                                 const ThresholdOptions& opts) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };
    if (opts.depth < 1) throw ConfigError("bisect", "depth must be at least 1");
    const Dim& dim = sim.dim();
    ThresholdResult res;

    // exploratory ladder
    std::vector<double> ladder = opts.ladder;
    if (ladder.empty()) {
        for (double f = 0.25; f <= 64.0; f *= 2) ladder.push_back(f * dim.alpha_n);
    }
    if (!std::is_sorted(ladder.begin(), ladder.end()) || ladder.front() <= 0) {
        throw ConfigError("bisect", "ladder amplitudes must be positive and increasing");
    }
    RunOptions quiet;
    quiet.record_history = false;
    quiet.early_classification = opts.early_classification;
    auto classify_amp = [&](double alpha) {
        auto scaled = [&](double r) { return alpha * profile(r); };
        return sim.run(sim.initial_state(scaled), quiet).outcome;
    };
    res.runs.resize(ladder.size());
    {
        const std::size_t threads = thread_count();
        for (std::size_t i0 = 0; i0 < ladder.size(); i0 += threads) {
            std::vector<std::future<RunStatus>> jobs;
            for (std::size_t i = i0; i < std::min(ladder.size(), i0 + threads); ++i) {
                jobs.push_back(std::async(threads > 1 ? std::launch::async : std::launch::deferred, classify_amp, ladder[i]));
            }
            for (std::size_t i = i0; i < std::min(ladder.size(), i0 + threads); ++i) {
                res.runs[i] = {ladder[i], jobs[i - i0].get()};
            }
        }
    }
    res.total_runs = static_cast<int>(ladder.size());
    bool seen_blowup = false;
    for (const auto& e : res.runs) {
        if (e.outcome == RunStatus::blown_up) seen_blowup = true;
        else if (seen_blowup) res.ladder_monotone = false;
    }
    std::size_t hi_idx = ladder.size();
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (res.runs[i].outcome == RunStatus::blown_up) {
            hi_idx = i;
            break;
        }
    }
    if (hi_idx == ladder.size() || hi_idx == 0 || res.runs[hi_idx - 1].outcome != RunStatus::decayed) {
        throw NumericalError("no-bracket", "the amplitude ladder does not bracket the threshold");
    }
    const double a_lo = ladder[hi_idx - 1], a_hi = ladder[hi_idx];
    res.initial_width = a_hi - a_lo;

    SimState A = sim.initial_state([&](double r) { return a_lo * profile(r); });
    SimState B = sim.initial_state([&](double r) { return a_hi * profile(r); });
    double t_s = 0.0;
    const double mu_exp = 2.0 / (dim.n - 2);
    res.min_energy = std::numeric_limits<double>::infinity();

    for (int stage = 0; stage < opts.max_stages; ++stage) {
        const double sup_s = A.sup_u;
        const double mu_s = std::pow(dim.alpha_n / sup_s, mu_exp);
        RunOptions ro;
        ro.early_classification = opts.early_classification;
        // dyadic spacing, so that checkpoints lie on the step lattice
        const double spacing = dyadic_floor(opts.checkpoint_spacing * std::min(mu_s * mu_s, 1.0));
        for (std::size_t k = 1; k <= opts.checkpoints_per_stage; ++k) ro.checkpoints.push_back(t_s + k * spacing);

        double lo = 0.0, hi = 1.0;
        RunRecord rec_lo, rec_hi;
        bool have_lo = false, have_hi = false, inconclusive = false;
        for (int d = 0; d < opts.depth; ++d) {
            const double mid = 0.5 * (lo + hi);
            if (!(mid > lo && mid < hi)) break;
            RunRecord rec = sim.run(blend(sim, A, B, mid), ro);
            ++res.total_runs;
            if (rec.outcome == RunStatus::decayed) {
                lo = mid;
                rec_lo = std::move(rec);
                have_lo = true;
            } else if (rec.outcome == RunStatus::blown_up) {
                hi = mid;
                rec_hi = std::move(rec);
                have_hi = true;
            } else {
                inconclusive = true;
                break;
            }
            if (elapsed() > opts.time_budget) break;
        }
        if (!have_lo) {
            rec_lo = sim.run(blend(sim, A, B, 0.0), ro);
            ++res.total_runs;
        }
        if (!have_hi) {
            rec_hi = sim.run(blend(sim, B, A, 0.0), ro);
            ++res.total_runs;
        }
        if (stage == 0) {
            res.alpha_lo = a_lo + lo * (a_hi - a_lo);
            res.alpha_hi = a_lo + hi * (a_hi - a_lo);
        }
        res.stages = stage + 1;

        // last common checkpoint at which the bracketing runs still agree
        std::size_t pick_lo = rec_lo.checkpoint_states.size(), pick_hi = 0;
        for (std::size_t k = 0, m = 0; k < rec_lo.checkpoint_states.size(); ++k) {
            while (m < rec_hi.checkpoint_times.size() && rec_hi.checkpoint_times[m] < rec_lo.checkpoint_times[k]) ++m;
            if (m == rec_hi.checkpoint_times.size()) break;
            if (rec_hi.checkpoint_times[m] != rec_lo.checkpoint_times[k]) continue;
            const auto& ul = rec_lo.checkpoint_states[k].u;
            const auto& uh = rec_hi.checkpoint_states[m].u;
            double diff = 0.0;
            for (std::size_t i = 0; i < ul.size(); ++i) diff = std::max(diff, std::abs(uh[i] - ul[i]));
            if (diff > opts.separation * sup_norm(ul)) break;
            pick_lo = k;
            pick_hi = m;
        }
        const bool found = pick_lo < rec_lo.checkpoint_states.size();
        const double t_next = found ? rec_lo.checkpoint_times[pick_lo] : t_s;
        if (opts.on_stage) opts.on_stage(stage, t_next, found ? rec_lo.checkpoint_states[pick_lo].sup_u : sup_s);
        for (std::size_t i = 0; i < rec_lo.t.size() && rec_lo.t[i] <= t_next; ++i) {
            if (!res.t.empty() && rec_lo.t[i] <= res.t.back()) continue;
            res.t.push_back(rec_lo.t[i]);
            res.sup_u.push_back(rec_lo.sup_u[i]);
            res.energy.push_back(rec_lo.energy[i]);
            res.mu.push_back(rec_lo.mu[i]);
            res.min_energy = std::min(res.min_energy, rec_lo.energy[i]);
        }
        res.energy_violations += rec_lo.final_state.energy_violations + rec_hi.final_state.energy_violations;

        if (inconclusive) {
            res.stop_reason = "inconclusive-run";
            break;
        }
        if (!(t_next > t_s)) {
            res.stop_reason = "no-progress";
            break;
        }
        A = rec_lo.checkpoint_states[pick_lo];
        B = rec_hi.checkpoint_states[pick_hi];
        t_s = t_next;
        if (!res.mu.empty() && res.mu.back() <= opts.target_mu) {
            res.stop_reason = "target-reached";
            break;
        }
        if (elapsed() > opts.time_budget) {
            res.stop_reason = "time-budget";
            break;
        }
    }
    if (res.stop_reason.empty()) res.stop_reason = "max-stages";
    res.rate_fit = fit_rate(res.t, res.sup_u, res.mu, opts.fit_mu_max);
    res.elapsed_seconds = elapsed();
    return res;
}

}  // namespace critheat
