#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "critheat/errors.hpp"
#include "critheat/pdesim.hpp"

using namespace critheat;

namespace {

const Dim& dim5() {
    static const Dim d = compute_constants(5);
    return d;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

TEST_CASE("zero is a fixed point") {
    const Simulator sim(dim5());
    SimState s = sim.initial_state([](double) { return 0.0; });
    for (int i = 0; i < 20; ++i) sim.step(s);
    for (double v : s.u) CHECK(v == 0.0);
    CHECK(s.energy == 0.0);
    sim.step_fixed(s, 1e-3);
    CHECK(s.sup_u == 0.0);
}

TEST_CASE("heat kernel decay without reaction") {
    SimConfig cfg;
    cfg.reaction = false;
    const Simulator sim(dim5(), cfg);
    const double w = 0.01;
    // linear problem: the amplitude only keeps sup_u above the decay level
    const auto gauss = [w](double r) { return 1e3 * std::exp(-r * r / (w * w)); };
    RunOptions ro;
    ro.t_end = 2.5e-3;
    const RunRecord rec = sim.run(sim.initial_state(gauss), ro);
    CHECK(rec.outcome == RunStatus::horizon_reached);
    for (std::size_t i = 1; i < rec.sup_u.size(); ++i) CHECK(rec.sup_u[i] <= rec.sup_u[i - 1]);
    // the Gaussian is the heat kernel at time w²/4, so sup u ∝ (t + w²/4)^{-n/2}
    std::vector<double> x, y;
    for (std::size_t i = 0; i < rec.t.size(); ++i) {
        const double s = rec.t[i] + 0.25 * w * w;
        if (s >= 2.5e-4 && s <= 2.5e-3) {
            x.push_back(std::log(s));
            y.push_back(std::log(rec.sup_u[i]));
        }
    }
    REQUIRE(x.size() > 10);
    CHECK(x.back() - x.front() > std::log(9.0));
    CHECK(std::abs(slope(x, y) / -2.5 - 1.0) < 0.1);
    // the mass has not reached the boundary yet
    const double m0 = sim.grid().ball_integral(sim.initial_state(gauss).u);
    const double m1 = sim.grid().ball_integral(rec.final_state.u);
    CHECK(m1 == doctest::Approx(m0).epsilon(0.01));
}

TEST_CASE("small data decays and large data blows up") {
    const Simulator sim(dim5());
    const auto phi = default_profile(1.0);
    const RunRecord rec = sim.run(sim.initial_state([&](double r) { return 0.01 * phi(r); }));
    CHECK(rec.outcome == RunStatus::decayed);
    CHECK(rec.final_state.energy_violations == 0);
    // monotone once the initial layer has passed
    for (std::size_t i = rec.sup_u.size() / 10 + 1; i < rec.sup_u.size(); ++i) CHECK(rec.sup_u[i] <= rec.sup_u[i - 1]);

    const RunRecord big = sim.run(sim.initial_state([&](double r) { return 10 * dim5().alpha_n * phi(r); }));
    CHECK(big.outcome == RunStatus::blown_up);
    CHECK(big.final_state.sup_u > sim.config().blowup_cap);
    CHECK(big.final_state.energy_violations == 0);
    for (std::size_t i = 1; i < big.energy.size(); ++i) {
        CHECK(big.energy[i] <= big.energy[i - 1] + 1e-8 * std::abs(big.energy[i - 1]));
    }
    CHECK(classify_run(sim, 1e-3, phi) == RunStatus::decayed);

    SUBCASE("outcome is monotone along a ladder") {
        std::vector<RunStatus> out;
        for (double a : {2.0, 5.0, 10.0, 20.0, 40.0, 80.0}) out.push_back(classify_run(sim, a, phi));
        CHECK(out.front() == RunStatus::decayed);
        CHECK(out.back() == RunStatus::blown_up);
        const auto first_blow = std::find(out.begin(), out.end(), RunStatus::blown_up);
        CHECK(std::all_of(out.begin(), first_blow, [](RunStatus s) { return s == RunStatus::decayed; }));
        CHECK(std::all_of(first_blow, out.end(), [](RunStatus s) { return s == RunStatus::blown_up; }));
    }
    SUBCASE("horizon is reported, not thrown") {
        SimConfig cfg;
        cfg.horizon = 1e-3;
        const Simulator shortsim(dim5(), cfg);
        CHECK(classify_run(shortsim, 1.0, phi) == RunStatus::horizon_reached);
    }
}

TEST_CASE("comparison principle at a shared fixed step") {
    const Simulator sim(dim5());
    const auto phi = default_profile(1.0);
    SimState lo = sim.initial_state([&](double r) { return 14.0 * phi(r); });
    SimState hi = sim.initial_state([&](double r) { return 15.0 * phi(r); });
    bool ordered = true;
    for (int k = 0; k < 1000; ++k) {
        sim.step_fixed(lo, 1e-4);
        sim.step_fixed(hi, 1e-4);
        for (std::size_t i = 0; i < lo.u.size(); ++i) ordered = ordered && lo.u[i] <= hi.u[i];
    }
    CHECK(ordered);
    CHECK(lo.energy_violations == 0);
    CHECK(hi.energy_violations == 0);
}

TEST_CASE("dyadic stepping makes restarts reproducible") {
    const Simulator sim(dim5());
    const auto phi = default_profile(1.0);
    RunOptions ro;
    for (int k = 1; k <= 8; ++k) ro.checkpoints.push_back(k * 0.03125);
    const RunRecord a = sim.run(sim.initial_state([&](double r) { return 12.0 * phi(r); }), ro);
    REQUIRE(a.checkpoint_states.size() >= 4);
    for (std::size_t k = 0; k < a.checkpoint_times.size(); ++k) CHECK(a.checkpoint_times[k] == ro.checkpoints[k]);
    SimState s = a.checkpoint_states[1];
    RunOptions later;
    later.checkpoints = {a.checkpoint_times[3]};
    const RunRecord b = sim.run(s, later);
    REQUIRE(b.checkpoint_states.size() == 1);
    CHECK(b.checkpoint_states[0].u == a.checkpoint_states[3].u);
    CHECK(b.outcome == a.outcome);
    CHECK(b.final_state.t == a.final_state.t);
}

TEST_CASE("rate fit with a free origin") {
    std::vector<double> t, sup, mu;
    for (int i = 0; i < 500; ++i) {
        t.push_back(0.1 + 0.01 * i);
        sup.push_back(3.0 * std::pow(t.back() + 0.4, 1.5));
        mu.push_back(0.1);
    }
    const RateFit f = fit_rate(t, sup, mu, 0.2);
    REQUIRE(f.available);
    CHECK(f.slope == doctest::Approx(1.5).epsilon(1e-5));
    CHECK(f.t_origin == doctest::Approx(-0.4).epsilon(1e-4));
    CHECK(f.raw_slope < 1.5);
    // μ never small enough: no window
    CHECK_FALSE(fit_rate(t, sup, mu, 0.05).available);
    CHECK_THROWS_AS(fit_rate(t, sup, {0.1}, 0.2), ConfigError);
}

TEST_CASE("threshold bisection") {
    const Simulator sim(dim5());
    const auto phi = default_profile(1.0);
    SUBCASE("depth arithmetic and bracket outcomes") {
        ThresholdOptions o;
        o.ladder = {5.0, 10.0, 20.0, 40.0};
        o.depth = 10;
        o.max_stages = 1;
        const ThresholdResult r = bisect_threshold(sim, phi, o);
        CHECK(r.ladder_monotone);
        CHECK(r.initial_width == 10.0);
        CHECK(r.alpha_hi - r.alpha_lo == doctest::Approx(10.0 / 1024).epsilon(1e-9));
        CHECK(classify_run(sim, r.alpha_lo, phi) == RunStatus::decayed);
        CHECK(classify_run(sim, r.alpha_hi, phi) == RunStatus::blown_up);
    }
    SUBCASE("near-threshold run stays above the bubble energy") {
        ThresholdOptions o;
        o.ladder = {10.0, 20.0};
        o.max_stages = 3;
        const ThresholdResult r = bisect_threshold(sim, phi, o);
        CHECK(r.stages == 3);
        CHECK(r.alpha_hi - r.alpha_lo < 1e-11);
        CHECK(r.energy_violations == 0);
        CHECK(r.min_energy > dim5().S_n);
        REQUIRE(r.mu.size() > 100);
        CHECK(r.mu.back() < 0.2);
        // μ shrinks and sup_u grows along the assembled trajectory
        CHECK(r.sup_u.back() > 5 * r.sup_u.front());
        CHECK(r.rate_fit.available);
        CHECK(r.rate_fit.slope > 0);
    }
    SUBCASE("a ladder without a bracket") {
        ThresholdOptions o;
        o.ladder = {1.0, 2.0};
        CHECK_THROWS_AS(bisect_threshold(sim, phi, o), NumericalError);
        o.ladder = {2.0, 1.0};
        CHECK_THROWS_AS(bisect_threshold(sim, phi, o), ConfigError);
    }
}

TEST_CASE("grid refinement barely moves the fitted rate") {
    auto fitted = [](std::size_t nodes) {
        SimConfig cfg;
        cfg.nodes = nodes;
        const Simulator sim(dim5(), cfg);
        ThresholdOptions o;
        o.ladder = {10.0, 20.0};
        o.max_stages = 3;
        return bisect_threshold(sim, default_profile(1.0), o).rate_fit;
    };
    const RateFit coarse = fitted(1024), fine = fitted(2048);
    REQUIRE(coarse.available);
    REQUIRE(fine.available);
    CHECK(std::abs(coarse.slope / fine.slope - 1) < 0.1);
}

TEST_CASE("configuration errors") {
    CHECK_THROWS_AS(Simulator(compute_constants(5), SimConfig{.nodes = 4}), ConfigError);
    const Simulator sim(dim5());
    CHECK_THROWS_AS(sim.initial_state(std::vector<double>(3, 0.0)), ConfigError);
    SimState s = sim.initial_state(default_profile(1.0));
    CHECK_THROWS_AS(sim.step_fixed(s, 0.0), ConfigError);
    CHECK(to_string(RunStatus::blown_up) == "blown_up");
}
