#include "cvdp/classify.hpp"
#include "cvdp/errors.hpp"
#include "cvdp/integrate.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace cvdp;

TEST_SUITE("integrate") {
    TEST_CASE("rest at E0 stays at E0") {
        const SystemParams p = SystemParams::table1();
        SolverOptions o;
        o.t_end = 500;
        const Trajectory tr = integrate(symmetric_equilibrium(p), p, o);
        CHECK((tr.final_state() - symmetric_equilibrium(p)).norm() < 1e-12);
        CHECK(tr.t_final == doctest::Approx(500.0));
    }

    TEST_CASE("explicit and implicit steppers agree") {
        const SystemParams p = SystemParams::table1();
        const PhaseState s0 = perturbed_equilibrium(p, 1.5);
        SolverOptions o;
        o.t_end = 200;
        o.rel_tol = 1e-10;
        o.abs_tol = 1e-12;
        o.max_step = 0.05;
        const Trajectory rk = integrate(s0, p, o);
        o.method = Method::RadauIIA3;
        const Trajectory ra = integrate(s0, p, o);
        CHECK((rk.final_state() - ra.final_state()).norm() < 1e-5);
    }

    TEST_CASE("tighter tolerance converges") {
        const SystemParams p = SystemParams::table1();
        const PhaseState s0 = perturbed_equilibrium(p, 1.5);
        SolverOptions o;
        o.t_end = 300;
        o.rel_tol = 1e-12;
        o.abs_tol = 1e-14;
        const PhaseState ref = integrate(s0, p, o).final_state();
        o.rel_tol = 1e-9;
        o.abs_tol = 1e-11;
        const double e9 = (integrate(s0, p, o).final_state() - ref).norm();
        o.rel_tol = 1e-6;
        o.abs_tol = 1e-8;
        const double e6 = (integrate(s0, p, o).final_state() - ref).norm();
        CHECK(e9 < 1e-5);
        CHECK(e9 < e6);
    }

    TEST_CASE("dense output reproduces stored points and uniform sampling") {
        const SystemParams p = SystemParams::table1();
        SolverOptions o;
        o.t_end = 400;
        o.keep_dense = true;
        const Trajectory tr = integrate(perturbed_equilibrium(p, 1.5), p, o);
        for (std::size_t i = 0; i < tr.size(); i += 17) CHECK((tr.at(tr.times[i]) - tr.states[i]).norm() < 1e-10);
        o.keep_dense = false;
        o.output_dt = 0.5;
        const Trajectory sampled = integrate(perturbed_equilibrium(p, 1.5), p, o);
        CHECK(sampled.size() == 801);
        for (std::size_t i = 0; i < sampled.size(); ++i) CHECK(sampled.times[i] == doctest::Approx(0.5 * i));
        for (std::size_t i = 0; i < sampled.size(); i += 40) CHECK((tr.at(sampled.times[i]) - sampled.states[i]).norm() < 1e-8);
    }

    TEST_CASE("located maxima have zero x-velocity") {
        const SystemParams p = SystemParams::table1();
        SolverOptions o;
        o.t_end = 2000;
        const Trajectory tr = integrate(perturbed_equilibrium(p, 1.5), p, o);
        int checked = 0;
        for (const Event& e : tr.events) {
            const int c = (e.kind == EventKind::MaxX1 || e.kind == EventKind::MinX1) ? 0 : 2;
            const PhaseState f = vector_field(e.state, p);
            CHECK(std::abs(f[c]) < 1e-6 * std::max(1.0, vector_field(e.state, p).norm()) + 1e-7);
            ++checked;
        }
        CHECK(checked > 10);
    }

    TEST_CASE("exchange symmetry of trajectories") {
        const SystemParams p = SystemParams::symmetric(0.01, -1.1, 2.05, 1.0);
        SolverOptions o;
        o.t_end = 1000;
        const PhaseState s0 = perturbed_equilibrium(p, 1.5);
        const Trajectory u = integrate(s0, p, o);
        const Trajectory v = integrate(swap_oscillators(s0), p, o);
        CHECK((swap_oscillators(u.final_state()) - v.final_state()).norm() < 1e-9);
    }

    TEST_CASE("period of the double loop") {
        const SystemParams p = SystemParams::table1();
        SolverOptions o;
        o.t_end = 1e4;
        const Trajectory tr = integrate(perturbed_equilibrium(p, 1.5), p, o);
        const PeriodEstimate pe = detect_period(tr, Coordinate::x1);
        CHECK(pe.periodic);
        CHECK(pe.period == doctest::Approx(349.857).epsilon(2e-3));
        SolverOptions flat = o;
        const Trajectory rest = integrate(symmetric_equilibrium(p), p, flat);
        CHECK_FALSE(detect_period(rest, Coordinate::x1).periodic);
    }

    TEST_CASE("uncoupled oscillator makes one excursion and returns") {
        const SystemParams p = SystemParams::symmetric(0.01, -1.1, 0.0, 1.0);
        PhaseState s0 = symmetric_equilibrium(p);
        s0[0] = 0.0;
        SolverOptions o;
        o.t_end = 1000;
        const Trajectory tr = integrate(s0, p, o);
        double peak = -INFINITY;
        for (const PhaseState& s : tr.states) peak = std::max(peak, s[0]);
        CHECK(peak > 1.5);
        CHECK((tr.final_state() - symmetric_equilibrium(p)).norm() < 1e-3);
    }

    TEST_CASE("sustained relaxation and consistent periods") {
        const SystemParams p = SystemParams::table1();
        SolverOptions o;
        o.t_end = 1e4;
        const Trajectory tr = integrate(perturbed_equilibrium(p, 1.5), p, o);
        double lo1 = INFINITY, hi1 = -INFINITY, lo2 = INFINITY, hi2 = -INFINITY;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            if (tr.times[i] < o.t_end - 2000) continue;
            lo1 = std::min(lo1, tr.states[i][0]), hi1 = std::max(hi1, tr.states[i][0]);
            lo2 = std::min(lo2, tr.states[i][2]), hi2 = std::max(hi2, tr.states[i][2]);
        }
        CHECK(hi1 - lo1 > 2.0);
        CHECK(hi2 - lo2 > 2.0);
        const PeriodEstimate p1 = detect_period(tr, Coordinate::x1), p2 = detect_period(tr, Coordinate::x2);
        REQUIRE(p1.periodic);
        REQUIRE(p2.periodic);
        CHECK(std::abs(p1.period - p2.period) < 0.01 * p1.period);

        // Single loop: the relaxing coordinate carries the period.
        const SystemParams q = SystemParams::symmetric(0.01, -1.1, 2.05, 1.0);
        const Trajectory sl = integrate(perturbed_equilibrium(q, -1.5), q, o);
        const AttractorClass c = classify_trajectory(sl);
        REQUIRE(c.tag == AttractorTag::SingleLoop);
        const Coordinate big = c.amp_x1 > c.amp_x2 ? Coordinate::x1 : Coordinate::x2;
        const PeriodEstimate ps = detect_period(sl, big);
        CHECK(ps.periodic);
        CHECK(std::isfinite(ps.period));
        CHECK(ps.period > 0);
    }

    TEST_CASE("option validation and failures") {
        SolverOptions o;
        o.rel_tol = 0;
        CHECK_THROWS_AS(o.validate(), ConfigError);
        o = SolverOptions{};
        o.t_end = -1;
        CHECK_THROWS_AS(integrate(PhaseState::Zero(), SystemParams::table1(), o), ConfigError);
        o = SolverOptions{};
        o.blowup_bound = 2.0;
        o.t_end = 100;
        const SystemParams p = SystemParams::table1();
        CHECK_THROWS_AS(integrate(perturbed_equilibrium(p, 1.5), p, o), NumericsError);
        CHECK(parse_method("radau") == Method::RadauIIA3);
        CHECK_THROWS_AS(parse_method("euler"), ConfigError);
    }
}
