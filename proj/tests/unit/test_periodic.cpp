#include "cvdp/classify.hpp"
#include "cvdp/equilibria.hpp"
#include "cvdp/errors.hpp"
#include "cvdp/periodic.hpp"

#include <doctest.h>

using namespace cvdp;

namespace {

double trivial_gap(const PeriodicOrbit& orb) { return std::abs(orb.multipliers[orb.trivial_index()] - Complex(1.0)); }

const PeriodicOrbit& double_loop() {
    static const PeriodicOrbit orb = [] {
        const SystemParams p = SystemParams::table1();
        return orbit_from_simulation(perturbed_equilibrium(p, 1.5), p);
    }();
    return orb;
}

}  // namespace

TEST_SUITE("periodic") {
    TEST_CASE("double loop at Table-1 parameters") {
        const PeriodicOrbit& orb = double_loop();
        CHECK(orb.period == doctest::Approx(349.857).epsilon(1e-4));
        CHECK(orb.floquet_ok);
        CHECK(orb.stable);
        CHECK(trivial_gap(orb) < 1e-3);
        CHECK(collocation_residual(orb) < 1e-9);
        // The two oscillators take turns: the orbit is its own exchange image half a period later.
        const PeriodicOrbit m = mirror(orb);
        CHECK(collocation_residual(m) < 1e-9);
        CHECK(orb.distance_to(m.argmax_x1()) < 1e-6);
    }

    TEST_CASE("collocation orbit matches direct simulation") {
        const PeriodicOrbit& orb = double_loop();
        SolverOptions so;
        so.t_end = orb.period;
        so.rel_tol = 1e-11;
        so.abs_tol = 1e-13;
        const PhaseState x0 = orb.eval(0.0);
        const Trajectory tr = integrate(x0, orb.params, so);
        CHECK((tr.final_state() - x0).norm() < 1e-4);
        for (std::size_t i = 0; i < tr.size(); i += 97) CHECK(orb.distance_to(tr.states[i]) < 1e-4);
    }

    TEST_CASE("trivial multiplier on every orbit of a continued branch") {
        PeriodicOptions po;
        po.cont.max_points = 40;
        const PeriodicBranch br = continue_periodic_orbits(double_loop(), Param::b, 0.0, 3.0, po, +1);
        REQUIRE(br.size() >= 10);
        for (const PeriodicOrbit& orb : br.orbits) CHECK(trivial_gap(orb) < 1e-3);
        CHECK(max_residual(br) < 1e-8);
        // Orbit at an intermediate parameter value, converged afresh.
        const double mid = 0.5 * (br.param.front() + br.param.back());
        const PeriodicOrbit at = orbit_at(br, mid, po);
        CHECK(get(at.params, Param::b) == mid);
        CHECK(trivial_gap(at) < 1e-3);
    }

    TEST_CASE("family from the first Hopf point starts with the Hopf period") {
        const SystemParams p = SystemParams::table1();
        const EquilibriumBranch e0 = continue_equilibria(symmetric_equilibrium(p), p, Param::b, 0.3, 3.0);
        const EquilibriumBranch as = switch_branch(e0.detected.front(), 0.3, 3.0);
        const BifurcationPoint& h = as.detected.front();
        REQUIRE(h.kind == BifurcationKind::Hopf);
        PeriodicOptions po;
        po.cont.max_points = 30;
        const PeriodicBranch br = continue_from_hopf(h, 0.3, 3.0, po);
        REQUIRE(br.size() > 5);
        double omega = 0;
        for (const Complex& ev : h.spectrum) omega = std::max(omega, ev.imag());
        CHECK(br.orbits.front().period == doctest::Approx(2 * M_PI / omega).epsilon(1e-2));
        for (const PeriodicOrbit& orb : br.orbits) CHECK(trivial_gap(orb) < 1e-3);
    }

    TEST_CASE("non-periodic input is rejected") {
        const SystemParams p = SystemParams::table1();
        CHECK_THROWS_AS(orbit_from_simulation(symmetric_equilibrium(p), p), NumericsError);
        PeriodicOptions po;
        po.intervals = 2;
        CHECK_THROWS_AS(po.validate(), ConfigError);
    }
}
