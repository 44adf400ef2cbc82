#include "cvdp/classify.hpp"
#include "cvdp/curves.hpp"
#include "cvdp/equilibria.hpp"
#include "cvdp/periodic.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace cvdp;

namespace {

const PeriodicOrbit& double_loop_seed() {
    static const PeriodicOrbit orb = [] {
        const SystemParams p = SystemParams::table1();
        return orbit_from_simulation(perturbed_equilibrium(p, 1.5), p);
    }();
    return orb;
}

bool has_double_loop(double a, double b_lo, double b_hi, double step) {
    for (double b = b_lo; b <= b_hi + 1e-9; b += step)
        if (classify_cell(a, b, {}).tag == AttractorTag::DoubleLoop) return true;
    return false;
}

}  // namespace

TEST_SUITE("curves") {
    TEST_CASE("pitchfork curve is the line b = 1 and the Hopf curves pass the one-parameter values") {
        const SystemParams p = SystemParams::table1();
        const EquilibriumBranch e0 = continue_equilibria(symmetric_equilibrium(p), p, Param::b, 0.3, 3.0);
        REQUIRE(e0.detected.front().kind == BifurcationKind::Pitchfork);
        CurveOptions co;
        co.cont.max_points = 300;
        const ParamCurve pf = continue_pitchfork_curve(e0.detected.front(), co);
        REQUIRE(pf.points.size() > 10);
        double lo = 0, hi = -2;
        for (const CurvePoint& q : pf.points) {
            CHECK(std::abs(q.b - 1.0) < 1e-6);
            lo = std::min(lo, q.a);
            hi = std::max(hi, q.a);
        }
        CHECK(lo < -1.65);
        CHECK(hi > -1.05);

        const EquilibriumBranch as = switch_branch(e0.detected.front(), 0.3, 3.0);
        const BifurcationPoint& h = as.detected.front();
        REQUIRE(h.kind == BifurcationKind::Hopf);
        const ParamCurve hc = continue_hopf_curve(h, co);
        const std::vector<double> bs = hc.b_at(-1.1);
        REQUIRE_FALSE(bs.empty());
        bool near = false;
        for (double b : bs) near = near || std::abs(b - h.param) < 1e-6;
        CHECK(near);
    }

    TEST_CASE("fixed-period curve folds in a and does not move when the period doubles") {
        const CurveOptions co;
        const PeriodicOrbit t3 = fix_period(double_loop_seed(), 3000.0, co.periodic, +1, co.fixed_period_tol);
        const ParamCurve curve = continue_fixed_period_orbit(t3, 3000.0, co);
        const std::vector<double> at = curve.b_at(-1.1);
        REQUIRE(at.size() == 1);
        CHECK(std::abs(at[0] - 2.0392) < 0.01);

        const PeriodicOrbit t6 = fix_period(t3, 6000.0, co.periodic, +1, co.fixed_period_tol);
        CHECK(t6.period == 6000.0);
        CHECK(std::abs(get(t6.params, Param::b) - at[0]) < 1e-3);

        REQUIRE(curve.fold_a.has_value());
        const double a_fold = curve.fold_a->a;
        CHECK(a_fold > co.a_min);
        CHECK(a_fold < -1.1);
        // Past the fold in a only single loops remain.
        for (double a : {a_fold - 0.05, -1.6, -1.7}) CHECK_FALSE(has_double_loop(a, 0.0, 3.0, 0.1));
    }

    TEST_CASE("SNPO bounds the double-loop region from the left") {
        const PeriodicBranch down = continue_periodic_orbits(double_loop_seed(), Param::b, 0.0, 3.0, {}, -1);
        double b_snpo = NAN;
        for (const BifurcationPoint& bp : down.detected)
            if (bp.kind == BifurcationKind::SNPO) {
                b_snpo = bp.param;
                break;
            }
        REQUIRE(std::isfinite(b_snpo));
        CHECK(b_snpo < 0.3);
        bool seen = false;
        for (double b = 0.0; b <= 0.4 + 1e-9; b += 0.02) {
            if (classify_cell(-1.1, b, {}).tag != AttractorTag::DoubleLoop) continue;
            seen = true;
            CHECK(b >= b_snpo);
        }
        CHECK(seen);
    }

    TEST_CASE("b_at interpolates and reports each crossing") {
        ParamCurve c;
        c.points = {{-1.5, 0.0}, {-1.0, 1.0}, {-1.5, 2.0}};
        const std::vector<double> bs = c.b_at(-1.25);
        REQUIRE(bs.size() == 2);
        CHECK(bs[0] == doctest::Approx(0.5));
        CHECK(bs[1] == doctest::Approx(1.5));
        CHECK(c.b_at(-0.5).empty());
    }
}
