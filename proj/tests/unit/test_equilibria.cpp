#include "cvdp/equilibria.hpp"
#include "cvdp/errors.hpp"

#include <doctest.h>

#include <cmath>

#include <algorithm>

using namespace cvdp;

namespace {

std::vector<double> located(const EquilibriumBranch& br, BifurcationKind kind) {
    std::vector<double> out;
    for (const BifurcationPoint& bp : br.detected)
        if (bp.kind == kind) out.push_back(bp.param);
    std::sort(out.begin(), out.end());
    return out;
}

EquilibriumBranch e0_branch(double a, double k, double lo, double hi) {
    const SystemParams p = SystemParams::symmetric(0.01, a, lo, k);
    return continue_equilibria(symmetric_equilibrium(p), p, Param::b, lo, hi);
}

}  // namespace

TEST_SUITE("equilibria") {
    TEST_CASE("pitchforks of E0 sit at b k = +-1") {
        // Zero eigenvalue of the antisymmetric block at b k = 1 and of the symmetric one at b k = -1.
        for (double k : {1.0, 1.5}) {
            const EquilibriumBranch br = e0_branch(-1.1, k, -1.5 / k, 3.0);
            const std::vector<double> pf = located(br, BifurcationKind::Pitchfork);
            REQUIRE(pf.size() == 2);
            CHECK(std::abs(pf[0] + 1.0 / k) < 1e-6);
            CHECK(std::abs(pf[1] - 1.0 / k) < 1e-6);
            CHECK(max_residual(br) < 1e-10);
        }
    }

    TEST_CASE("asymmetric branch carries both Hopf points and its mirror is a solution") {
        const EquilibriumBranch br = e0_branch(-1.1, 1.0, 0.0, 3.0);
        const auto it = std::find_if(br.detected.begin(), br.detected.end(),
                                     [](const BifurcationPoint& bp) { return bp.kind == BifurcationKind::Pitchfork; });
        REQUIRE(it != br.detected.end());
        const EquilibriumBranch as = switch_branch(*it, 0.0, 3.0);
        const std::vector<double> hopf = located(as, BifurcationKind::Hopf);
        REQUIRE(hopf.size() == 2);
        CHECK(std::abs(hopf[0] - 1.0041) < 5e-4);
        CHECK(std::abs(hopf[1] - 2.164) < 5e-3);
        for (const EquilibriumPoint& pt : as.points)
            if (pt.param > 1.01) CHECK(std::abs(pt.state[0] - pt.state[2]) > 1e-3);
        const EquilibriumBranch m = mirror(as);
        CHECK(max_residual(m) < 1e-10);
        for (std::size_t i = 0; i < as.points.size(); i += 25)
            CHECK((m.points[i].state - swap_oscillators(as.points[i].state)).norm() == 0.0);
    }

    TEST_CASE("Hopf eigenvalue pair is purely imaginary") {
        const EquilibriumBranch br = e0_branch(-1.1, 1.0, 0.0, 3.0);
        const EquilibriumBranch as = switch_branch(br.detected.front(), 0.0, 3.0);
        for (const BifurcationPoint& h : as.detected) {
            if (h.kind != BifurcationKind::Hopf) continue;
            double min_re = INFINITY;
            for (const Complex& ev : equilibrium_spectrum(h.state, h.params))
                if (std::abs(ev.imag()) > 1e-6) min_re = std::min(min_re, std::abs(ev.real()));
            CHECK(min_re < 1e-6);
        }
    }

    TEST_CASE("E0 does not move with b") {
        const EquilibriumBranch br = e0_branch(-1.1, 1.0, 0.0, 3.0);
        REQUIRE(br.points.size() > 10);
        const PhaseState e0 = symmetric_equilibrium(SystemParams::table1());
        CHECK(br.points.front().param == 0.0);
        CHECK((br.points.front().state - e0).norm() < 1e-14);
        for (const EquilibriumPoint& pt : br.points) CHECK((pt.state - e0).norm() < 1e-10);
        CHECK(br.points.back().param == doctest::Approx(3.0));
    }

    TEST_CASE("E0 stability along the branch") {
        const EquilibriumBranch br = e0_branch(-1.1, 1.0, 0.0, 3.0);
        for (const EquilibriumPoint& pt : br.points) {
            if (pt.param < 0.99) CHECK(pt.stable);
            if (pt.param > 1.01) CHECK_FALSE(pt.stable);
        }
    }

    TEST_CASE("Newton failure is reported") {
        const SystemParams p = SystemParams::table1();
        CHECK_THROWS_AS(solve_equilibrium(PhaseState::Constant(std::nan("")), p), NumericsError);
        // A negative tolerance can never be met.
        CHECK_THROWS_AS(solve_equilibrium(symmetric_equilibrium(p), p, -1.0), NumericsError);
        CHECK((solve_equilibrium(symmetric_equilibrium(p) + PhaseState::Constant(1e-3), p) -
               symmetric_equilibrium(p)).norm() < 1e-12);
    }
}
