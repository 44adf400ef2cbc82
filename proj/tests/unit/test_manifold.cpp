#include "cvdp/errors.hpp"
#include "cvdp/manifold.hpp"

#include <doctest.h>

using namespace cvdp;

TEST_SUITE("manifold") {
    TEST_CASE("unstable direction of E0 is antisymmetric and unit") {
        const SystemParams p = SystemParams::symmetric(0.01, -1.1, 2.05, 1.0);
        ManifoldOptions mo;
        mo.solver.t_end = 2000;
        const ManifoldBranch mb = unstable_manifold(p, mo);
        CHECK(mb.direction.norm() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK((mb.direction + swap_oscillators(mb.direction)).norm() < 1e-14);
        CHECK(mb.direction[0] > 0);
        CHECK(mb.eigenvalue > 0);
        const PhaseState Jv = jacobian_full(mb.equilibrium, p) * mb.direction;
        CHECK((Jv - mb.eigenvalue * mb.direction).norm() < 1e-10);
        // The two branches are exchange images of each other.
        const PhaseState u = mb.branches[0].final_state(), v = mb.branches[1].final_state();
        CHECK((swap_oscillators(u) - v).norm() < 1e-6);
    }

    TEST_CASE("no manifold when E0 is stable") {
        CHECK_THROWS_AS(unstable_manifold(SystemParams::table1()), NumericsError);
        SystemParams q = SystemParams::symmetric(0.01, -1.1, 2.05, 1.0);
        q.a2 = -1.2;
        CHECK_THROWS_AS(unstable_manifold(q), NumericsError);
        ManifoldOptions mo;
        mo.offset = 0;
        CHECK_THROWS_AS(mo.validate(), ConfigError);
    }
}
