#include "cvdp/classify.hpp"
#include "cvdp/errors.hpp"

#include <doctest.h>

using namespace cvdp;

namespace {

AttractorClass run(double a, double b, double delta, bool mirrored = false) {
    SweepOptions o;
    o.perturbation = delta;
    o.mirrored = mirrored;
    return classify_cell(a, b, o);
}

}  // namespace

TEST_SUITE("classify") {
    TEST_CASE("reference attractors at a = -1.1") {
        const AttractorClass dbl = run(-1.1, 0.3, 1.5);
        CHECK(dbl.tag == AttractorTag::DoubleLoop);
        CHECK(dbl.alternating);
        CHECK(dbl.major_peaks_x1 >= 2);
        CHECK(std::abs(dbl.major_peaks_x1 - dbl.major_peaks_x2) <= 1);

        const AttractorClass rest = run(-1.1, 0.3, 0.0);
        CHECK(rest.tag == AttractorTag::SteadyState);

        const AttractorClass single = run(-1.1, 2.05, 1.5);
        CHECK(single.tag == AttractorTag::SingleLoop);

        const AttractorClass asym = run(-1.1, 3.0, 1.5);
        CHECK(asym.tag == AttractorTag::SteadyState);
        const SystemParams p = SystemParams::symmetric(0.01, -1.1, 3.0, 1.0);
        CHECK((asym.final_state - symmetric_equilibrium(p)).norm() > 0.1);
    }

    TEST_CASE("mirrored initial condition mirrors the single loop") {
        const AttractorClass u = run(-1.1, 2.05, 1.5, false);
        const AttractorClass v = run(-1.1, 2.05, 1.5, true);
        REQUIRE(u.tag == AttractorTag::SingleLoop);
        REQUIRE(v.tag == AttractorTag::SingleLoop);
        CHECK(u.detail != v.detail);
        CHECK(u.amp_x1 == doctest::Approx(v.amp_x2).epsilon(1e-6));
        CHECK(u.amp_x2 == doctest::Approx(v.amp_x1).epsilon(1e-6));
    }

    TEST_CASE("steady cells end at rest") {
        SweepOptions o;
        o.a_min = -1.7, o.a_max = -1.0, o.n_a = 3;
        o.b_min = 0.0, o.b_max = 3.0, o.n_b = 4;
        const ClassificationMap m = sweep(o);
        int steady = 0;
        for (std::size_t i = 0; i < m.a_values.size(); ++i)
            for (std::size_t j = 0; j < m.b_values.size(); ++j) {
                const AttractorClass& c = m.at(i, j);
                if (c.tag != AttractorTag::SteadyState) continue;
                ++steady;
                const SystemParams p = SystemParams::symmetric(0.01, m.a_values[i], m.b_values[j], 1.0);
                CHECK(vector_field(c.final_state, p).norm() < 1e-6);
            }
        CHECK(steady > 0);
    }

    TEST_CASE("parallel sweep equals the serial reference") {
        SweepOptions o;
        o.n_a = 3;
        o.n_b = 5;
        o.solver.t_end = 3000;
        o.classify.min_duration = 3000;
        const ClassificationMap par = sweep(o), ser = sweep_serial(o);
        REQUIRE(par.cells.size() == ser.cells.size());
        for (std::size_t i = 0; i < par.cells.size(); ++i) {
            CHECK(par.cells[i].tag == ser.cells[i].tag);
            CHECK(par.cells[i].amp_x1 == ser.cells[i].amp_x1);
            CHECK(par.cells[i].amp_x2 == ser.cells[i].amp_x2);
        }
    }

    TEST_CASE("mirrored 5x5 subgrid swaps loop sides and keeps tags") {
        SweepOptions o;
        o.a_min = -1.3, o.a_max = -1.05, o.n_a = 5;
        o.b_min = 1.3, o.b_max = 2.3, o.n_b = 5;
        const ClassificationMap u = sweep(o);
        o.mirrored = true;
        const ClassificationMap v = sweep(o);
        int singles = 0;
        for (std::size_t i = 0; i < u.cells.size(); ++i) {
            const AttractorClass &x = u.cells[i], &y = v.cells[i];
            CHECK(x.tag == y.tag);
            if (x.tag != AttractorTag::SingleLoop || y.tag != AttractorTag::SingleLoop) continue;
            ++singles;
            CHECK(x.detail != y.detail);
        }
        CHECK(singles > 0);
    }

    TEST_CASE("short runs and bad grids are rejected") {
        const SystemParams p = SystemParams::table1();
        SolverOptions so;
        so.t_end = 100;
        const Trajectory tr = integrate(perturbed_equilibrium(p, 1.5), p, so);
        CHECK_THROWS_AS(classify_trajectory(tr), NumericsError);
        SweepOptions o;
        o.n_a = 1;
        CHECK_THROWS_AS(o.validate(), ConfigError);
        o = SweepOptions{};
        o.b_max = o.b_min;
        CHECK_THROWS_AS(sweep(o), ConfigError);
    }
}
