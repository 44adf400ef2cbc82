#include "cvdp/errors.hpp"
#include "cvdp/model.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace cvdp;

namespace {

PhaseState random_state(std::mt19937& rng, double scale = 2.5) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return PhaseState(u(rng), u(rng), u(rng), u(rng));
}

SystemParams random_params(std::mt19937& rng) {
    std::uniform_real_distribution<double> eps(0.005, 0.05), a(-1.8, -0.9), b(-1.5, 3.0), k(0.5, 2.0);
    SystemParams p;
    p.eps1 = eps(rng), p.eps2 = eps(rng);
    p.a1 = a(rng), p.a2 = a(rng);
    p.b1 = b(rng), p.b2 = b(rng);
    p.k1 = k(rng), p.k2 = k(rng);
    return p;
}

SystemParams swapped(const SystemParams& p) {
    SystemParams q = p;
    std::swap(q.eps1, q.eps2);
    std::swap(q.a1, q.a2);
    std::swap(q.b1, q.b2);
    std::swap(q.k1, q.k2);
    return q;
}

}  // namespace

TEST_SUITE("model") {
    TEST_CASE("Jacobian matches central differences") {
        std::mt19937 rng(7);
        for (int trial = 0; trial < 200; ++trial) {
            const SystemParams p = random_params(rng);
            const PhaseState x = random_state(rng);
            const JacobianFull J = jacobian_full(x, p);
            const double h = 1e-6;
            for (int c = 0; c < 4; ++c) {
                PhaseState xp = x, xm = x;
                xp[c] += h;
                xm[c] -= h;
                const PhaseState col = (vector_field(xp, p) - vector_field(xm, p)) / (2 * h);
                CHECK((col - J.col(c)).lpNorm<Eigen::Infinity>() < 1e-6 * std::max(1.0, J.col(c).norm()));
            }
        }
    }

    TEST_CASE("parameter derivatives match central differences") {
        std::mt19937 rng(11);
        for (int trial = 0; trial < 50; ++trial) {
            const SystemParams p = SystemParams::symmetric(0.01, -1.2 + 0.1 * (trial % 5), 0.2 * (trial % 13), 1.0);
            const PhaseState x = random_state(rng);
            for (Param w : {Param::eps, Param::a, Param::b, Param::k}) {
                const double h = 1e-6, v = get(p, w);
                const PhaseState fd = (vector_field(x, with(p, w, v + h)) - vector_field(x, with(p, w, v - h))) / (2 * h);
                CHECK((fd - param_derivative(x, p, w)).lpNorm<Eigen::Infinity>() < 1e-6);
            }
        }
    }

    TEST_CASE("exchange symmetry of the vector field") {
        std::mt19937 rng(3);
        for (int trial = 0; trial < 200; ++trial) {
            const PhaseState x = random_state(rng);
            const SystemParams sym = SystemParams::symmetric(0.01, -1.3, 0.15 * trial / 10.0, 1.2);
            CHECK((vector_field(swap_oscillators(x), sym) - swap_oscillators(vector_field(x, sym))).norm() == 0.0);
            // Non-identical oscillators: the exchange also swaps the parameter copies.
            const SystemParams p = random_params(rng);
            CHECK((vector_field(swap_oscillators(x), swapped(p)) - swap_oscillators(vector_field(x, p))).norm() <
                  1e-14);
        }
    }

    TEST_CASE("deviation form about E0 agrees with the plain field") {
        std::mt19937 rng(5);
        for (int trial = 0; trial < 100; ++trial) {
            const SystemParams p = SystemParams::symmetric(0.01, -1.0 - 0.007 * trial, 0.03 * trial, 1.0);
            const PhaseState w = random_state(rng, 1.0);
            const PhaseState e0 = symmetric_equilibrium(p);
            CHECK((vector_field_about_e0(w, p) - vector_field(e0 + w, p)).norm() < 1e-13);
        }
        const SystemParams p = SystemParams::table1();
        CHECK(vector_field_about_e0(PhaseState::Zero(), p).norm() == 0.0);
    }

    TEST_CASE("E0 is an equilibrium with the closed-form y") {
        for (double a : {-1.7, -1.3, -1.1, -1.0}) {
            for (double b : {0.0, 0.3, 2.0}) {
                const SystemParams p = SystemParams::symmetric(0.01, a, b, 1.0);
                const PhaseState e0 = symmetric_equilibrium(p);
                CHECK(vector_field(e0, p).norm() < 1e-15);
                CHECK(e0[1] == doctest::Approx(a * a * a / 3.0 - a).epsilon(1e-15));
            }
        }
        CHECK(symmetric_equilibrium(SystemParams::table1())[1] == doctest::Approx(0.6563).epsilon(5e-5));
    }

    TEST_CASE("E0 Jacobian splits into symmetric and antisymmetric blocks") {
        const double eps = 0.01, k = 1.3;
        for (double a : {-1.6, -1.1}) {
            for (double b : {0.3, 1.0, 2.5}) {
                const SystemParams p = SystemParams::symmetric(eps, a, b, k);
                const JacobianFull J = jacobian_full(symmetric_equilibrium(p), p);
                Eigen::Matrix2d anti, sym;
                anti << 1 - a * a, 1, eps * (b * k - 1), 0;
                sym << 1 - a * a, 1, -eps * (1 + b * k), 0;
                const Eigen::Vector2d u(0.7, -0.4);
                const PhaseState va(u[0], u[1], -u[0], -u[1]), vs(u[0], u[1], u[0], u[1]);
                const PhaseState ja = J * va, js = J * vs;
                const Eigen::Vector2d ea = anti * u, es = sym * u;
                CHECK((ja - PhaseState(ea[0], ea[1], -ea[0], -ea[1])).norm() < 1e-14);
                CHECK((js - PhaseState(es[0], es[1], es[0], es[1])).norm() < 1e-14);
            }
        }
    }

    TEST_CASE("single-oscillator and forced Hopf points") {
        CHECK(single_oscillator_hopf_a() == -1.0);
        const SystemParams p = SystemParams::table1();
        const double x2 = forced_oscillator_hopf_x2(p);
        CHECK(std::abs(x2 + 1.447) <= 1e-3);
        // Oscillator 1 sits at x1 = -1 when x2 is frozen at that value.
        CHECK(std::abs(p.a1 + 1.0 + p.b1 * std::tanh(p.k2 * (p.a2 - x2))) < 1e-14);
        CHECK_THROWS_AS(forced_oscillator_hopf_x2(SystemParams::symmetric(0.01, -1.1, 0.05, 1.0)), NumericsError);
    }

    TEST_CASE("reference values of the field, E0 and the E0 Jacobian") {
        const SystemParams p = SystemParams::table1();
        CHECK(vector_field(symmetric_equilibrium(p), p).norm() < 1e-15);
        const PhaseState f0 = vector_field(PhaseState::Zero(), p);
        CHECK(f0[0] == 0.0);
        CHECK(f0[2] == 0.0);
        CHECK(f0[1] == doctest::Approx(-0.01340150).epsilon(1e-7));
        CHECK(f0[3] == f0[1]);

        CHECK(symmetric_equilibrium(SystemParams::symmetric(0.01, 0.0, 0.3, 1.0)).norm() == 0.0);
        const PhaseState e1 = symmetric_equilibrium(SystemParams::symmetric(0.01, -1.0, 0.3, 1.0));
        // 2/3 has no exact double; the closed form lands within one ulp of it.
        CHECK(std::abs(e1[1] - 2.0 / 3.0) <= std::numeric_limits<double>::epsilon());
        CHECK(e1[0] == -1.0);

        const JacobianFull J = jacobian_full(symmetric_equilibrium(p), p);
        CHECK(J(0, 0) == doctest::Approx(-0.21).epsilon(1e-14));
        const SystemParams u = SystemParams::symmetric(0.01, -1.1, 0.0, 1.0);
        const JacobianFull Ju = jacobian_full(PhaseState(0.3, -0.2, -1.4, 0.9), u);
        CHECK(Ju.block<2, 2>(0, 2).norm() == 0.0);
        CHECK(Ju.block<2, 2>(2, 0).norm() == 0.0);
    }

    TEST_CASE("single oscillator at a = -1 sits at its Hopf point") {
        const SystemParams p = SystemParams::symmetric(0.02, single_oscillator_hopf_a(), 0.0, 1.0);
        const JacobianFull J = jacobian_full(symmetric_equilibrium(p), p);
        const Eigen::Matrix2d Ji = J.block<2, 2>(0, 0);
        CHECK(Ji.trace() == 0.0);
        CHECK(Ji.determinant() == doctest::Approx(0.02).epsilon(1e-14));
    }

    TEST_CASE("forced Hopf point edge cases") {
        try {
            forced_oscillator_hopf_x2(SystemParams::symmetric(0.01, -1.1, 0.0, 1.0));
            FAIL("no exception for b = 0");
        } catch (const NumericsError& e) {
            CHECK(e.kind() == NumericsFailure::NoSolution);
        }
        for (double b : {0.1, 0.3, 2.0}) CHECK(forced_oscillator_hopf_x2(SystemParams::symmetric(0.01, -1.0, b, 1.0)) == -1.0);
    }

    TEST_CASE("parameter validation") {
        SystemParams p;
        CHECK_NOTHROW(p.validate());
        p.eps1 = 0.0;
        CHECK_THROWS_AS(p.validate(), NumericsError);
        p = SystemParams{};
        p.k2 = -1.0;
        CHECK_THROWS_AS(p.validate(), NumericsError);
        p = SystemParams{};
        p.a2 = -1.2;
        CHECK_FALSE(p.identical());
        CHECK_THROWS_AS(symmetric_equilibrium(p), NumericsError);
        CHECK(parse_param("b") == Param::b);
        CHECK_THROWS_AS(parse_param("c"), ConfigError);
    }
}
