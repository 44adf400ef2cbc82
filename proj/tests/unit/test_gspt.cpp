#include "cvdp/gspt.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace cvdp;
using Complex = std::complex<double>;

namespace {

/// Roots of g1(s, x2) in x2 (an L1 line) or g2(x1, s) in x1 (an L2 line), by scan and bisection.
std::vector<Point2> crossings_by_bisection(const FoldLine& L, const SystemParams& p) {
    auto g = [&](double u) {
        const Point2 x = L.coordinate == 0 ? Point2(L.value, u) : Point2(u, L.value);
        return slow_rhs(x[0], x[1], p)[L.coordinate];
    };
    std::vector<Point2> out;
    const double lo = -8, hi = 8;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        double u0 = lo + (hi - lo) * i / n, u1 = lo + (hi - lo) * (i + 1) / n;
        if ((g(u0) > 0) == (g(u1) > 0)) continue;
        for (int it = 0; it < 200 && u1 - u0 > 1e-15; ++it) {
            const double m = 0.5 * (u0 + u1);
            ((g(m) > 0) == (g(u0) > 0) ? u0 : u1) = m;
        }
        const double u = 0.5 * (u0 + u1);
        out.push_back(L.coordinate == 0 ? Point2(L.value, u) : Point2(u, L.value));
    }
    return out;
}

bool listed(const std::vector<FoldedSingularity>& fs, const Point2& x, double tol) {
    return std::any_of(fs.begin(), fs.end(), [&](const FoldedSingularity& f) { return (f.location - x).norm() < tol; });
}

}  // namespace

TEST_SUITE("gspt") {
    TEST_CASE("desingularized Jacobian matches central differences") {
        std::mt19937 rng(13);
        std::uniform_real_distribution<double> u(-3, 3), b(-1, 3), a(-1.7, -1);
        for (int trial = 0; trial < 300; ++trial) {
            SystemParams p = SystemParams::symmetric(0.01, a(rng), b(rng), 1.0);
            p.b2 = b(rng);
            p.k1 = 0.8;
            const double x1 = u(rng), x2 = u(rng), h = 1e-6;
            const Eigen::Matrix2d J = desingularized_jacobian(x1, x2, p);
            const Point2 c0 = (desingularized_rhs(x1 + h, x2, p) - desingularized_rhs(x1 - h, x2, p)) / (2 * h);
            const Point2 c1 = (desingularized_rhs(x1, x2 + h, p) - desingularized_rhs(x1, x2 - h, p)) / (2 * h);
            const double scale = std::max(1.0, J.norm());
            CHECK((c0 - J.col(0)).norm() < 1e-6 * scale);
            CHECK((c1 - J.col(1)).norm() < 1e-6 * scale);
        }
    }

    TEST_CASE("desingularization rescales time by det of the layer Jacobian") {
        std::mt19937 rng(17);
        std::uniform_real_distribution<double> u(-3, 3);
        const SystemParams p = SystemParams::table1();
        int flips = 0;
        for (int trial = 0; trial < 500; ++trial) {
            const double x1 = u(rng), x2 = u(rng);
            if (std::abs(x1 * x1 - 1) < 1e-3 || std::abs(x2 * x2 - 1) < 1e-3) continue;
            const double det = layer_jacobian(x1, x2).determinant();
            const Point2 R = reduced_rhs(x1, x2, p), F = desingularized_rhs(x1, x2, p);
            CHECK((F - det * R).norm() < 1e-12 * std::max(1.0, F.norm()));
            // Orientation is reversed exactly where det < 0.
            if (F.norm() > 1e-9) {
                const bool same = F.dot(R) > 0;
                CHECK(same == (det > 0));
                flips += !same;
            }
        }
        CHECK(flips > 0);
    }

    TEST_CASE("critical manifold lift has zero fast component") {
        const SystemParams p = SystemParams::table1();
        for (double x1 : {-2.5, -1.0, 0.3, 1.7})
            for (double x2 : {-1.9, 0.0, 2.2}) {
                const PhaseState s = critical_manifold_lift(x1, x2);
                const PhaseState f = vector_field(s, p);
                CHECK(std::abs(f[0]) < 1e-15);
                CHECK(std::abs(f[2]) < 1e-15);
            }
        CHECK(layer_jacobian(1.0, 0.2).determinant() == 0.0);
    }

    TEST_CASE("reference values on the critical manifold") {
        const SystemParams p = SystemParams::table1();
        CHECK(critical_manifold_lift(0, 0).norm() == 0.0);
        CHECK((critical_manifold_lift(-1.1, -1.1) - symmetric_equilibrium(p)).norm() < 1e-15);
        CHECK((layer_jacobian(0, 0) - Eigen::Matrix2d::Identity()).norm() == 0.0);
        const Eigen::Matrix2d L = layer_jacobian(-1.1, -1.1);
        CHECK(L(0, 0) == doctest::Approx(-0.21).epsilon(1e-14));
        CHECK(L(1, 1) == L(0, 0));
        CHECK(L(0, 1) == 0.0);
        for (double v : {-1.0, 1.0}) {
            CHECK(layer_jacobian(v, 0.37).determinant() == 0.0);
            CHECK(layer_jacobian(-2.2, v).determinant() == 0.0);
        }

        CHECK(std::abs(slow_rhs(-1, -1.4466, p)[0]) < 1e-4);
        CHECK(slow_rhs(-1.1, -1.1, p).norm() == 0.0);
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> u(-3, 3);
        for (int i = 0; i < 200; ++i) {
            const double x1 = u(rng), x2 = u(rng);
            CHECK(slow_rhs(x1, x2, p)[0] == slow_rhs(x2, x1, p)[1]);
            const PhaseState f = vector_field(critical_manifold_lift(x1, x2), p);
            CHECK(std::abs(f[0]) < 1e-15);
            CHECK(std::abs(f[2]) < 1e-15);
        }
    }

    TEST_CASE("kind of each singularity") {
        auto kind_at = [](const std::vector<FoldedSingularity>& fs, const Point2& x) {
            const auto it = std::find_if(fs.begin(), fs.end(),
                                         [&](const FoldedSingularity& f) { return (f.location - x).norm() < 1e-3; });
            REQUIRE(it != fs.end());
            return it->kind;
        };
        const std::vector<FoldedSingularity> fs = find_folded_singularities(SystemParams::table1());
        for (const Point2& x : {Point2(-1, -1), Point2(-1, -1.4466), Point2(-1.4466, -1), Point2(1, 1)})
            CHECK(kind_at(fs, x) == FoldedKind::FoldedSaddle);
        for (const Point2& x : {Point2(-1, 1), Point2(1, -1)}) CHECK(kind_at(fs, x) == FoldedKind::FoldedFocus);
        const std::vector<FoldedSingularity> f205 =
            find_folded_singularities(SystemParams::symmetric(0.01, -1.1, 2.05, 1.0));
        CHECK(kind_at(f205, Point2(-1, -1)) == FoldedKind::FoldedSaddle);
    }

    TEST_CASE("six folded singularities at Table-1 parameters") {
        const SystemParams p = SystemParams::table1();
        const std::vector<FoldedSingularity> fs = find_folded_singularities(p);
        REQUIRE(fs.size() == 6);
        int saddles = 0, foci = 0;
        for (const FoldedSingularity& f : fs) {
            saddles += f.kind == FoldedKind::FoldedSaddle;
            foci += f.kind == FoldedKind::FoldedFocus;
            CHECK(desingularized_rhs(f.location[0], f.location[1], p).norm() < 1e-12);
        }
        CHECK(saddles == 4);
        CHECK(foci == 2);
        CHECK(listed(fs, Point2(-1.4466, -1), 1e-3));
        CHECK(listed(fs, Point2(-1, -1.4466), 1e-3));
        CHECK(listed(fs, Point2(1, 1), 1e-12));
        for (const FoldedSingularity& f : fs)
            if (f.location == Point2(1, 1)) CHECK(f.kind == FoldedKind::FoldedSaddle);
    }

    TEST_CASE("closed-form crossings agree with bisection") {
        for (double a : {-1.6, -1.3, -1.1, -1.02})
            for (double b : {0.3, 0.8, 1.5, 2.05, 2.9}) {
                const SystemParams p = SystemParams::symmetric(0.01, a, b, 1.0);
                const std::vector<FoldedSingularity> fs = find_folded_singularities(p);
                for (const FoldLine& L : fold_lines())
                    for (const Point2& x : crossings_by_bisection(L, p)) CHECK(listed(fs, x, 1e-9));
            }
    }

    TEST_CASE("singularity set is invariant under the exchange") {
        for (double b : {0.3, 1.2, 2.05}) {
            const SystemParams p = SystemParams::symmetric(0.01, -1.25, b, 1.0);
            const std::vector<FoldedSingularity> fs = find_folded_singularities(p);
            for (const FoldedSingularity& f : fs) {
                const Point2 m(f.location[1], f.location[0]);
                const auto it = std::find_if(fs.begin(), fs.end(),
                                             [&](const FoldedSingularity& g) { return (g.location - m).norm() < 1e-12; });
                REQUIRE(it != fs.end());
                CHECK(it->kind == f.kind);
                CHECK(std::abs(it->eigenvalues[0] - f.eigenvalues[0]) < 1e-12);
            }
        }
    }

    TEST_CASE("stable foci near E0 at b = 2.05") {
        const SystemParams p = SystemParams::symmetric(0.01, -1.1, 2.05, 1.0);
        int stable_foci = 0;
        for (const FoldedSingularity& f : find_folded_singularities(p)) {
            if (f.kind != FoldedKind::FoldedFocus || (f.location - Point2(-1.1, -1.1)).norm() > 0.2) continue;
            CHECK(f.stability == FoldedStability::Stable);
            ++stable_foci;
        }
        CHECK(stable_foci == 2);
    }

    TEST_CASE("classification from eigenvalues") {
        CHECK(classify_folded({Complex(-1, 0), Complex(2, 0)}) == FoldedKind::FoldedSaddle);
        CHECK(classify_folded({Complex(-1, 0), Complex(-2, 0)}) == FoldedKind::FoldedNode);
        CHECK(classify_folded({Complex(-1, -1), Complex(-1, 1)}) == FoldedKind::FoldedFocus);
    }
}
