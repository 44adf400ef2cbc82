#include "cvdp/gspt.hpp"

#include "cvdp/errors.hpp"
#include "cvdp/io.hpp"

#include <algorithm>
#include <cmath>

namespace cvdp {

std::string_view to_string(FoldLineId id) {
    switch (id) {
        case FoldLineId::L1Minus: return "L1-";
        case FoldLineId::L1Plus: return "L1+";
        case FoldLineId::L2Minus: return "L2-";
        case FoldLineId::L2Plus: return "L2+";
    }
    return "?";
}

std::string_view to_string(FoldedKind k) {
    switch (k) {
        case FoldedKind::FoldedSaddle: return "FoldedSaddle";
        case FoldedKind::FoldedNode: return "FoldedNode";
        case FoldedKind::FoldedFocus: return "FoldedFocus";
    }
    return "?";
}

std::string_view to_string(FoldedStability s) {
    switch (s) {
        case FoldedStability::Stable: return "stable";
        case FoldedStability::Unstable: return "unstable";
        case FoldedStability::Neutral: return "neutral";
        case FoldedStability::NotApplicable: return "n/a";
    }
    return "?";
}

std::array<FoldLine, 4> fold_lines() {
    return {{{FoldLineId::L1Minus, 0, -1.0},
             {FoldLineId::L1Plus, 0, 1.0},
             {FoldLineId::L2Minus, 1, -1.0},
             {FoldLineId::L2Plus, 1, 1.0}}};
}

PhaseState critical_manifold_lift(double x1, double x2) { return PhaseState(x1, -cubic(x1), x2, -cubic(x2)); }

Eigen::Matrix2d layer_jacobian(double x1, double x2) {
    Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
    J(0, 0) = 1.0 - x1 * x1;
    J(1, 1) = 1.0 - x2 * x2;
    return J;
}

Point2 slow_rhs(double x1, double x2, const SystemParams& p) {
    return {p.a1 - x1 + p.b1 * std::tanh(p.k2 * (p.a2 - x2)), p.a2 - x2 + p.b2 * std::tanh(p.k1 * (p.a1 - x1))};
}

Point2 reduced_rhs(double x1, double x2, const SystemParams& p) {
    const Point2 g = slow_rhs(x1, x2, p);
    return {g[0] / (x1 * x1 - 1.0), g[1] / (x2 * x2 - 1.0)};
}

Point2 desingularized_rhs(double x1, double x2, const SystemParams& p) {
    const Point2 g = slow_rhs(x1, x2, p);
    return {(x2 * x2 - 1.0) * g[0], (x1 * x1 - 1.0) * g[1]};
}

Eigen::Matrix2d desingularized_jacobian(double x1, double x2, const SystemParams& p) {
    const Point2 g = slow_rhs(x1, x2, p);
    const double s2 = 1.0 / std::cosh(p.k2 * (p.a2 - x2));
    const double s1 = 1.0 / std::cosh(p.k1 * (p.a1 - x1));
    const double dg1_dx2 = -p.b1 * p.k2 * s2 * s2;
    const double dg2_dx1 = -p.b2 * p.k1 * s1 * s1;
    Eigen::Matrix2d J;
    J(0, 0) = -(x2 * x2 - 1.0);
    J(0, 1) = 2.0 * x2 * g[0] + (x2 * x2 - 1.0) * dg1_dx2;
    J(1, 0) = 2.0 * x1 * g[1] + (x1 * x1 - 1.0) * dg2_dx1;
    J(1, 1) = -(x1 * x1 - 1.0);
    return J;
}

FoldedKind classify_folded(const std::array<std::complex<double>, 2>& ev) {
    if (ev[0].imag() != 0.0) return FoldedKind::FoldedFocus;
    return ev[0].real() * ev[1].real() > 0 ? FoldedKind::FoldedNode : FoldedKind::FoldedSaddle;
}

namespace {

std::array<std::complex<double>, 2> eigen2(const Eigen::Matrix2d& J) {
    const double half = 0.5 * J.trace() + 0.0;  // + 0.0 turns -0 into +0
    const double disc = half * half - J.determinant();
    if (disc >= 0) {
        const double r = std::sqrt(disc);
        // Larger-magnitude root first, the other from the product to avoid cancellation.
        const double big = half + std::copysign(r, half);
        const double small = big != 0.0 ? J.determinant() / big : 0.0;
        return {std::complex<double>(std::min(big, small)), std::complex<double>(std::max(big, small))};
    }
    const double im = std::sqrt(-disc);
    return {std::complex<double>(half, -im), std::complex<double>(half, im)};
}

FoldedStability stability_of(FoldedKind kind, const std::array<std::complex<double>, 2>& ev) {
    if (kind == FoldedKind::FoldedSaddle) return FoldedStability::NotApplicable;
    const double scale = std::max(std::abs(ev[0]), std::abs(ev[1]));
    const double re = ev[0].real();
    if (std::abs(re) <= 1e-12 * std::max(1.0, scale)) return FoldedStability::Neutral;
    return re < 0 ? FoldedStability::Stable : FoldedStability::Unstable;
}

/// Equilibrium of the full system near x, by Newton on (g1, g2).
bool near_true_equilibrium(const Point2& x, const SystemParams& p) {
    Point2 z = x;
    for (int it = 0; it < 40; ++it) {
        const Point2 g = slow_rhs(z[0], z[1], p);
        if (g.lpNorm<Eigen::Infinity>() < 1e-14) break;
        const double s2 = 1.0 / std::cosh(p.k2 * (p.a2 - z[1]));
        const double s1 = 1.0 / std::cosh(p.k1 * (p.a1 - z[0]));
        Eigen::Matrix2d J;
        J << -1.0, -p.b1 * p.k2 * s2 * s2, -p.b2 * p.k1 * s1 * s1, -1.0;
        if (std::abs(J.determinant()) < 1e-300) return false;
        z -= J.inverse() * g;
        if (!z.allFinite() || (z - x).norm() > 1.0) return false;
    }
    return slow_rhs(z[0], z[1], p).lpNorm<Eigen::Infinity>() < 1e-12 && (z - x).norm() < 1e-8;
}

/// Zero of g on the line x_c = s: g1 = 0 on an L1 line (solve for x2), g2 = 0 on L2.
bool g_crossing(const FoldLine& L, const SystemParams& p, Point2& out) {
    const double s = L.value;
    if (L.coordinate == 0) {
        if (p.b1 == 0.0) return false;
        const double r = (s - p.a1) / p.b1;
        if (!(std::abs(r) < 1.0)) return false;
        out = {s, p.a2 - std::atanh(r) / p.k2};
    } else {
        if (p.b2 == 0.0) return false;
        const double r = (s - p.a2) / p.b2;
        if (!(std::abs(r) < 1.0)) return false;
        out = {p.a1 - std::atanh(r) / p.k1, s};
    }
    return true;
}

}  // namespace

std::vector<FoldedSingularity> find_folded_singularities(const SystemParams& p) {
    p.validate();
    struct Candidate {
        Point2 x;
        std::vector<FoldLineId> lines;
    };
    std::vector<Candidate> cands;
    auto add = [&](const Point2& x, FoldLineId id) {
        for (Candidate& c : cands)
            if ((c.x - x).lpNorm<Eigen::Infinity>() < 1e-12) {
                if (std::find(c.lines.begin(), c.lines.end(), id) == c.lines.end()) c.lines.push_back(id);
                return;
            }
        cands.push_back({x, {id}});
    };
    const auto lines = fold_lines();
    for (const FoldLine& L : lines) {
        // F vanishes where the line meets a fold line of the other coordinate.
        for (const FoldLine& M : lines) {
            if (M.coordinate == L.coordinate) continue;
            add(L.coordinate == 0 ? Point2(L.value, M.value) : Point2(M.value, L.value), L.which);
        }
        Point2 x;
        if (g_crossing(L, p, x)) add(x, L.which);
    }

    std::vector<FoldedSingularity> out;
    for (Candidate& c : cands) {
        if (near_true_equilibrium(c.x, p)) continue;
        FoldedSingularity fs;
        fs.location = c.x;
        std::sort(c.lines.begin(), c.lines.end());
        fs.lines = c.lines;
        fs.eigenvalues = eigen2(desingularized_jacobian(c.x[0], c.x[1], p));
        fs.kind = classify_folded(fs.eigenvalues);
        fs.stability = stability_of(fs.kind, fs.eigenvalues);
        out.push_back(fs);
    }
    std::sort(out.begin(), out.end(), [](const FoldedSingularity& u, const FoldedSingularity& v) {
        return u.location[0] != v.location[0] ? u.location[0] < v.location[0] : u.location[1] < v.location[1];
    });
    return out;
}

void write_folded_csv(const std::vector<FoldedSingularity>& fs, const std::string& path, const std::string& comment) {
    io::CsvWriter w(path, comment,
                    {"x1", "x2", "fold_line", "kind", "stability", "re_ev1", "im_ev1", "re_ev2", "im_ev2"});
    for (const FoldedSingularity& f : fs) {
        std::string lines;
        for (FoldLineId id : f.lines) {
            if (!lines.empty()) lines += '|';
            lines += to_string(id);
        }
        w.cell(f.location[0]).cell(f.location[1]).cell(lines).cell(to_string(f.kind)).cell(to_string(f.stability));
        for (const auto& e : f.eigenvalues) w.cell(e.real()).cell(e.imag());
        w.end_row();
    }
    w.close();
}

}  // namespace cvdp
