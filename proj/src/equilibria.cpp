#include "cvdp/equilibria.hpp"

#include "cvdp/errors.hpp"
#include "cvdp/io.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace cvdp {

namespace {

struct EquilibriumProblem {
    SystemParams base;
    Param free;

    SystemParams params(const Vec& z) const { return with(base, free, z[4]); }

    Vec residual(const Vec& z) const {
        const PhaseState x = z.head<4>();
        return vector_field(x, params(z));
    }

    Eigen::Matrix<double, 4, 5> dense_jacobian(const Vec& z) const {
        const PhaseState x = z.head<4>();
        const SystemParams p = params(z);
        Eigen::Matrix<double, 4, 5> J;
        J.leftCols<4>() = jacobian_full(x, p);
        J.col(4) = param_derivative(x, p, free);
        return J;
    }

    SpMat jacobian(const Vec& z) const { return arc::to_sparse(dense_jacobian(z)); }
};

Vec pack(const PhaseState& x, double lambda) {
    Vec z(5);
    z.head<4>() = x;
    z[4] = lambda;
    return z;
}

EquilibriumPoint make_point(const EquilibriumProblem& prob, const Vec& z, const Vec& t) {
    EquilibriumPoint pt;
    pt.state = z.head<4>();
    pt.param = z[4];
    pt.eigenvalues = equilibrium_spectrum(pt.state, prob.params(z));
    pt.n_unstable = static_cast<int>(
        std::count_if(pt.eigenvalues.begin(), pt.eigenvalues.end(), [](const Complex& l) { return l.real() > 0; }));
    pt.stable = pt.n_unstable == 0;
    pt.tangent = t;
    pt.residual = prob.residual(z).lpNorm<Eigen::Infinity>();
    return pt;
}

// Real test functions. det J vanishes at zero eigenvalues; the bialternate product
// prod_{i<j} (l_i + l_j) vanishes where a pair sums to zero (Hopf or neutral saddle).
double det_test(const std::array<Complex, 4>& ev) {
    Complex p = 1.0;
    for (const Complex& l : ev) p *= l;
    return p.real();
}

double bialternate_test(const std::array<Complex, 4>& ev) {
    Complex p = 1.0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) p *= ev[i] + ev[j];
    return p.real();
}

// Point on the curve at arclength s from `from` along its tangent.
bool point_at(const EquilibriumProblem& prob, const EquilibriumPoint& from, double s, const ContinuationOptions& o,
              Vec& z) {
    const Vec z0 = pack(from.state, from.param);
    const Vec t0 = from.tangent;
    z = z0 + s * t0;
    return arc::correct(prob, z, z0, t0, s, Vec::Ones(5), std::min(o.newton_tol, 1e-11), 20).converged;
}

// Right singular vector of the smallest singular value.
PhaseState null_vector(const Eigen::Matrix4d& J) {
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(J, Eigen::ComputeFullV);
    return svd.matrixV().col(3);
}

}  // namespace

std::array<Complex, 4> equilibrium_spectrum(const PhaseState& x, const SystemParams& p) {
    Eigen::EigenSolver<Eigen::Matrix4d> es(jacobian_full(x, p), false);
    std::array<Complex, 4> ev;
    for (int i = 0; i < 4; ++i) ev[i] = es.eigenvalues()[i];
    std::sort(ev.begin(), ev.end(), [](const Complex& l, const Complex& r) {
        if (l.real() != r.real()) return l.real() > r.real();
        return l.imag() > r.imag();
    });
    return ev;
}

PhaseState solve_equilibrium(PhaseState x, const SystemParams& p, double tol) {
    for (int it = 0; it < 50; ++it) {
        const PhaseState f = vector_field(x, p);
        if (f.lpNorm<Eigen::Infinity>() < tol) return x;
        const PhaseState dx = jacobian_full(x, p).fullPivLu().solve(-f);
        x += dx;
        if (!x.allFinite()) break;
    }
    throw NumericsError(NumericsFailure::NewtonDivergence, "equilibrium Newton did not converge");
}

EquilibriumBranch continue_equilibria(const PhaseState& start, const SystemParams& p, Param free, double lo,
                                      double hi, const ContinuationOptions& o, int direction,
                                      const Tangent5* initial_tangent) {
    p.validate();
    EquilibriumProblem prob{p, free};
    const double lambda0 = get(p, free);
    Vec z = pack(start, lambda0);
    if (prob.residual(z).lpNorm<Eigen::Infinity>() > o.newton_tol) {
        z.head<4>() = solve_equilibrium(start, p, o.newton_tol);
    }
    const Vec w = Vec::Ones(5);

    Vec orient = Vec::Zero(5);
    if (initial_tangent) {
        orient = *initial_tangent;
    } else {
        orient[4] = direction >= 0 ? 1.0 : -1.0;
    }
    Vec t = arc::tangent(prob.jacobian(z), orient, w);

    EquilibriumBranch br;
    br.free = free;
    br.base = p;
    br.points.push_back(make_point(prob, z, t));

    double ds = o.ds0;
    while (static_cast<int>(br.points.size()) < o.max_points) {
        Vec zn = z + ds * t;
        const auto res = arc::correct(prob, zn, z, t, ds, w, o.newton_tol, o.newton_max_iter);
        if (!res.converged) {
            ds *= 0.5;
            if (ds < o.ds_min) {
                if (br.points.size() == 1) throw NumericsError(NumericsFailure::StepUnderflow, "first step failed");
                br.stop_reason = "step underflow";
                break;
            }
            continue;
        }
        const Vec tn = arc::tangent(prob.jacobian(zn), t, w);
        if (zn[4] < lo || zn[4] > hi) {
            // Close the branch on the boundary itself, solved at the fixed edge value.
            const double edge = zn[4] > hi ? hi : lo;
            if (z[4] != edge) {
                const double f = (edge - z[4]) / (zn[4] - z[4]);
                const PhaseState guess = z.head<4>() + f * (zn.head<4>() - z.head<4>());
                try {
                    const Vec ze = pack(solve_equilibrium(guess, with(p, free, edge), o.newton_tol), edge);
                    if ((ze.head<4>() - guess).norm() < 10 * ds)
                        br.points.push_back(make_point(prob, ze, arc::tangent(prob.jacobian(ze), tn, w)));
                } catch (const NumericsError&) {
                }
            }
            br.stop_reason = "left parameter range";
            break;
        }
        z = zn;
        t = tn;
        br.points.push_back(make_point(prob, z, t));
        if (res.iterations <= 3) ds = std::min(ds * 1.5, o.ds_max);
    }
    if (br.stop_reason.empty()) br.stop_reason = "max points";
    if (o.detect) br.detected = detect_equilibrium_bifurcations(br, o);
    return br;
}

std::vector<BifurcationPoint> detect_equilibrium_bifurcations(const EquilibriumBranch& br,
                                                              const ContinuationOptions& o) {
    std::vector<BifurcationPoint> out;
    if (br.points.size() < 3) return out;
    EquilibriumProblem prob{br.base, br.free};

    for (std::size_t i = 0; i + 1 < br.points.size(); ++i) {
        const EquilibriumPoint& A = br.points[i];
        const EquilibriumPoint& B = br.points[i + 1];
        const Vec zA = pack(A.state, A.param), zB = pack(B.state, B.param);
        const double s_end = Vec(A.tangent).dot(zB - zA);

        for (int which = 0; which < 2; ++which) {
            auto test = [&](const std::array<Complex, 4>& ev) {
                return which == 0 ? det_test(ev) : bialternate_test(ev);
            };
            const double fa = test(A.eigenvalues), fb = test(B.eigenvalues);
            if (!(fa * fb < 0)) continue;

            double s_lo = 0.0, s_hi = s_end, f_lo = fa;
            Vec z_lo = zA, z_hi = zB;
            for (int it = 0; it < 200 && std::abs(z_hi[4] - z_lo[4]) >= o.loc_tol; ++it) {
                const double s_mid = 0.5 * (s_lo + s_hi);
                Vec zm;
                if (!point_at(prob, A, s_mid, o, zm)) break;
                const double fm = test(equilibrium_spectrum(zm.head<4>(), prob.params(zm)));
                if ((fm < 0) == (f_lo < 0)) {
                    s_lo = s_mid;
                    z_lo = zm;
                    f_lo = fm;
                } else {
                    s_hi = s_mid;
                    z_hi = zm;
                }
            }
            const Vec zc = 0.5 * (z_lo + z_hi);
            BifurcationPoint bp;
            bp.free = br.free;
            bp.param = zc[4];
            bp.params = prob.params(zc);
            bp.state = zc.head<4>();
            const auto ev = equilibrium_spectrum(bp.state, bp.params);
            bp.spectrum.assign(ev.begin(), ev.end());

            if (which == 0) {
                const bool turned = (A.tangent[4] > 0) != (B.tangent[4] > 0);
                bp.kind = turned ? BifurcationKind::Fold : BifurcationKind::Pitchfork;
                // Symmetry type of the null vector decides which pitchfork this is.
                const PhaseState v = null_vector(jacobian_full(bp.state, bp.params));
                const double anti = (swap_oscillators(v) + v).norm();
                const double sym = (swap_oscillators(v) - v).norm();
                bp.note = anti < sym ? "antisymmetric null vector (symmetry-breaking)"
                                     : "symmetric null vector (within the symmetric subspace)";
                if (turned) bp.note = "turning point; " + bp.note;
            } else {
                // Require a genuinely complex pair near the imaginary axis.
                double best = INFINITY, im = 0.0;
                for (const Complex& l : ev) {
                    if (std::abs(l.imag()) > 1e-9 && std::abs(l.real()) < best) {
                        best = std::abs(l.real());
                        im = std::abs(l.imag());
                    }
                }
                if (!(best < 1e-4)) continue;  // neutral saddle, not a Hopf point
                bp.kind = BifurcationKind::Hopf;
                bp.period = 2.0 * M_PI / im;
                bp.note = "omega=" + io::fmt(im);
            }
            out.push_back(bp);
        }
    }
    std::sort(out.begin(), out.end(), [](const BifurcationPoint& l, const BifurcationPoint& r) { return l.param < r.param; });
    return out;
}

EquilibriumBranch switch_branch(const BifurcationPoint& bp, double lo, double hi, const ContinuationOptions& o,
                                double step, int side) {
    EquilibriumProblem prob{bp.params, bp.free};
    PhaseState v = null_vector(jacobian_full(bp.state, bp.params));
    if (v[0] < 0) v = -v;
    if (side < 0) v = -v;

    Tangent5 t0;
    t0.head<4>() = v;
    t0[4] = 0.0;
    const Vec z0 = pack(bp.state, bp.param);
    Vec z = z0 + step * Vec(t0);
    const auto res = arc::correct(prob, z, z0, t0, step, Vec::Ones(5), o.newton_tol, 30);
    if (!res.converged) throw NumericsError(NumericsFailure::NewtonDivergence, "branch switching failed");
    const SystemParams p = prob.params(z);
    Tangent5 orient = arc::tangent(prob.jacobian(z), t0, Vec::Ones(5));
    EquilibriumBranch br = continue_equilibria(z.head<4>(), p, bp.free, lo, hi, o, +1, &orient);
    return br;
}

EquilibriumBranch mirror(const EquilibriumBranch& in) {
    EquilibriumBranch out = in;
    out.label = in.label + "_mirror";
    for (EquilibriumPoint& pt : out.points) {
        pt.state = swap_oscillators(pt.state);
        const PhaseState ts = pt.tangent.head<4>();
        pt.tangent.head<4>() = swap_oscillators(ts);
    }
    for (BifurcationPoint& bp : out.detected) bp.state = swap_oscillators(bp.state);
    return out;
}

double max_residual(const EquilibriumBranch& br) {
    double r = 0.0;
    for (const EquilibriumPoint& pt : br.points)
        r = std::max(r, vector_field(pt.state, br.params_at(pt.param)).lpNorm<Eigen::Infinity>());
    return r;
}

void write_equilibrium_branch_csv(const EquilibriumBranch& br, const std::string& path, const std::string& comment) {
    io::CsvWriter w(path, comment,
                    {std::string(to_string(br.free)), "max_x1", "x1", "y1", "x2", "y2", "stable", "n_unstable",
                     "re_ev1", "im_ev1", "re_ev2", "im_ev2", "re_ev3", "im_ev3", "re_ev4", "im_ev4"});
    for (const EquilibriumPoint& pt : br.points) {
        w.cell(pt.param).cell(pt.state[0]);
        for (int i = 0; i < 4; ++i) w.cell(pt.state[i]);
        w.cell(pt.stable ? 1L : 0L).cell(static_cast<long>(pt.n_unstable));
        for (const Complex& l : pt.eigenvalues) w.cell(l.real()).cell(l.imag());
        w.end_row();
    }
    w.close();
}

}  // namespace cvdp
