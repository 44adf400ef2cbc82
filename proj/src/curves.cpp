#include "cvdp/curves.hpp"

#include "cvdp/errors.hpp"
#include "cvdp/io.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>

namespace cvdp {

namespace {

double scale_of(double T) { return std::max(1.0, T); }

double wnorm(const Vec& v, const Vec& w) { return std::sqrt(v.dot(w.cwiseProduct(v))); }

// Small systems: residual in closed form, Jacobian by central differences.
struct DenseProblem {
    std::function<Vec(const Vec&)> f;
    std::function<CurvePoint(const Vec&)> point_of;
    int ia = 0, ib = 0;

    Vec residual(const Vec& z) const { return f(z); }

    SpMat jacobian(const Vec& z) const {
        const Vec f0 = f(z);
        Eigen::MatrixXd J(f0.size(), z.size());
        for (Eigen::Index k = 0; k < z.size(); ++k) {
            const double h = 1e-6 * std::max(1.0, std::abs(z[k]));
            Vec zp = z, zm = z;
            zp[k] += h;
            zm[k] -= h;
            J.col(k) = (f(zp) - f(zm)) / (2.0 * h);
        }
        return arc::to_sparse(J);
    }

    Vec weights(const Vec& z) const { return Vec::Ones(z.size()); }
    Vec predictor(const Vec& t) const { return t; }
    double scale(const Vec&) const { return 1.0; }
    void prepare(const Vec&) {}
    bool refresh(Vec&, Vec&, const CurveOptions&) { return true; }
    CurvePoint point(const Vec& z) const { return point_of(z); }
};

// Collocation-based curve problems. With `snpo` the fold test g of A = dG/d(u, T) is
// appended; g comes from the bordered system [A B; C^T 0] (v, g) = (0, 1).
struct OrbitProblem {
    CollocationSystem sys;
    PeriodicOptions po;
    bool snpo = false;
    /// Arclength measured in (a, b) alone; the node part of a long fixed-period orbit
    /// carries rounding noise from the saddle passage.
    bool param_norm = false;
    Vec B, C;  // borders, length n_nodes + 1
    int ia = 0, ib = 0;

    struct FoldCache {
        Vec z, v, w;
        double g = NAN;
        bool ok = false;
    };
    mutable FoldCache cache;

    OrbitProblem(CollocationSystem s, PeriodicOptions o, bool fold)
        : sys(std::move(s)), po(std::move(o)), snpo(fold) {
        reindex();
    }

    void reindex() {
        ia = sys.index_of(FreeVar::of(Param::a));
        ib = sys.index_of(FreeVar::of(Param::b));
    }

    int na() const { return sys.n_nodes() + 1; }

    NodeMatrix nodes_of(const Vec& z) const {
        NodeMatrix nodes(4, sys.n_nodes() / 4);
        for (Eigen::Index c = 0; c < nodes.cols(); ++c) nodes.col(c) = z.segment<4>(4 * c);
        return nodes;
    }

    SpMat bordered(const SpMat& JG) const {
        const int n = na();
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(JG.nonZeros()) + 2 * n);
        for (int k = 0; k < n; ++k)
            for (SpMat::InnerIterator it(JG, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
        for (int i = 0; i < n; ++i) {
            if (B[i] != 0.0) trip.emplace_back(i, n, B[i]);
            if (C[i] != 0.0) trip.emplace_back(n, i, C[i]);
        }
        SpMat M(n + 1, n + 1);
        M.setFromTriplets(trip.begin(), trip.end());
        M.makeCompressed();
        return M;
    }

    /// Solves M (v, g) = (0, 1) and, when w is requested, M^T (w, g) = (0, 1).
    bool fold_test(const Vec& z, double& g, Vec* v, Vec* w) const {
        const SpMat M = bordered(sys.jacobian(z));
        Eigen::SparseLU<SpMat> lu(M);
        if (lu.info() != Eigen::Success) return false;
        Vec rhs = Vec::Zero(na() + 1);
        rhs[na()] = 1.0;
        const Vec vg = lu.solve(rhs);
        if (!vg.allFinite()) return false;
        g = vg[na()];
        if (v) *v = vg.head(na());
        if (w) {
            const SpMat Mt = M.transpose();
            Eigen::SparseLU<SpMat> lt(Mt);
            if (lt.info() != Eigen::Success) return false;
            const Vec wg = lt.solve(rhs);
            if (!wg.allFinite()) return false;
            *w = wg.head(na());
        }
        return true;
    }

    /// Approximate right and left null vectors of A by two steps of inverse iteration.
    void reset_borders(const Vec& z) {
        const SpMat JG = sys.jacobian(z);
        SpMat A = JG.leftCols(na());
        A.makeCompressed();
        Eigen::SparseLU<SpMat> lu(A);
        SpMat At = A.transpose();
        Eigen::SparseLU<SpMat> lt(At);
        if (lu.info() != Eigen::Success || lt.info() != Eigen::Success)
            throw NumericsError(NumericsFailure::NewtonDivergence, "SNPO: cannot factor the orbit Jacobian");
        Vec r = Vec::Ones(na()), l = Vec::Ones(na());
        for (int it = 0; it < 2; ++it) {
            r = lu.solve(r);
            r /= r.norm();
            l = lt.solve(l);
            l /= l.norm();
        }
        C = r;
        B = l;
        cache = {};
    }

    /// fold_test with both null vectors, remembered for the last z.
    const FoldCache& fold_at(const Vec& z) const {
        if (cache.z.size() != z.size() || cache.z != z) {
            cache.z = z;
            cache.ok = fold_test(z, cache.g, &cache.v, &cache.w);
            if (!cache.ok) cache.g = NAN;
        }
        return cache;
    }

    Vec residual(const Vec& z) const {
        Vec G = sys.residual(z);
        if (!snpo) return G;
        Vec out(G.size() + 1);
        out << G, fold_at(z).g;
        return out;
    }

    SpMat jacobian(const Vec& z) const {
        SpMat JG = sys.jacobian(z);
        if (!snpo) return JG;
        const FoldCache& fc = fold_at(z);
        const Vec& v = fc.v;
        const Vec& w = fc.w;
        Vec gz = Vec::Constant(z.size(), NAN);
        if (fc.ok) {
            // g_z = -w^T d(A v)/dz, the symmetric second derivative taken along v.
            Vec vh = Vec::Zero(z.size());
            vh.head(na()) = v;
            const double h = 1e-6 / std::max(1e-12, wnorm(vh, sys.weights(scale(z))));
            const SpMat Jp = sys.jacobian(z + h * vh), Jm = sys.jacobian(z - h * vh);
            gz = -(Jp.transpose() * w - Jm.transpose() * w) / (2.0 * h);
        }
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(JG.nonZeros()) + z.size());
        for (int k = 0; k < JG.outerSize(); ++k)
            for (SpMat::InnerIterator it(JG, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
        for (Eigen::Index k = 0; k < z.size(); ++k)
            if (gz[k] != 0.0) trip.emplace_back(JG.rows(), k, gz[k]);
        SpMat J(JG.rows() + 1, JG.cols());
        J.setFromTriplets(trip.begin(), trip.end());
        J.makeCompressed();
        return J;
    }

    double scale(const Vec& z) const { return scale_of(sys.period(z)); }
    Vec weights(const Vec& z) const {
        if (!param_norm) return sys.weights(scale(z));
        Vec w = Vec::Zero(z.size());
        w[ia] = w[ib] = 1.0;
        return w;
    }
    /// Fallback predictor: under param_norm the node part of the tangent may be dominated by
    /// noise, so only (a, b) move.
    Vec predictor(const Vec& t) const {
        if (!param_norm) return t;
        Vec d = Vec::Zero(t.size());
        d[ia] = t[ia];
        d[ib] = t[ib];
        return d;
    }

    void prepare(const Vec& z) {
        sys.set_reference(nodes_of(z));
        cache = {};
        if (!snpo) return;
        const FoldCache fc = fold_at(z);
        if (fc.ok && fc.v.norm() > 0 && fc.w.norm() > 0) {
            C = fc.v / fc.v.norm();
            B = fc.w / fc.w.norm();
        }
        cache = {};
    }

    /// Moves z and t onto a mesh adapted to z and re-corrects z on the hyperplane
    /// orthogonal to t. Leaves everything untouched on failure.
    bool refresh(Vec& z, Vec& t, const CurveOptions& o) {
        if (!po.adapt) return true;
        std::vector<double> mesh;
        try {
            mesh = adapted_mesh(sys.unpack(z), po.intervals, po.mesh_floor);
        } catch (const NumericsError&) {
            return false;
        }
        OrbitProblem trial = *this;
        const SystemParams p = sys.params(z);
        trial.sys = CollocationSystem(mesh, sys.degree(), p, sys.free(), sys.period(z));
        trial.reindex();
        const int nf = static_cast<int>(sys.free().size());
        Vec nz(trial.sys.n_unknowns()), nt(trial.sys.n_unknowns());
        const NodeMatrix zn = interpolate_nodes(sys.mesh(), sys.degree(), nodes_of(z), mesh);
        const NodeMatrix tn = interpolate_nodes(sys.mesh(), sys.degree(), nodes_of(t), mesh);
        for (Eigen::Index c = 0; c < zn.cols(); ++c) {
            nz.segment<4>(4 * c) = zn.col(c);
            nt.segment<4>(4 * c) = tn.col(c);
        }
        nz.tail(nf) = z.tail(nf);
        nt.tail(nf) = t.tail(nf);
        nt /= wnorm(nt, trial.weights(nz));
        trial.sys.set_reference(trial.nodes_of(nz));
        trial.cache = {};
        if (snpo) {
            try {
                trial.reset_borders(nz);
            } catch (const NumericsError&) {
                return false;
            }
        }
        Vec zc = nz;
        const auto res = arc::correct(trial, zc, nz, nt, 0.0, trial.weights(nz), o.cont.newton_tol,
                                      std::max(o.cont.newton_max_iter, 8), trial.scale(nz));
        if (!res.converged) return false;
        *this = std::move(trial);
        z = zc;
        t = arc::tangent(jacobian(z), nt, weights(z));
        return true;
    }

    CurvePoint point(const Vec& z) const {
        const PeriodicOrbit orb = sys.unpack(z);
        CurvePoint cp;
        cp.a = get(orb.params, Param::a);
        cp.b = get(orb.params, Param::b);
        cp.state = orb.argmax_x1();
        cp.period = orb.period;
        return cp;
    }

    PeriodicOrbit orbit(const Vec& z) const {
        PeriodicOrbit orb = sys.unpack(z);
        orb.residual = sys.residual(z).head(sys.n_nodes()).lpNorm<Eigen::Infinity>() / scale(z);
        return orb;
    }
};

struct HalfCurve {
    std::vector<CurvePoint> points;  // excluding the start point
    std::vector<CurvePoint> folds;
    std::string stop;
};

/// Tries the full tangent as predictor, then the problem's fallback predictor.
template <class P>
bool corrected(P& prob, const Vec& z, const Vec& t, double s, const CurveOptions& o, Vec& out, int* iters = nullptr) {
    const Vec w = prob.weights(z);
    const Vec fallback = prob.predictor(t);
    for (const Vec* d : {&t, &fallback}) {
        out = z + s * (*d);
        const auto res = arc::correct(prob, out, z, t, s, w, o.cont.newton_tol, std::max(o.cont.newton_max_iter, 8),
                                      prob.scale(z), o.cont.newton_max_growth);
        if (iters) *iters = res.iterations;
        if (res.converged) return true;
        if (d == &t && fallback == t) break;
    }
    return false;
}

template <class P>
bool in_box(const P& prob, const Vec& z, const CurveOptions& o) {
    const double a = z[prob.ia], b = z[prob.ib];
    return a >= o.a_min && a <= o.a_max && b >= o.b_min && b <= o.b_max;
}

/// Arclength continuation of prob from (z, t) until the curve leaves the box.
template <class P>
HalfCurve trace(P prob, Vec z, Vec t, const CurveOptions& o) {
    HalfCurve hc;
    const ContinuationOptions& c = o.cont;
    double ds = c.ds0;
    while (static_cast<int>(hc.points.size()) < c.max_points) {
        prob.prepare(z);
        Vec zn;
        int iters = 0;
        const bool ok = corrected(prob, z, t, ds, o, zn, &iters);
        Vec tn;
        if (ok) {
            tn = arc::tangent(prob.jacobian(zn), t, prob.weights(zn));
            if (tn.dot(prob.weights(z).cwiseProduct(t)) < 0.8 && ds > 4 * c.ds_min) {
                ds *= 0.5;
                continue;
            }
        }
        if (!ok) {
            ds *= 0.5;
            if (ds < c.ds_min) {
                hc.stop = "step underflow";
                return hc;
            }
            continue;
        }
        if (!in_box(prob, zn, o)) {
            hc.stop = "left parameter box";
            return hc;
        }
        if (c.detect && (t[prob.ia] > 0) != (tn[prob.ia] > 0)) {
            // Turning point in a: bisect on the sign of the tangent's a-component.
            const bool sign_lo = t[prob.ia] > 0;
            double s_lo = 0.0, s_hi = ds;
            Vec z_lo = z, z_hi = zn, zm;
            for (int it = 0; it < 60; ++it) {
                if (std::abs(z_hi[prob.ia] - z_lo[prob.ia]) < c.loc_tol && it > 0) break;
                const double s_mid = 0.5 * (s_lo + s_hi);
                if (!corrected(prob, z, t, s_mid, o, zm)) break;
                const Vec tm = arc::tangent(prob.jacobian(zm), t, prob.weights(zm));
                if ((tm[prob.ia] > 0) == sign_lo) {
                    s_lo = s_mid;
                    z_lo = zm;
                } else {
                    s_hi = s_mid;
                    z_hi = zm;
                }
            }
            hc.folds.push_back(prob.point(z_hi));
        }
        z = zn;
        t = tn;
        prob.refresh(z, t, o);
        hc.points.push_back(prob.point(z));
        if (iters <= 3) ds = std::min(ds * 1.3, c.ds_max);
    }
    hc.stop = "max points";
    return hc;
}

/// Both directions from the start point, joined into one ordered curve.
template <class P>
ParamCurve trace_both(const P& prob, const Vec& z0, const Vec& t0, const CurveOptions& o, BifurcationKind kind,
                      const SystemParams& base) {
    const HalfCurve fwd = trace(prob, z0, t0, o);
    const HalfCurve bwd = trace(prob, z0, Vec(-t0), o);
    ParamCurve pc;
    pc.kind = kind;
    pc.base = base;
    for (auto it = bwd.points.rbegin(); it != bwd.points.rend(); ++it) pc.points.push_back(*it);
    pc.points.push_back(prob.point(z0));
    pc.points.insert(pc.points.end(), fwd.points.begin(), fwd.points.end());
    pc.turning_points = bwd.folds;
    pc.turning_points.insert(pc.turning_points.end(), fwd.folds.begin(), fwd.folds.end());
    for (const CurvePoint& f : pc.turning_points)
        if (!pc.fold_a || f.a < pc.fold_a->a) pc.fold_a = f;
    pc.stop_reason = "forward: " + fwd.stop + "; backward: " + bwd.stop;
    return pc;
}

/// Tangent at z0 with the given parameter component positive.
template <class P>
Vec start_tangent(const P& prob, const Vec& z0, int ip) {
    Vec orient = Vec::Zero(z0.size());
    orient[ip] = 1.0;
    return arc::tangent(prob.jacobian(z0), orient, prob.weights(z0));
}

/// Newton on the curve problem with one parameter held at its start value.
template <class P>
void settle(P& prob, Vec& z, int ip, const CurveOptions& o, const char* what) {
    prob.prepare(z);
    Vec e = Vec::Zero(z.size());
    e[ip] = 1.0;
    const Vec z0 = z;
    const auto res = arc::correct(prob, z, z0, e, 0.0, Vec::Ones(z.size()), o.cont.newton_tol, 25, prob.scale(z));
    if (!res.converged)
        throw NumericsError(NumericsFailure::NewtonDivergence,
                            std::string(what) + ": start point did not converge (residual " + io::fmt(res.residual) + ")");
}

bool antisymmetric(const Eigen::Vector4d& v) {
    return (v + swap_oscillators(v)).norm() < 1e-6 * v.norm();
}

}  // namespace

std::vector<double> ParamCurve::b_at(double a0) const {
    std::vector<double> out;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const CurvePoint& p = points[i - 1];
        const CurvePoint& q = points[i];
        if ((p.a - a0) * (q.a - a0) > 0.0 || p.a == q.a) {
            if (p.a == a0) out.push_back(p.b);
            continue;
        }
        const double s = (a0 - p.a) / (q.a - p.a);
        out.push_back(p.b + s * (q.b - p.b));
    }
    if (!points.empty() && points.back().a == a0) out.push_back(points.back().b);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(), [](double x, double y) { return std::abs(x - y) < 1e-12; }),
              out.end());
    return out;
}

void CurveOptions::validate() const {
    if (!(a_min < a_max) || !(b_min < b_max)) throw ConfigError("curves: empty parameter box");
    if (!(cont.ds_min > 0 && cont.ds_min <= cont.ds0 && cont.ds0 <= cont.ds_max))
        throw ConfigError("continuation: need 0 < ds_min <= ds0 <= ds_max");
    periodic.validate();
}

ParamCurve continue_pitchfork_curve(const BifurcationPoint& bp, const CurveOptions& o) {
    o.validate();
    bp.params.require_identical("continue_pitchfork_curve");
    if (bp.kind != BifurcationKind::Pitchfork && bp.kind != BifurcationKind::Fold)
        throw NumericsError(NumericsFailure::NoSolution, "not a zero-eigenvalue point");
    const SystemParams base = bp.params;
    const Eigen::Matrix4d J0 = jacobian_full(bp.state, base);
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(J0, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector4d v0 = svd.matrixV().col(3);
    const bool symmetric_state = (bp.state - swap_oscillators(bp.state)).norm() < 1e-8;

    if (symmetric_state && antisymmetric(v0)) {
        // Symmetry-breaking point: on Fix(sigma) the antisymmetric block A - B of the
        // Jacobian [[A, B], [B, A]] is singular. Unknowns (x, y, a, b).
        DenseProblem prob;
        prob.ia = 2;
        prob.ib = 3;
        prob.f = [base](const Vec& z) {
            const SystemParams p = with(with(base, Param::a, z[2]), Param::b, z[3]);
            const PhaseState s(z[0], z[1], z[0], z[1]);
            const PhaseState f = vector_field(s, p);
            const Eigen::Matrix4d J = jacobian_full(s, p);
            const Eigen::Matrix2d anti = J.block<2, 2>(0, 0) - J.block<2, 2>(0, 2);
            Vec r(3);
            r << f[0], f[1] / p.eps1, anti.determinant() / p.eps1;
            return r;
        };
        prob.point_of = [base](const Vec& z) {
            CurvePoint cp;
            cp.a = z[2];
            cp.b = z[3];
            cp.state = PhaseState(z[0], z[1], z[0], z[1]);
            return cp;
        };
        Vec z0(4);
        z0 << bp.state[0], bp.state[1], get(base, Param::a), get(base, Param::b);
        settle(prob, z0, prob.ia, o, "pitchfork curve");
        ParamCurve pc = trace_both(prob, z0, start_tangent(prob, z0, prob.ia), o, BifurcationKind::Pitchfork, base);
        return pc;
    }

    // Generic fold: F = 0 and the bordered determinant test, borders from the SVD.
    const Eigen::Vector4d wl = svd.matrixU().col(3);
    DenseProblem prob;
    prob.ia = 4;
    prob.ib = 5;
    prob.f = [base, v0, wl](const Vec& z) {
        const SystemParams p = with(with(base, Param::a, z[4]), Param::b, z[5]);
        const PhaseState s = z.head<4>();
        Eigen::Matrix<double, 5, 5> M = Eigen::Matrix<double, 5, 5>::Zero();
        M.block<4, 4>(0, 0) = jacobian_full(s, p);
        M.block<4, 1>(0, 4) = wl;
        M.block<1, 4>(4, 0) = v0.transpose();
        Eigen::Matrix<double, 5, 1> rhs = Eigen::Matrix<double, 5, 1>::Zero();
        rhs[4] = 1.0;
        const Eigen::Matrix<double, 5, 1> vg = M.fullPivLu().solve(rhs);
        Vec r(5);
        r.head<4>() = vector_field(s, p);
        r[4] = vg[4];
        return r;
    };
    prob.point_of = [](const Vec& z) {
        CurvePoint cp;
        cp.a = z[4];
        cp.b = z[5];
        cp.state = z.head<4>();
        return cp;
    };
    Vec z0(6);
    z0 << bp.state, get(base, Param::a), get(base, Param::b);
    settle(prob, z0, prob.ia, o, "fold curve");
    return trace_both(prob, z0, start_tangent(prob, z0, prob.ia), o, bp.kind, base);
}

ParamCurve continue_hopf_curve(const BifurcationPoint& bp, const CurveOptions& o) {
    o.validate();
    if (bp.kind != BifurcationKind::Hopf) throw NumericsError(NumericsFailure::NoSolution, "not a Hopf point");
    const SystemParams base = bp.params;
    Eigen::EigenSolver<Eigen::Matrix4d> es(jacobian_full(bp.state, base));
    int k = 0;
    for (int i = 1; i < 4; ++i)
        if (es.eigenvalues()[i].imag() > es.eigenvalues()[k].imag()) k = i;
    const double omega = es.eigenvalues()[k].imag();
    if (!(omega > 0)) throw NumericsError(NumericsFailure::NoSolution, "no complex pair at the Hopf point");
    Eigen::Vector4cd q = es.eigenvectors().col(k);
    const Eigen::Vector4d c = q.real() / q.real().norm();
    q /= c.cast<Complex>().dot(q);  // c . q = 1 (dot conjugates the first argument, c is real)

    // Unknowns (x, vr, vi, omega, a, b); J (vr + i vi) = i omega (vr + i vi), c.vr = 1, c.vi = 0.
    DenseProblem prob;
    prob.ia = 13;
    prob.ib = 14;
    prob.f = [base, c](const Vec& z) {
        const SystemParams p = with(with(base, Param::a, z[13]), Param::b, z[14]);
        const PhaseState s = z.head<4>();
        const Eigen::Vector4d vr = z.segment<4>(4), vi = z.segment<4>(8);
        const double om = z[12];
        const Eigen::Matrix4d J = jacobian_full(s, p);
        Vec r(14);
        r.head<4>() = vector_field(s, p);
        r.segment<4>(4) = J * vr + om * vi;
        r.segment<4>(8) = J * vi - om * vr;
        r[12] = c.dot(vr) - 1.0;
        r[13] = c.dot(vi);
        return r;
    };
    prob.point_of = [](const Vec& z) {
        CurvePoint cp;
        cp.a = z[13];
        cp.b = z[14];
        cp.state = z.head<4>();
        cp.period = 2.0 * M_PI / z[12];
        return cp;
    };
    Vec z0(15);
    z0 << bp.state, q.real(), q.imag(), omega, get(base, Param::a), get(base, Param::b);
    settle(prob, z0, prob.ia, o, "Hopf curve");
    return trace_both(prob, z0, start_tangent(prob, z0, prob.ia), o, BifurcationKind::Hopf, base);
}

ParamCurve continue_snpo_curve(const PeriodicOrbit& fold_orbit, const CurveOptions& o) {
    o.validate();
    fold_orbit.params.require_identical("continue_snpo_curve");
    CollocationSystem sys(fold_orbit.mesh, fold_orbit.degree, fold_orbit.params,
                          {FreeVar::T(), FreeVar::of(Param::a), FreeVar::of(Param::b)});
    OrbitProblem prob(std::move(sys), o.periodic, true);
    Vec z0 = prob.sys.pack(fold_orbit);
    prob.sys.set_reference(fold_orbit);
    prob.reset_borders(z0);
    settle(prob, z0, prob.ia, o, "SNPO curve");
    return trace_both(prob, z0, start_tangent(prob, z0, prob.ia), o, BifurcationKind::SNPO, fold_orbit.params);
}

namespace {

/// Newton at fixed period with b free, alternating with mesh adaptation.
bool solve_fixed_period(PeriodicOrbit& orb, double period, const PeriodicOptions& o, double tol) {
    PeriodicOrbit cur = orb;
    const int passes = o.adapt ? 3 : 1;
    for (int pass = 0; pass < passes; ++pass) {
        CollocationSystem sys(cur.mesh, cur.degree, cur.params, {FreeVar::of(Param::b)}, period);
        sys.set_reference(cur.nodes);
        Vec z = sys.pack(cur);
        const auto res = arc::solve_square(sys, z, tol, 20, scale_of(period));
        if (!res.converged) return false;
        cur = sys.unpack(z);
        cur.residual = sys.residual(z).head(sys.n_nodes()).lpNorm<Eigen::Infinity>() / scale_of(period);
        if (pass + 1 < passes) {
            try {
                cur = remesh(cur, adapted_mesh(cur, o.intervals, o.mesh_floor));
            } catch (const NumericsError&) {
                return false;
            }
        }
    }
    orb = cur;
    return true;
}

}  // namespace

PeriodicOrbit fix_period(const PeriodicOrbit& seed, double period, const PeriodicOptions& opts, int direction,
                         double tol) {
    PeriodicOrbit cur = seed;
    if (cur.period < opts.homoclinic_threshold && cur.period < period) {
        // Along the branch until the homoclinic approach is flagged or the target is reached.
        PeriodicOptions o = opts;
        o.period_max = period;
        o.floquet = false;
        const PeriodicBranch br = continue_periodic_orbits(seed, Param::b, -1e3, 1e3, o, direction);
        cur = br.orbits.back();
    }
    // Close to the homoclinic b(T) oscillates while T grows monotonically, so the rest
    // is natural continuation in T.
    double dT = 0.02 * cur.period;
    while (std::abs(cur.period - period) > 1e-12 * period) {
        const double Tn = cur.period < period ? std::min(period, cur.period + dT) : std::max(period, cur.period - dT);
        PeriodicOrbit next = cur;
        next.period = Tn;
        if (solve_fixed_period(next, Tn, opts, tol)) {
            cur = next;
            dT = std::min(dT * 1.5, 0.1 * Tn);
        } else {
            dT *= 0.5;
            if (dT < 1e-8 * period)
                throw NumericsError(NumericsFailure::StepUnderflow,
                                    "period continuation stalled at T = " + io::fmt(cur.period));
        }
    }
    if (!solve_fixed_period(cur, period, opts, tol))
        throw NumericsError(NumericsFailure::NewtonDivergence, "fixed-period orbit did not converge");
    return cur;
}

ParamCurve continue_fixed_period_orbit(const PeriodicOrbit& seed, double period, const CurveOptions& o) {
    o.validate();
    seed.params.require_identical("continue_fixed_period_orbit");
    const PeriodicOrbit start = std::abs(seed.period - period) > 1e-9 * period
                                    ? fix_period(seed, period, o.periodic, +1, o.fixed_period_tol)
                                    : seed;
    CurveOptions oc = o;
    oc.cont.newton_tol = o.fixed_period_tol;
    oc.cont.newton_max_iter = std::max(oc.cont.newton_max_iter, 20);
    oc.cont.newton_max_growth = std::max(oc.cont.newton_max_growth, 5);
    CollocationSystem sys(start.mesh, start.degree, start.params, {FreeVar::of(Param::a), FreeVar::of(Param::b)},
                          period);
    OrbitProblem prob(std::move(sys), o.periodic, false);
    prob.param_norm = true;
    Vec z0 = prob.sys.pack(start);
    prob.sys.set_reference(start);
    settle(prob, z0, prob.ia, oc, "fixed-period curve");
    return trace_both(prob, z0, start_tangent(prob, z0, prob.ia), oc, BifurcationKind::HomoclinicApprox,
                      start.params);
}

void write_curve_csv(const ParamCurve& c, const std::string& path, const std::string& comment) {
    io::CsvWriter w(path, comment, {"a", "b", "period"});
    for (const CurvePoint& p : c.points) w.cell(p.a).cell(p.b).cell(p.period).end_row();
    w.close();
}

}  // namespace cvdp
