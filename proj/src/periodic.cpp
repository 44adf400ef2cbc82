#include "cvdp/periodic.hpp"

#include "cvdp/equilibria.hpp"
#include "cvdp/errors.hpp"
#include "cvdp/io.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cvdp {

namespace {

double scale_of(double T) { return std::max(1.0, T); }

NodeMatrix node_part(const CollocationSystem& sys, const Vec& z) {
    NodeMatrix nodes(4, sys.n_nodes() / 4);
    for (Eigen::Index c = 0; c < nodes.cols(); ++c) nodes.col(c) = z.segment<4>(4 * c);
    return nodes;
}

void set_node_part(const NodeMatrix& nodes, Vec& z) {
    for (Eigen::Index c = 0; c < nodes.cols(); ++c) z.segment<4>(4 * c) = nodes.col(c);
}

double wnorm(const Vec& v, const Vec& w) { return std::sqrt(v.dot(w.cwiseProduct(v))); }

/// Nontrivial multipliers outside the unit circle.
int outside(const PeriodicOrbit& orb) {
    if (!orb.floquet_ok) return 0;
    const int t = orb.trivial_index();
    int n = 0;
    for (int i = 0; i < 4; ++i)
        if (i != t && std::abs(orb.multipliers[i]) > 1.0) ++n;
    return n;
}

/// Nontrivial multiplier closest to the unit circle.
Complex critical_multiplier(const PeriodicOrbit& orb) {
    const int t = orb.trivial_index();
    Complex best = 0.0;
    double gap = INFINITY;
    for (int i = 0; i < 4; ++i) {
        const double g = std::abs(std::abs(orb.multipliers[i]) - 1.0);
        if (i != t && g < gap) {
            gap = g;
            best = orb.multipliers[i];
        }
    }
    return best;
}

double saddle_distance(const PeriodicOrbit& orb) {
    const auto eq = nearest_equilibrium(orb);
    if (!eq) return NAN;
    return orb.distance_to(*eq);
}

struct Stepper {
    const PeriodicOptions& o;
    Param free;
    double lo, hi;
    CollocationSystem sys;
    Vec z, t;
    int ip;  // index of the parameter unknown

    Stepper(const PeriodicOptions& opts, Param f, double l, double h, CollocationSystem s, Vec z0, Vec t0)
        : o(opts), free(f), lo(l), hi(h), sys(std::move(s)), z(std::move(z0)), t(std::move(t0)),
          ip(sys.index_of(FreeVar::of(f))) {}

    Vec weights() const { return sys.weights(scale_of(sys.period(z))); }

    /// Corrected point at arclength s from (z, t). Reference is the current orbit.
    bool point_at(double s, Vec& out, int* iters = nullptr) {
        const Vec w = weights();
        sys.set_reference(node_part(sys, z));
        out = z + s * t;
        const auto res = arc::correct(sys, out, z, t, s, w, o.cont.newton_tol, std::max(o.cont.newton_max_iter, 8),
                                      scale_of(sys.period(z)));
        if (iters) *iters = res.iterations;
        return res.converged;
    }

    PeriodicOrbit make_orbit(const Vec& zz) const {
        PeriodicOrbit orb = sys.unpack(zz);
        if (o.floquet) attach_floquet(orb, sys, zz);
        orb.residual = sys.residual(zz).head(sys.n_nodes()).lpNorm<Eigen::Infinity>() / scale_of(orb.period);
        return orb;
    }

    Vec tangent_at(const Vec& zz, const Vec& orient) const {
        return arc::tangent(sys.jacobian(zz), orient, sys.weights(scale_of(sys.period(zz))));
    }

    /// Moves the current point, tangent and the freshly corrected zn onto a mesh adapted
    /// to zn and re-corrects zn there. Leaves everything untouched on failure.
    bool adapt_step(double ds, Vec& zn) {
        std::vector<double> mesh;
        try {
            mesh = adapted_mesh(sys.unpack(zn), o.intervals, o.mesh_floor);
        } catch (const NumericsError&) {
            return false;
        }
        Stepper trial = *this;
        trial.remesh_to(mesh);
        Vec zt(trial.sys.n_unknowns());
        const int nf = static_cast<int>(sys.free().size());
        set_node_part(interpolate_nodes(sys.mesh(), sys.degree(), node_part(sys, zn), mesh), zt);
        zt.tail(nf) = zn.tail(nf);
        const Vec w = trial.weights();
        trial.sys.set_reference(node_part(trial.sys, trial.z));
        const auto res = arc::correct(trial.sys, zt, trial.z, trial.t, ds, w, o.cont.newton_tol,
                                      std::max(o.cont.newton_max_iter, 8), scale_of(trial.sys.period(zt)));
        if (!res.converged) return false;
        sys = std::move(trial.sys);
        ip = trial.ip;
        z = std::move(trial.z);
        t = std::move(trial.t);
        zn = std::move(zt);
        return true;
    }

    void remesh_to(const std::vector<double>& mesh) {
        CollocationSystem ns(mesh, sys.degree(), sys.params(z), sys.free(), sys.period(z));
        Vec nz(ns.n_unknowns()), nt(ns.n_unknowns());
        const int nf = static_cast<int>(sys.free().size());
        set_node_part(interpolate_nodes(sys.mesh(), sys.degree(), node_part(sys, z), mesh), nz);
        set_node_part(interpolate_nodes(sys.mesh(), sys.degree(), node_part(sys, t), mesh), nt);
        nz.tail(nf) = z.tail(nf);
        nt.tail(nf) = t.tail(nf);
        sys = std::move(ns);
        ip = sys.index_of(FreeVar::of(free));
        z = nz;
        t = nt / wnorm(nt, weights());
    }
};

BifurcationPoint make_bp(BifurcationKind kind, Param free, const PeriodicOrbit& orb) {
    BifurcationPoint bp;
    bp.kind = kind;
    bp.free = free;
    bp.param = get(orb.params, free);
    bp.params = orb.params;
    bp.state = orb.argmax_x1();
    bp.period = orb.period;
    bp.spectrum.assign(orb.multipliers.begin(), orb.multipliers.end());
    return bp;
}

/// Bisection on s in (0, ds) for a change of `test` between the current point and the
/// next one. Returns the orbit closest to the change.
template <class Test>
PeriodicOrbit localize(Stepper& st, double ds, const Test& test, int value_lo, double loc_tol) {
    double s_lo = 0.0, s_hi = ds;
    Vec z_lo = st.z, z_hi;
    st.point_at(ds, z_hi);
    Vec zm;
    for (int it = 0; it < 60; ++it) {
        if (std::abs(z_hi[st.ip] - z_lo[st.ip]) < loc_tol && it > 0) break;
        const double s_mid = 0.5 * (s_lo + s_hi);
        if (!st.point_at(s_mid, zm)) break;
        if (test(zm) == value_lo) {
            s_lo = s_mid;
            z_lo = zm;
        } else {
            s_hi = s_mid;
            z_hi = zm;
        }
    }
    return st.make_orbit(z_hi);
}

PeriodicBranch run_branch(Stepper& st, PeriodicBranch br, double ds) {
    const PeriodicOptions& o = st.o;
    const ContinuationOptions& c = o.cont;
    if (br.orbits.empty()) {
        br.orbits.push_back(st.make_orbit(st.z));
        br.param.push_back(st.z[st.ip]);
        br.saddle_distance.push_back(saddle_distance(br.orbits.back()));
    }
    int homoclinic_run = 0;
    while (static_cast<int>(br.orbits.size()) < c.max_points) {
        Vec zn;
        int iters = 0;
        const bool ok = st.point_at(ds, zn, &iters);
        Vec tn;
        if (ok) {
            tn = st.tangent_at(zn, st.t);
            const Vec w = st.weights();
            if (tn.dot(w.cwiseProduct(st.t)) < 0.8 && ds > 4 * c.ds_min) {
                ds *= 0.5;
                continue;
            }
        }
        if (!ok) {
            ds *= 0.5;
            if (ds < c.ds_min) {
                br.stop_reason = "step underflow";
                break;
            }
            continue;
        }
        if (zn[st.ip] < st.lo || zn[st.ip] > st.hi) {
            br.stop_reason = "left parameter range";
            break;
        }
        if (o.adapt && st.adapt_step(ds, zn)) tn = st.tangent_at(zn, st.t);
        PeriodicOrbit orb = st.make_orbit(zn);
        const PeriodicOrbit& prev = br.orbits.back();

        if (c.detect) {
            // Fold of the branch in the parameter: a multiplier passes through +1.
            if ((st.t[st.ip] > 0) != (tn[st.ip] > 0)) {
                const bool sign_lo = st.t[st.ip] > 0;
                auto test = [&](const Vec& zz) { return (st.tangent_at(zz, st.t)[st.ip] > 0) == sign_lo ? 0 : 1; };
                PeriodicOrbit at = localize(st, ds, test, 0, c.loc_tol);
                BifurcationPoint bp = make_bp(BifurcationKind::SNPO, st.free, at);
                bp.note = "fold of periodic orbits";
                br.detected.push_back(bp);
                br.detected_orbits.push_back(at);
            }
            if (o.floquet && prev.floquet_ok && orb.floquet_ok) {
                const int n0 = outside(prev), n1 = outside(orb);
                if (n0 != n1) {
                    auto test = [&](const Vec& zz) { return outside(st.make_orbit(zz)) == n0 ? 0 : 1; };
                    PeriodicOrbit at = localize(st, ds, test, 0, c.loc_tol);
                    const Complex mu = critical_multiplier(at);
                    // Real crossings at +1 are folds (reported above); at -1 they are
                    // period doublings, which this analysis does not report.
                    if (std::abs(mu.imag()) > 1e-6) {
                        BifurcationPoint bp = make_bp(BifurcationKind::Torus, st.free, at);
                        bp.note = "complex multiplier pair crosses the unit circle, arg " + io::fmt(std::arg(mu));
                        br.detected.push_back(bp);
                        br.detected_orbits.push_back(at);
                    }
                }
            }
        }

        st.z = zn;
        st.t = tn;
        br.orbits.push_back(std::move(orb));
        br.param.push_back(zn[st.ip]);
        br.saddle_distance.push_back(saddle_distance(br.orbits.back()));

        const std::size_t n = br.saddle_distance.size();
        const bool shrinking = n >= 2 && br.saddle_distance[n - 1] < br.saddle_distance[n - 2] &&
                               br.orbits[n - 1].period > br.orbits[n - 2].period;
        homoclinic_run = shrinking ? homoclinic_run + 1 : 0;
        const PeriodicOrbit& cur = br.orbits.back();
        const bool near_saddle = cur.period > o.homoclinic_threshold || br.saddle_distance.back() < o.homoclinic_distance;
        if (c.detect && near_saddle && homoclinic_run >= o.homoclinic_window) {
            BifurcationPoint bp = make_bp(BifurcationKind::HomoclinicApprox, st.free, cur);
            const auto eq = nearest_equilibrium(cur);
            if (eq) bp.state = *eq;
            bp.note = "period " + io::fmt(cur.period) + ", saddle distance " + io::fmt(br.saddle_distance.back());
            br.detected.push_back(bp);
            br.detected_orbits.push_back(cur);
            br.stop_reason = "homoclinic approach";
            break;
        }
        if (cur.period > o.period_max) {
            br.stop_reason = "period limit";
            break;
        }

        if (iters <= 3) ds = std::min(ds * 1.3, c.ds_max);
    }
    if (br.stop_reason.empty()) br.stop_reason = "max points";
    return br;
}

}  // namespace

void PeriodicOptions::validate() const {
    if (intervals < 8 || intervals > 2000) throw ConfigError("periodic: intervals must lie in [8, 2000]");
    if (degree < 2 || degree > 7) throw ConfigError("periodic: degree must lie in [2, 7]");
    if (!(mesh_floor >= 0 && mesh_floor < 1)) throw ConfigError("periodic: mesh_floor must lie in [0, 1)");
    if (!(cont.ds_min > 0 && cont.ds_min <= cont.ds0 && cont.ds0 <= cont.ds_max))
        throw ConfigError("continuation: need 0 < ds_min <= ds0 <= ds_max");
    if (!(cont.newton_tol > 0)) throw ConfigError("continuation: newton_tol must be positive");
    if (!(period_max > 0) || !(homoclinic_threshold > 0) || !(homoclinic_distance > 0)) throw ConfigError("periodic: period limits must be positive");
    if (homoclinic_window < 2) throw ConfigError("periodic: homoclinic_window must be >= 2");
}

std::optional<PhaseState> nearest_equilibrium(const PeriodicOrbit& orb) {
    PhaseState slow = orb.node(0, 0);
    double fmin = INFINITY;
    for (const PhaseState& u : orb.sample(4)) {
        const double f = vector_field(u, orb.params).norm();
        if (f < fmin) {
            fmin = f;
            slow = u;
        }
    }
    try {
        return solve_equilibrium(slow, orb.params, 1e-12);
    } catch (const NumericsError&) {
        return std::nullopt;
    }
}

double collocation_residual(const PeriodicOrbit& orb) {
    CollocationSystem sys(orb.mesh, orb.degree, orb.params, {FreeVar::T()});
    sys.set_reference(orb);
    const Vec z = sys.pack(orb);
    return sys.residual(z).head(sys.n_nodes()).lpNorm<Eigen::Infinity>() / scale_of(orb.period);
}

double max_residual(const PeriodicBranch& br) {
    double r = 0.0;
    for (const PeriodicOrbit& orb : br.orbits) r = std::max(r, collocation_residual(orb));
    return r;
}

PeriodicOrbit converge_orbit(const PeriodicOrbit& guess, const PeriodicOptions& o) {
    PeriodicOrbit cur = guess;
    const int passes = o.adapt ? 4 : 1;
    for (int pass = 0; pass < passes; ++pass) {
        CollocationSystem sys(cur.mesh, cur.degree, cur.params, {FreeVar::T()});
        sys.set_reference(cur);
        Vec z = sys.pack(cur);
        const auto res = arc::solve_square(sys, z, o.cont.newton_tol, 25, scale_of(cur.period));
        if (!res.converged)
            throw NumericsError(NumericsFailure::NewtonDivergence,
                                "periodic orbit Newton failed (residual " + io::fmt(res.residual) + ")");
        cur = sys.unpack(z);
        if (pass + 1 < passes) {
            cur = remesh(cur, adapted_mesh(cur, o.intervals, o.mesh_floor));
        } else {
            if (o.floquet) attach_floquet(cur, sys, z);
            cur.residual = sys.residual(z).head(sys.n_nodes()).lpNorm<Eigen::Infinity>() / scale_of(cur.period);
        }
    }
    return cur;
}

PeriodicOrbit orbit_from_trajectory(const Trajectory& traj, const PeriodicOptions& o) {
    if (traj.dense.empty()) throw NumericsError(NumericsFailure::NoSolution, "trajectory has no dense output");
    const double t_mid = 0.5 * (traj.t_begin + traj.t_final);
    double lo1 = INFINITY, hi1 = -INFINITY, lo2 = INFINITY, hi2 = -INFINITY;
    for (std::size_t q = 0; q < traj.size(); ++q) {
        if (traj.times[q] < t_mid) continue;
        lo1 = std::min(lo1, traj.states[q][0]);
        hi1 = std::max(hi1, traj.states[q][0]);
        lo2 = std::min(lo2, traj.states[q][2]);
        hi2 = std::max(hi2, traj.states[q][2]);
    }
    const Coordinate c = (hi1 - lo1) >= (hi2 - lo2) ? Coordinate::x1 : Coordinate::x2;
    const PeriodEstimate pe = detect_period(traj, c, 0.5);
    if (!pe.periodic) throw NumericsError(NumericsFailure::NoSolution, "trajectory is not periodic");
    const double T = pe.period;
    const double ta = traj.t_final - 1.05 * T;

    // Mesh equidistributing the arclength of (tau, u(tau)).
    const int fine = 40 * o.intervals;
    std::vector<double> cum(static_cast<std::size_t>(fine) + 1, 0.0);
    PhaseState prev = traj.at(ta);
    for (int q = 1; q <= fine; ++q) {
        const double tau = static_cast<double>(q) / fine;
        const PhaseState u = traj.at(ta + tau * T);
        cum[q] = cum[q - 1] + std::sqrt(1.0 / (static_cast<double>(fine) * fine) + (u - prev).squaredNorm());
        prev = u;
    }
    std::vector<double> mesh(static_cast<std::size_t>(o.intervals) + 1);
    mesh[0] = 0.0;
    mesh[o.intervals] = 1.0;
    int q = 0;
    for (int j = 1; j < o.intervals; ++j) {
        const double target = cum[fine] * j / o.intervals;
        while (cum[q + 1] < target) ++q;
        mesh[j] = (q + (target - cum[q]) / (cum[q + 1] - cum[q])) / fine;
    }
    PeriodicOrbit orb;
    orb.mesh = mesh;
    orb.degree = o.degree;
    orb.period = T;
    orb.params = traj.params;
    orb.nodes.resize(4, o.intervals * o.degree);
    for (int j = 0; j < o.intervals; ++j) {
        const double h = mesh[j + 1] - mesh[j];
        for (int i = 0; i < o.degree; ++i)
            orb.nodes.col(j * o.degree + i) = traj.at(ta + (mesh[j] + h * i / o.degree) * T);
    }
    return converge_orbit(orb, o);
}

PeriodicOrbit orbit_at(const PeriodicBranch& br, double value, const PeriodicOptions& o, int tries) {
    std::vector<std::size_t> order(br.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return std::abs(br.param[i] - value) < std::abs(br.param[j] - value);
    });
    std::string last = "empty branch";
    for (std::size_t k = 0; k < order.size() && static_cast<int>(k) < tries; ++k) {
        PeriodicOrbit guess = br.orbits[order[k]];
        guess.params = with(guess.params, br.free, value);
        try {
            return converge_orbit(guess, o);
        } catch (const NumericsError& e) {
            last = e.what();
        }
    }
    throw NumericsError(NumericsFailure::NewtonDivergence,
                        "no branch orbit converges at " + std::string(to_string(br.free)) + " = " + io::fmt(value) +
                            " (" + last + ")");
}

PeriodicOrbit orbit_from_simulation(const PhaseState& s0, const SystemParams& p, const PeriodicOptions& o,
                                    double t_end) {
    SolverOptions so;
    so.t_end = t_end;
    so.keep_dense = true;
    so.store_from = 0.4 * t_end;
    return orbit_from_trajectory(integrate(s0, p, so), o);
}

PeriodicBranch continue_from_hopf(const BifurcationPoint& hopf, double lo, double hi, const PeriodicOptions& o) {
    o.validate();
    if (hopf.kind != BifurcationKind::Hopf) throw NumericsError(NumericsFailure::NoSolution, "not a Hopf point");
    const Eigen::Matrix4d J = jacobian_full(hopf.state, hopf.params);
    Eigen::EigenSolver<Eigen::Matrix4d> es(J);
    int k = 0;
    for (int i = 1; i < 4; ++i)
        if (es.eigenvalues()[i].imag() > es.eigenvalues()[k].imag()) k = i;
    const double omega = es.eigenvalues()[k].imag();
    if (!(omega > 0)) throw NumericsError(NumericsFailure::NoSolution, "no complex pair at the Hopf point");
    const Eigen::Vector4cd q = es.eigenvectors().col(k);

    const std::vector<double> mesh = uniform_mesh(std::max(o.intervals / 2, 40));
    const int m = o.degree;
    const int N = static_cast<int>(mesh.size()) - 1;
    NodeMatrix phi(4, N * m), base(4, N * m);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < m; ++i) {
            const double tau = mesh[j] + (mesh[j + 1] - mesh[j]) * i / m;
            const Complex e = std::polar(1.0, 2.0 * M_PI * tau);
            phi.col(j * m + i) = (q * e).real();
            base.col(j * m + i) = hopf.state;
        }

    CollocationSystem sys(mesh, m, hopf.params, {FreeVar::T(), FreeVar::of(hopf.free)});
    PeriodicOrbit trivial;
    trivial.mesh = mesh;
    trivial.degree = m;
    trivial.nodes = base;
    trivial.period = 2.0 * M_PI / omega;
    trivial.params = hopf.params;
    const Vec z0 = sys.pack(trivial);
    Vec t0 = Vec::Zero(sys.n_unknowns());
    set_node_part(phi, t0);
    const Vec w = sys.weights(trivial.period);
    t0 /= wnorm(t0, w);

    sys.set_reference(phi);
    const double ds = o.cont.ds0;
    Vec z1 = z0 + ds * t0;
    const auto res = arc::correct(sys, z1, z0, t0, ds, w, o.cont.newton_tol, 20, scale_of(trivial.period));
    if (!res.converged) throw NumericsError(NumericsFailure::NewtonDivergence, "Hopf start did not converge");
    Vec secant = z1 - z0;
    secant /= wnorm(secant, w);
    // The parameter component of the secant is second order; the Jacobian tangent at z1
    // oriented along it carries the true direction of the family.
    Vec t1 = arc::tangent(sys.jacobian(z1), secant, sys.weights(scale_of(sys.period(z1))));

    Stepper st(o, hopf.free, lo, hi, std::move(sys), z1, t1);
    PeriodicBranch br;
    br.label = "hopf_" + io::fmt(hopf.param);
    br.free = hopf.free;
    br.base = hopf.params;
    return run_branch(st, std::move(br), ds);
}

PeriodicBranch continue_periodic_orbits(const PeriodicOrbit& seed, Param free, double lo, double hi,
                                        const PeriodicOptions& o, int direction) {
    o.validate();
    CollocationSystem sys(seed.mesh, seed.degree, seed.params, {FreeVar::T(), FreeVar::of(free)});
    sys.set_reference(seed);
    const Vec z = sys.pack(seed);
    Vec orient = Vec::Zero(sys.n_unknowns());
    orient[sys.index_of(FreeVar::of(free))] = direction >= 0 ? 1.0 : -1.0;
    const Vec t = arc::tangent(sys.jacobian(z), orient, sys.weights(scale_of(seed.period)));
    Stepper st(o, free, lo, hi, std::move(sys), z, t);
    PeriodicBranch br;
    br.label = "orbit_" + io::fmt(get(seed.params, free));
    br.free = free;
    br.base = seed.params;
    br.orbits.push_back(seed);
    br.param.push_back(get(seed.params, free));
    br.saddle_distance.push_back(saddle_distance(seed));
    return run_branch(st, std::move(br), o.cont.ds0);
}

PeriodicOrbit mirror(const PeriodicOrbit& orb) {
    PeriodicOrbit out = orb;
    for (Eigen::Index c = 0; c < out.nodes.cols(); ++c) out.nodes.col(c) = swap_oscillators(orb.nodes.col(c));
    out.origin = swap_oscillators(orb.origin);
    return out;
}

PeriodicBranch mirror(const PeriodicBranch& br) {
    PeriodicBranch out = br;
    out.label = br.label + "_mirror";
    for (PeriodicOrbit& orb : out.orbits) orb = mirror(orb);
    for (BifurcationPoint& bp : out.detected) bp.state = swap_oscillators(bp.state);
    for (PeriodicOrbit& orb : out.detected_orbits) orb = mirror(orb);
    return out;
}

void write_periodic_branch_csv(const PeriodicBranch& br, const std::string& path, const std::string& comment) {
    io::CsvWriter w(path, comment,
                    {std::string(to_string(br.free)), "max_x1", "period", "stable", "saddle_distance", "re_mu1",
                     "im_mu1", "re_mu2", "im_mu2", "re_mu3", "im_mu3", "re_mu4", "im_mu4"});
    for (std::size_t i = 0; i < br.orbits.size(); ++i) {
        const PeriodicOrbit& orb = br.orbits[i];
        w.cell(br.param[i]).cell(orb.max_coord(0)).cell(orb.period).cell(orb.stable ? 1L : 0L);
        w.cell(br.saddle_distance[i]);
        for (const Complex& mu : orb.multipliers) w.cell(mu.real()).cell(mu.imag());
        w.end_row();
    }
    w.close();
}

}  // namespace cvdp
