#include "cvdp/integrate.hpp"

#include "cvdp/errors.hpp"
#include "cvdp/io.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cvdp {

Method parse_method(std::string_view name) {
    if (name == "rk54" || name == "explicit") return Method::ExplicitRK54;
    if (name == "radau" || name == "implicit") return Method::RadauIIA3;
    throw ConfigError("unknown solver method '" + std::string(name) + "'");
}

std::string_view to_string(Method m) { return m == Method::ExplicitRK54 ? "rk54" : "radau"; }

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::MaxX1: return "max_x1";
        case EventKind::MaxX2: return "max_x2";
        case EventKind::MinX1: return "min_x1";
        case EventKind::MinX2: return "min_x2";
    }
    return "?";
}

void SolverOptions::validate() const {
    if (!(rel_tol > 0) || !(abs_tol > 0)) throw ConfigError("solver tolerances must be > 0");
    if (!(t_end > 0)) throw ConfigError("t_end must be > 0");
    if (!(max_step > 0)) throw ConfigError("max_step must be > 0");
    if (output_dt < 0) throw ConfigError("output_dt must be >= 0");
}

PhaseState DenseSegment::eval(double t) const noexcept {
    const double th = h > 0 ? (t - t0) / h : 0.0;
    if (method == Method::ExplicitRK54) {
        const double th1 = 1.0 - th;
        return coef[0] + th * (coef[1] + th1 * (coef[2] + th * (coef[3] + th1 * coef[4])));
    }
    // Quadratic collocation polynomial through nodes 0, 1/3, 1.
    const double l0 = 3.0 * (th - 1.0 / 3.0) * (th - 1.0);
    const double l1 = -4.5 * th * (th - 1.0);
    const double l2 = 1.5 * th * (th - 1.0 / 3.0);
    return l0 * coef[0] + l1 * coef[1] + l2 * coef[2];
}

PhaseState Trajectory::at(double t) const {
    if (dense.empty()) {
        throw ConfigError("Trajectory::at requires keep_dense");
    }
    auto it = std::upper_bound(dense.begin(), dense.end(), t,
                               [](double v, const DenseSegment& s) { return v < s.t0; });
    const DenseSegment& seg = it == dense.begin() ? dense.front() : *std::prev(it);
    return seg.eval(std::clamp(t, seg.t0, seg.t0 + seg.h));
}

namespace {

double error_norm(const PhaseState& err, const PhaseState& y0, const PhaseState& y1, double rtol, double atol) {
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        acc += (err[i] / sc) * (err[i] / sc);
    }
    return std::sqrt(acc / 4.0);
}

// One attempted step; produces up to two dense segments (the Radau stepper
// accepts a pair of half steps).
struct Attempt {
    PhaseState y1;
    double err = 0.0;
    bool ok = true;
    int segments = 1;
    std::array<DenseSegment, 2> seg;
};

class DormandPrince {
public:
    static constexpr double order = 5.0;

    DormandPrince(const SystemParams& p, SolverStats& st) : p_(p), st_(st) {}

    Attempt step(double t, const PhaseState& y, const PhaseState& k1, double h, double rtol, double atol) {
        constexpr double a21 = 1.0 / 5.0;
        constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
        constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
        constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                         a54 = -212.0 / 729.0;
        constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                         a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
        constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                         b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
        constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                         e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
        constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                         d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                         d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

        const PhaseState k2 = f(y + h * (a21 * k1));
        const PhaseState k3 = f(y + h * (a31 * k1 + a32 * k2));
        const PhaseState k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const PhaseState k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const PhaseState k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        Attempt at;
        at.y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        k7_ = f(at.y1);
        const PhaseState err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7_);
        at.err = error_norm(err, y, at.y1, rtol, atol);
        at.ok = at.y1.allFinite();

        DenseSegment& s = at.seg[0];
        s.t0 = t;
        s.h = h;
        s.method = Method::ExplicitRK54;
        s.coef[0] = y;
        s.coef[1] = at.y1 - y;
        s.coef[2] = h * k1 - s.coef[1];
        s.coef[3] = s.coef[1] - h * k7_ - s.coef[2];
        s.coef[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7_);
        return at;
    }

    /// Derivative at the end of the last attempted step (FSAL).
    const PhaseState& last_derivative() const { return k7_; }

    PhaseState f(const PhaseState& y) {
        ++st_.rhs_evals;
        return vector_field(y, p_);
    }

private:
    const SystemParams& p_;
    SolverStats& st_;
    PhaseState k7_;
};

class RadauIIA {
public:
    static constexpr double order = 3.0;

    RadauIIA(const SystemParams& p, SolverStats& st) : p_(p), st_(st) {}

    Attempt step(double t, const PhaseState& y, const PhaseState&, double h, double rtol, double atol) {
        Attempt at;
        PhaseState big, mid, fin, y13a, y13b;
        if (!solve(y, h, big, y13a, rtol, atol) || !solve(y, 0.5 * h, mid, y13a, rtol, atol) ||
            !solve(mid, 0.5 * h, fin, y13b, rtol, atol)) {
            at.ok = false;
            at.err = 1e10;
            return at;
        }
        at.y1 = fin;
        // Local error of the order-3 method scales with h^4; Richardson factor 2^3 - 1.
        at.err = error_norm((fin - big) / 7.0, y, fin, rtol, atol);
        at.ok = fin.allFinite();
        at.segments = 2;
        at.seg[0] = {t, 0.5 * h, Method::RadauIIA3, {y, y13a, mid, PhaseState::Zero(), PhaseState::Zero()}};
        at.seg[1] = {t + 0.5 * h, 0.5 * h, Method::RadauIIA3, {mid, y13b, fin, PhaseState::Zero(), PhaseState::Zero()}};
        return at;
    }

    const PhaseState& last_derivative() const { return fend_; }

    PhaseState f(const PhaseState& y) {
        ++st_.rhs_evals;
        return vector_field(y, p_);
    }

private:
    // Simplified Newton on the stage increments with the Jacobian frozen at y.
    bool solve(const PhaseState& y, double h, PhaseState& y_end, PhaseState& y_third, double rtol, double atol) {
        constexpr double A[2][2] = {{5.0 / 12.0, -1.0 / 12.0}, {3.0 / 4.0, 1.0 / 4.0}};
        const JacobianFull J = jacobian_full(y, p_);
        Eigen::Matrix<double, 8, 8> M = Eigen::Matrix<double, 8, 8>::Identity();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) M.block<4, 4>(4 * i, 4 * j) -= h * A[i][j] * J;
        const Eigen::PartialPivLU<Eigen::Matrix<double, 8, 8>> lu(M);
        Eigen::Matrix<double, 8, 1> z = Eigen::Matrix<double, 8, 1>::Zero();
        for (int it = 0; it < 12; ++it) {
            const PhaseState f1 = f(y + z.head<4>());
            const PhaseState f2 = f(y + z.tail<4>());
            Eigen::Matrix<double, 8, 1> r;
            r.head<4>() = -z.head<4>() + h * (A[0][0] * f1 + A[0][1] * f2);
            r.tail<4>() = -z.tail<4>() + h * (A[1][0] * f1 + A[1][1] * f2);
            const Eigen::Matrix<double, 8, 1> dz = lu.solve(r);
            z += dz;
            if (!z.allFinite()) return false;
            double n = 0.0;
            for (int i = 0; i < 8; ++i) {
                const double sc = atol + rtol * std::abs(y[i % 4] + z[i]);
                n = std::max(n, std::abs(dz[i]) / sc);
            }
            if (n < 1e-2) {
                y_third = y + z.head<4>();
                y_end = y + z.tail<4>();
                fend_ = f(y_end);
                return true;
            }
        }
        return false;
    }

    const SystemParams& p_;
    SolverStats& st_;
    PhaseState fend_;
};

// Root of g on [ta, tb] with g(ta), g(tb) of opposite sign (Illinois variant of regula falsi).
template <class G>
double locate_root(G&& g, double ta, double tb, double ga, double gb, double tol) {
    int side = 0;
    for (int it = 0; it < 200 && tb - ta > tol; ++it) {
        double tc = (ta * gb - tb * ga) / (gb - ga);
        if (!(tc > ta && tc < tb)) tc = 0.5 * (ta + tb);
        const double gc = g(tc);
        if (gc == 0.0) return tc;
        if ((gc > 0) == (gb > 0)) {
            tb = tc;
            gb = gc;
            if (side == -1) ga *= 0.5;
            side = -1;
        } else {
            ta = tc;
            ga = gc;
            if (side == 1) gb *= 0.5;
            side = 1;
        }
    }
    return 0.5 * (ta + tb);
}

template <class Stepper>
Trajectory run(const PhaseState& s0, const SystemParams& p, const SolverOptions& o) {
    Trajectory tr;
    tr.params = p;
    Stepper stepper(p, tr.stats);

    double t = 0.0;
    PhaseState y = s0;
    PhaseState fy = stepper.f(y);
    long next_sample = 0;
    if (o.output_dt > 0) {
        if (o.store_from <= 0) {
            tr.times.push_back(0.0);
            tr.states.push_back(y);
        }
        next_sample = 1;
    } else if (o.store_from <= 0) {
        tr.times.push_back(0.0);
        tr.states.push_back(y);
    }

    // Initial step from the scaled size of y and f(y).
    double h;
    {
        double d0 = 0.0, d1 = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double sc = o.abs_tol + o.rel_tol * std::abs(y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1 += (fy[i] / sc) * (fy[i] / sc);
        }
        d0 = std::sqrt(d0 / 4);
        d1 = std::sqrt(d1 / 4);
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h = std::min({h, o.max_step, o.t_end});
    }

    const double expo = 1.0 / (Stepper::order);
    bool last_rejected = false;
    while (t < o.t_end) {
        if (t + h > o.t_end) h = o.t_end - t;
        h = std::min(h, o.max_step);
        if (h < 1e-14 * std::max(1.0, std::abs(t))) {
            throw NumericsError(NumericsFailure::StepSizeUnderflow, "step size underflow at t=" + io::fmt(t));
        }
        Attempt at = stepper.step(t, y, fy, h, o.rel_tol, o.abs_tol);
        if (!at.ok || !(at.err <= 1.0)) {
            ++tr.stats.rejected;
            const double fac = at.ok && std::isfinite(at.err) ? std::max(0.2, 0.9 * std::pow(at.err, -expo)) : 0.25;
            h *= std::min(fac, 0.9);
            last_rejected = true;
            continue;
        }
        ++tr.stats.accepted;
        const double t_new = (h == o.t_end - t) ? o.t_end : t + h;
        const PhaseState f_new = stepper.last_derivative();

        for (int si = 0; si < at.segments; ++si) {
            const DenseSegment& seg = at.seg[si];
            const double sa = seg.t0, sb = (si + 1 == at.segments) ? t_new : seg.t0 + seg.h;
            const PhaseState ya = seg.coef[0];
            const PhaseState yb = seg.eval(sb);
            if (o.locate_events) {
                for (int c = 0; c < 2; ++c) {
                    const int idx = 2 * c;
                    const double ga = ya[idx + 1] + cubic(ya[idx]);
                    const double gb = yb[idx + 1] + cubic(yb[idx]);
                    const bool is_max = ga > 0 && gb <= 0;
                    const bool is_min = ga < 0 && gb >= 0;
                    if (!is_max && !is_min) continue;
                    auto g = [&](double tt) {
                        const PhaseState s = seg.eval(tt);
                        return s[idx + 1] + cubic(s[idx]);
                    };
                    const double te = locate_root(g, sa, sb, ga, gb, o.event_time_tol);
                    EventKind kind = c == 0 ? (is_max ? EventKind::MaxX1 : EventKind::MinX1)
                                            : (is_max ? EventKind::MaxX2 : EventKind::MinX2);
                    tr.events.push_back({te, kind, seg.eval(te)});
                }
            }
            if (o.output_dt > 0) {
                for (;;) {
                    const double ts = static_cast<double>(next_sample) * o.output_dt;
                    if (ts > sb || ts > o.t_end) break;
                    if (ts >= o.store_from) {
                        tr.times.push_back(ts);
                        tr.states.push_back(seg.eval(ts));
                    }
                    ++next_sample;
                }
            } else if (sb >= o.store_from) {
                tr.times.push_back(sb);
                tr.states.push_back(si + 1 == at.segments ? at.y1 : yb);
            }
            if (o.keep_dense) tr.dense.push_back(seg);
        }

        t = t_new;
        y = at.y1;
        fy = f_new;
        if (y.cwiseAbs().maxCoeff() > o.blowup_bound) {
            throw NumericsError(NumericsFailure::Blowup, "|state| exceeded bound at t=" + io::fmt(t));
        }
        double fac = at.err > 0 ? 0.9 * std::pow(at.err, -expo) : 5.0;
        fac = std::clamp(fac, 0.2, 5.0);
        if (last_rejected) fac = std::min(fac, 1.0);
        h *= fac;
        last_rejected = false;
    }
    tr.t_final = t;
    return tr;
}

}  // namespace

Trajectory integrate(const PhaseState& s0, const SystemParams& p, const SolverOptions& opts) {
    opts.validate();
    p.validate();
    if (!s0.allFinite()) throw NumericsError(NumericsFailure::InvalidParams, "non-finite initial state");
    if (opts.method == Method::ExplicitRK54) return run<DormandPrince>(s0, p, opts);
    return run<RadauIIA>(s0, p, opts);
}

PeriodEstimate detect_period(const Trajectory& traj, Coordinate c, double discard_fraction) {
    if (traj.times.empty()) throw NumericsError(NumericsFailure::TooShort, "empty trajectory");
    const int idx = static_cast<int>(c);
    const double t0 = traj.t_begin, t1 = traj.t_final;
    const double t_start = t0 + discard_fraction * (t1 - t0);

    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.times[i] < t_start) continue;
        lo = std::min(lo, traj.states[i][idx]);
        hi = std::max(hi, traj.states[i][idx]);
    }
    std::vector<double> peak_times;
    if (c == Coordinate::x1 || c == Coordinate::x2) {
        const EventKind want = c == Coordinate::x1 ? EventKind::MaxX1 : EventKind::MaxX2;
        for (const Event& e : traj.events) {
            if (e.kind == want && e.t >= t_start) hi = std::max(hi, e.state[idx]);
        }
        PeriodEstimate flat;
        if (!(hi - lo > 1e-6)) return flat;
        const double mid = 0.5 * (lo + hi);
        for (const Event& e : traj.events) {
            if (e.kind == want && e.t >= t_start && e.state[idx] > mid) peak_times.push_back(e.t);
        }
    } else {
        PeriodEstimate flat;
        if (!(hi - lo > 1e-6)) return flat;
        const double mid = 0.5 * (lo + hi);
        for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
            if (traj.times[i] < t_start) continue;
            const double v = traj.states[i][idx];
            if (v > mid && v >= traj.states[i - 1][idx] && v > traj.states[i + 1][idx]) peak_times.push_back(traj.times[i]);
        }
    }
    if (peak_times.size() < 4) {
        throw NumericsError(NumericsFailure::TooShort,
                            "only " + std::to_string(peak_times.size()) + " major maxima in analysis window");
    }
    double dmin = INFINITY, dmax = 0.0;
    for (std::size_t i = 1; i < peak_times.size(); ++i) {
        const double d = peak_times[i] - peak_times[i - 1];
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
    }
    PeriodEstimate est;
    est.maxima = static_cast<int>(peak_times.size());
    est.period = (peak_times.back() - peak_times.front()) / static_cast<double>(peak_times.size() - 1);
    est.relative_spread = (dmax - dmin) / est.period;
    est.periodic = est.relative_spread <= 0.01;
    return est;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path, const std::string& header_comment) {
    io::CsvWriter w(path, header_comment, {"t", "x1", "y1", "x2", "y2"});
    for (std::size_t i = 0; i < traj.size(); ++i) {
        w.cell(traj.times[i]);
        for (int j = 0; j < 4; ++j) w.cell(traj.states[i][j]);
        w.end_row();
    }
    w.close();
}

}  // namespace cvdp
