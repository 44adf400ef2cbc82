#include "cvdp/classify.hpp"

#include "cvdp/errors.hpp"
#include "cvdp/io.hpp"

#include <algorithm>
#include <cmath>
#include <omp.h>

namespace cvdp {

std::string_view to_string(AttractorTag t) {
    switch (t) {
        case AttractorTag::SteadyState: return "SteadyState";
        case AttractorTag::SingleLoop: return "SingleLoop";
        case AttractorTag::DoubleLoop: return "DoubleLoop";
        case AttractorTag::Other: return "Other";
    }
    return "?";
}

std::string_view to_string(LoopDetail d) {
    switch (d) {
        case LoopDetail::None: return "none";
        case LoopDetail::X1: return "x1";
        case LoopDetail::X2: return "x2";
    }
    return "?";
}

AttractorClass classify_trajectory(const Trajectory& traj, const ClassifyOptions& o) {
    if (traj.times.empty()) throw NumericsError(NumericsFailure::TooShort, "empty trajectory");
    const double t0 = traj.t_begin, t1 = traj.t_final;
    if (t1 - t0 < o.min_duration) {
        throw NumericsError(NumericsFailure::TooShort, "trajectory spans " + io::fmt(t1 - t0) + " time units");
    }
    const double t_start = t1 - o.analysis_fraction * (t1 - t0);

    double lo1 = INFINITY, hi1 = -INFINITY, lo2 = INFINITY, hi2 = -INFINITY;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.times[i] < t_start) continue;
        const PhaseState& s = traj.states[i];
        lo1 = std::min(lo1, s[0]);
        hi1 = std::max(hi1, s[0]);
        lo2 = std::min(lo2, s[2]);
        hi2 = std::max(hi2, s[2]);
    }
    // Located extrema refine the sampled range.
    for (const Event& e : traj.events) {
        if (e.t < t_start) continue;
        switch (e.kind) {
            case EventKind::MaxX1: hi1 = std::max(hi1, e.state[0]); break;
            case EventKind::MinX1: lo1 = std::min(lo1, e.state[0]); break;
            case EventKind::MaxX2: hi2 = std::max(hi2, e.state[2]); break;
            case EventKind::MinX2: lo2 = std::min(lo2, e.state[2]); break;
        }
    }

    AttractorClass c;
    c.amp_x1 = hi1 - lo1;
    c.amp_x2 = hi2 - lo2;
    const bool big1 = c.amp_x1 > o.large_amplitude;
    const bool big2 = c.amp_x2 > o.large_amplitude;

    c.final_state = traj.final_state();
    if (c.amp_x1 < o.steady_amplitude && c.amp_x2 < o.steady_amplitude) {
        // Slow spirals pass the amplitude test long before |f| is small; keep integrating.
        SolverOptions so;
        so.t_end = 1e3;
        so.output_dt = so.t_end;
        so.locate_events = false;
        while (vector_field(c.final_state, traj.params).norm() >= o.steady_residual && c.settle_time < o.settle_time) {
            c.final_state = integrate(c.final_state, traj.params, so).final_state();
            c.settle_time += so.t_end;
        }
        const bool rest = vector_field(c.final_state, traj.params).norm() < o.steady_residual;
        c.tag = rest ? AttractorTag::SteadyState : AttractorTag::Other;
        return c;
    }
    if (big1 != big2) {
        c.tag = AttractorTag::SingleLoop;
        c.detail = big1 ? LoopDetail::X1 : LoopDetail::X2;
        return c;
    }
    if (!(big1 && big2)) {
        c.tag = AttractorTag::Other;
        return c;
    }

    // Both large: require strictly alternating major maxima (out of phase).
    const double mid1 = 0.5 * (lo1 + hi1), mid2 = 0.5 * (lo2 + hi2);
    std::vector<int> order;
    for (const Event& e : traj.events) {
        if (e.t < t_start) continue;
        if (e.kind == EventKind::MaxX1 && e.state[0] > mid1) {
            order.push_back(1);
            ++c.major_peaks_x1;
        } else if (e.kind == EventKind::MaxX2 && e.state[2] > mid2) {
            order.push_back(2);
            ++c.major_peaks_x2;
        }
    }
    bool alternating = order.size() >= 4;
    for (std::size_t i = 1; i < order.size() && alternating; ++i) alternating = order[i] != order[i - 1];
    c.alternating = alternating;
    c.tag = alternating ? AttractorTag::DoubleLoop : AttractorTag::Other;
    return c;
}

PhaseState perturbed_equilibrium(const SystemParams& p, double delta, bool mirrored) {
    PhaseState s = symmetric_equilibrium(p);
    s[mirrored ? 0 : 2] += delta;
    return s;
}

void SweepOptions::validate() const {
    if (!(a_max > a_min) || !(b_max > b_min)) throw ConfigError("sweep ranges must be non-degenerate");
    if (n_a < 2 || n_b < 2) throw ConfigError("sweep grid needs at least 2 points per axis");
    solver.validate();
}

double SweepOptions::a_at(int i) const { return a_min + (a_max - a_min) * i / (n_a - 1); }
double SweepOptions::b_at(int j) const { return b_min + (b_max - b_min) * j / (n_b - 1); }

AttractorClass classify_cell(double a, double b, const SweepOptions& o) {
    SystemParams p = with(with(o.base, Param::a, a), Param::b, b);
    SolverOptions so = o.solver;
    so.store_from = so.t_end * (1.0 - o.classify.analysis_fraction);
    try {
        const Trajectory tr = integrate(perturbed_equilibrium(p, o.perturbation, o.mirrored), p, so);
        return classify_trajectory(tr, o.classify);
    } catch (const NumericsError& e) {
        AttractorClass c;
        c.tag = AttractorTag::Other;
        c.failed = true;
        c.failure = e.what();
        return c;
    }
}

namespace {
ClassificationMap make_map(const SweepOptions& o) {
    o.validate();
    ClassificationMap m;
    m.options = o;
    for (int i = 0; i < o.n_a; ++i) m.a_values.push_back(o.a_at(i));
    for (int j = 0; j < o.n_b; ++j) m.b_values.push_back(o.b_at(j));
    m.cells.resize(static_cast<std::size_t>(o.n_a) * o.n_b);
    return m;
}
}  // namespace

ClassificationMap sweep_serial(const SweepOptions& o) {
    ClassificationMap m = make_map(o);
    for (int i = 0; i < o.n_a; ++i)
        for (int j = 0; j < o.n_b; ++j) m.cells[i * o.n_b + j] = classify_cell(m.a_values[i], m.b_values[j], o);
    return m;
}

ClassificationMap sweep(const SweepOptions& o) {
    ClassificationMap m = make_map(o);
    const long total = static_cast<long>(o.n_a) * o.n_b;
#pragma omp parallel for schedule(dynamic, 1)
    for (long c = 0; c < total; ++c) {
        const int i = static_cast<int>(c / o.n_b), j = static_cast<int>(c % o.n_b);
        m.cells[c] = classify_cell(m.a_values[i], m.b_values[j], o);
    }
    return m;
}

void write_map_csv(const ClassificationMap& m, const std::string& path, const std::string& comment) {
    io::CsvWriter w(path, comment, {"a", "b", "tag", "detail", "amp_x1", "amp_x2", "failed"});
    for (std::size_t i = 0; i < m.a_values.size(); ++i) {
        for (std::size_t j = 0; j < m.b_values.size(); ++j) {
            const AttractorClass& c = m.at(i, j);
            w.cell(m.a_values[i]).cell(m.b_values[j]).cell(to_string(c.tag)).cell(to_string(c.detail));
            w.cell(c.amp_x1).cell(c.amp_x2).cell(c.failed ? 1L : 0L);
            w.end_row();
        }
    }
    w.close();
}

}  // namespace cvdp
