#pragma once

#include "cvdp/model.hpp"

#include <array>
#include <optional>
#include <string_view>
#include <vector>

namespace cvdp {

enum class Method {
    ExplicitRK54,  ///< Dormand-Prince 5(4) embedded pair with 4th-order dense output
    RadauIIA3,     ///< 2-stage Radau IIA (L-stable), step-doubling error control
};

Method parse_method(std::string_view name);
std::string_view to_string(Method m);

struct SolverOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double max_step = 1.0;
    double t_end = 1e4;
    Method method = Method::ExplicitRK54;
    /// > 0: store states on a uniform grid of this spacing (from dense output)
    /// instead of at every accepted step.
    double output_dt = 0.0;
    /// Points before this time are not stored (events are still recorded).
    double store_from = 0.0;
    /// Keep per-step dense-output data so Trajectory::at() works anywhere.
    bool keep_dense = false;
    bool locate_events = true;
    double event_time_tol = 1e-10;
    double blowup_bound = 1e6;

    /// Throws ConfigError on non-positive tolerances or t_end.
    void validate() const;
};

enum class EventKind { MaxX1, MaxX2, MinX1, MinX2 };
std::string_view to_string(EventKind k);

struct Event {
    double t;
    EventKind kind;
    PhaseState state;
};

/// Dense-output segment covering [t0, t0 + h]; evaluates the stepper's interpolant.
struct DenseSegment {
    double t0 = 0.0, h = 0.0;
    Method method = Method::ExplicitRK54;
    std::array<PhaseState, 5> coef{};

    PhaseState eval(double t) const noexcept;
};

struct SolverStats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<PhaseState> states;
    std::vector<Event> events;
    std::vector<DenseSegment> dense;  // empty unless SolverOptions::keep_dense
    SystemParams params;
    SolverStats stats;
    /// Integrated span; stored points may start later (SolverOptions::store_from).
    double t_begin = 0.0, t_final = 0.0;

    std::size_t size() const noexcept { return times.size(); }
    const PhaseState& final_state() const { return states.back(); }
    /// Dense evaluation; requires keep_dense. t is clamped to the covered span.
    PhaseState at(double t) const;
};

/// Integrates the coupled system from s0 over [0, opts.t_end].
/// Throws NumericsError(StepSizeUnderflow) when the step collapses and
/// NumericsError(Blowup) when any |coordinate| exceeds opts.blowup_bound.
Trajectory integrate(const PhaseState& s0, const SystemParams& p, const SolverOptions& opts);

enum class Coordinate { x1 = 0, y1 = 1, x2 = 2, y2 = 3 };

struct PeriodEstimate {
    bool periodic = false;
    double period = 0.0;
    double relative_spread = 0.0;
    int maxima = 0;
};

/// Period from the spacing of major maxima of one coordinate after discarding
/// the first `discard_fraction` of the time span. Returns periodic=false when
/// the coordinate is flat or the spacings spread by more than 1 %.
/// Throws NumericsError(TooShort) when fewer than 4 major maxima remain.
PeriodEstimate detect_period(const Trajectory& traj, Coordinate c, double discard_fraction = 0.2);

/// CSV with header t,x1,y1,x2,y2 and 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, const std::string& path, const std::string& header_comment);

}  // namespace cvdp
