#pragma once

// Bifurcation curves in the (a, b) plane.

#include "cvdp/continuation.hpp"
#include "cvdp/periodic.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cvdp {

struct CurvePoint {
    double a = 0.0, b = 0.0;
    PhaseState state = PhaseState::Zero();  ///< equilibrium, or orbit point of maximal x1
    double period = 0.0;                    ///< orbits; 2 pi / omega for Hopf points
};

struct ParamCurve {
    BifurcationKind kind = BifurcationKind::Pitchfork;
    SystemParams base;
    /// Ordered along the curve; the start point sits where the two directions meet.
    std::vector<CurvePoint> points;
    /// Every turning point in a that was passed.
    std::vector<CurvePoint> turning_points;
    /// The turning point of smallest a.
    std::optional<CurvePoint> fold_a;
    std::string stop_reason;

    /// Values of b where the curve crosses the vertical line a = a0 (linear interpolation).
    std::vector<double> b_at(double a0) const;
};

struct CurveOptions {
    ContinuationOptions cont;
    PeriodicOptions periodic;
    double a_min = -1.7, a_max = -1.0;
    double b_min = 0.0, b_max = 3.0;
    /// Newton tolerance for fixed long-period orbits. Near the symmetric saddle the slow
    /// unstable direction amplifies rounding error by exp(lambda_u t) over the passage,
    /// which puts the attainable collocation residual far above cont.newton_tol.
    double fixed_period_tol = 1e-6;

    void validate() const;
};

/// Zero-eigenvalue curve through a Fold or Pitchfork point, defined by the equilibrium
/// equations and a bordered test function.
ParamCurve continue_pitchfork_curve(const BifurcationPoint& bp, const CurveOptions& opts = {});

/// Hopf curve through a Hopf point: equilibrium equations plus J v = i omega v.
ParamCurve continue_hopf_curve(const BifurcationPoint& bp, const CurveOptions& opts = {});

/// SNPO curve from the orbit at a fold of periodic orbits, as a minimally augmented
/// collocation problem.
ParamCurve continue_snpo_curve(const PeriodicOrbit& fold_orbit, const CurveOptions& opts = {});

/// Orbit of period exactly `period` on the branch of `seed` (b free). Short seeds are
/// first continued in b along `direction` up to the homoclinic approach; the period is
/// then raised in steps with b solved for at each fixed period.
PeriodicOrbit fix_period(const PeriodicOrbit& seed, double period, const PeriodicOptions& opts = {},
                         int direction = +1, double tol = 1e-6);

/// Curve of orbits with the period locked at `period`, both a and b free; approximates
/// the homoclinic bifurcation curve. Records the turning point in a.
ParamCurve continue_fixed_period_orbit(const PeriodicOrbit& seed, double period, const CurveOptions& opts = {});

/// Columns a, b, period.
void write_curve_csv(const ParamCurve& c, const std::string& path, const std::string& comment);

}  // namespace cvdp
