#pragma once

#include "cvdp/collocation.hpp"
#include "cvdp/continuation.hpp"
#include "cvdp/integrate.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cvdp {

struct PeriodicOptions {
    ContinuationOptions cont;
    int intervals = 320;
    int degree = 4;
    bool adapt = true;
    double mesh_floor = 0.05;
    bool floquet = true;
    /// Branch stops once the period exceeds this.
    double period_max = 3000.0;
    /// HomoclinicApprox: period above this, or saddle distance below
    /// `homoclinic_distance`, while the distance to the saddle shrinks and the period
    /// grows over `homoclinic_window` consecutive points. Closer than the distance floor
    /// the orbit's passage time is fixed by rounding error.
    double homoclinic_threshold = 1000.0;
    double homoclinic_distance = 1e-5;
    int homoclinic_window = 5;
    /// Throws ConfigError on inconsistent settings.
    void validate() const;
};

struct PeriodicBranch {
    std::string label;
    Param free = Param::b;
    SystemParams base;
    std::vector<PeriodicOrbit> orbits;
    std::vector<double> param;
    /// Distance from each orbit to the equilibrium nearest its slowest point; NaN when
    /// that equilibrium could not be found.
    std::vector<double> saddle_distance;
    std::vector<BifurcationPoint> detected;
    std::vector<PeriodicOrbit> detected_orbits;  ///< orbit at each detected point
    std::string stop_reason;

    std::size_t size() const { return orbits.size(); }
};

/// Newton at fixed parameters with the period free, alternating with mesh adaptation,
/// then Floquet analysis. Throws NumericsError(NewtonDivergence).
PeriodicOrbit converge_orbit(const PeriodicOrbit& guess, const PeriodicOptions& opts = {});

/// One period of an integrated trajectory (requires dense output), on a mesh
/// equidistributing arclength, converged with converge_orbit. The large-amplitude
/// coordinate is used for the period. Throws NumericsError(NoSolution) when the
/// trajectory is not periodic.
PeriodicOrbit orbit_from_trajectory(const Trajectory& traj, const PeriodicOptions& opts = {});

/// Integrates from s0 for t_end and hands the result to orbit_from_trajectory.
PeriodicOrbit orbit_from_simulation(const PhaseState& s0, const SystemParams& p, const PeriodicOptions& opts = {},
                                    double t_end = 6000.0);

/// Continues the family born at a Hopf point of equilibria, starting with the
/// eigenfunction as predictor. The branch direction in the parameter is whatever the
/// family does.
PeriodicBranch continue_from_hopf(const BifurcationPoint& hopf, double lo, double hi,
                                  const PeriodicOptions& opts = {});

/// Pseudo-arclength continuation in `free` over [lo, hi] with SNPO, Torus and
/// HomoclinicApprox detection. `direction` picks the initial sense of the parameter.
PeriodicBranch continue_periodic_orbits(const PeriodicOrbit& seed, Param free, double lo, double hi,
                                        const PeriodicOptions& opts = {}, int direction = +1);

/// Orbit at exactly `value` of the branch parameter, converged from the branch orbits
/// nearest in that parameter (tried in order of distance, at most `tries`).
/// Throws NumericsError(NewtonDivergence) when none converges.
PeriodicOrbit orbit_at(const PeriodicBranch& br, double value, const PeriodicOptions& opts = {}, int tries = 6);

/// Equilibrium reached by Newton from the slowest orbit point, if any.
std::optional<PhaseState> nearest_equilibrium(const PeriodicOrbit& orb);

/// Exchange image of every orbit of the branch.
PeriodicBranch mirror(const PeriodicBranch& br);
PeriodicOrbit mirror(const PeriodicOrbit& orb);

/// Max collocation residual (scaled by max(1, T)) after re-evaluating every orbit.
double max_residual(const PeriodicBranch& br);
double collocation_residual(const PeriodicOrbit& orb);

/// Columns: param, max_x1, period, stable, saddle_distance, then Re/Im of the four multipliers.
void write_periodic_branch_csv(const PeriodicBranch& br, const std::string& path, const std::string& comment);

}  // namespace cvdp
