#pragma once

// One-dimensional unstable manifold of the symmetric equilibrium E0.

#include "cvdp/collocation.hpp"
#include "cvdp/integrate.hpp"

#include <array>

namespace cvdp {

struct ManifoldOptions {
    double offset = 1e-6;  ///< seed distance from E0
    SolverOptions solver = default_solver();

    static SolverOptions default_solver() {
        SolverOptions s;
        s.t_end = 2e4;
        return s;
    }
    void validate() const;
};

struct ManifoldBranch {
    SystemParams params;
    PhaseState equilibrium = PhaseState::Zero();
    /// Unit unstable eigenvector, oriented so that its x1 component is positive.
    PhaseState direction = PhaseState::Zero();
    double eigenvalue = 0.0;
    double offset = 0.0;
    /// Seeded at E0 + offset * direction and E0 - offset * direction.
    std::array<Trajectory, 2> branches;
};

/// Requires identical parameters and exactly one eigenvalue of E0 with positive real
/// part, which must be real; otherwise NumericsError(NotASaddle). For identical
/// parameters an antisymmetric eigenvector is projected onto the antisymmetric
/// subspace, so the two branches are exact exchange images.
ManifoldBranch unstable_manifold(const SystemParams& p, const ManifoldOptions& opts = {});

/// Largest distance from the stored trajectory points with t >= t_from to the orbit.
double distance_to_orbit(const Trajectory& traj, const PeriodicOrbit& orb, double t_from);

}  // namespace cvdp
