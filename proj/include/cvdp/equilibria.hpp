#pragma once

#include "cvdp/continuation.hpp"

#include <array>

namespace cvdp {

using Tangent5 = Eigen::Matrix<double, 5, 1>;

struct EquilibriumPoint {
    double param = 0.0;
    PhaseState state = PhaseState::Zero();
    std::array<Complex, 4> eigenvalues{};
    int n_unstable = 0;  ///< eigenvalues with positive real part
    bool stable = false;
    Tangent5 tangent = Tangent5::Zero();  ///< unit tangent (state, param) at this point
    double residual = 0.0;
};

struct EquilibriumBranch {
    std::string label;
    Param free = Param::b;
    SystemParams base;  ///< parameters other than `free`
    std::vector<EquilibriumPoint> points;
    std::vector<BifurcationPoint> detected;
    std::string stop_reason;

    SystemParams params_at(double value) const { return with(base, free, value); }
};

/// Eigen-decomposition summary of jacobian_full at an equilibrium, eigenvalues sorted
/// by decreasing real part.
std::array<Complex, 4> equilibrium_spectrum(const PhaseState& x, const SystemParams& p);

/// Newton at fixed parameters. Throws NumericsError(NewtonDivergence).
PhaseState solve_equilibrium(PhaseState guess, const SystemParams& p, double tol = 1e-12);

/// Pseudo-arclength continuation of equilibria in `free` over [lo, hi].
/// `start` must be an equilibrium to within the Newton tolerance. `direction`
/// (+1/-1) picks the initial sense of the free parameter unless `initial_tangent`
/// is given. Throws NumericsError(NewtonDivergence) when the start does not converge
/// and NumericsError(StepUnderflow) when the very first step cannot be taken.
EquilibriumBranch continue_equilibria(const PhaseState& start, const SystemParams& p, Param free, double lo,
                                      double hi, const ContinuationOptions& opts = {}, int direction = +1,
                                      const Tangent5* initial_tangent = nullptr);

/// Zero-eigenvalue points (Fold / Pitchfork) and Hopf points, each localised by
/// bisection along the arclength to |d param| < opts.loc_tol.
std::vector<BifurcationPoint> detect_equilibrium_bifurcations(const EquilibriumBranch& branch,
                                                              const ContinuationOptions& opts = {});

/// Continues the branch emanating from a branch point along its null direction.
EquilibriumBranch switch_branch(const BifurcationPoint& bp, double lo, double hi,
                                const ContinuationOptions& opts = {}, double step = 1e-3, int side = +1);

/// Exchange image sigma of every point of a branch (the mirror branch of an asymmetric one).
EquilibriumBranch mirror(const EquilibriumBranch& branch);

/// Residual of vector_field at each point; used by equivariance checks.
double max_residual(const EquilibriumBranch& branch);

void write_equilibrium_branch_csv(const EquilibriumBranch& br, const std::string& path, const std::string& comment);

}  // namespace cvdp
