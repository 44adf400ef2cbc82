#include "cvdp/manifold.hpp"

#include "cvdp/errors.hpp"
#include "cvdp/io.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace cvdp {

void ManifoldOptions::validate() const {
    if (!(offset > 0) || !std::isfinite(offset)) throw ConfigError("manifold offset must be > 0");
    solver.validate();
}

ManifoldBranch unstable_manifold(const SystemParams& p, const ManifoldOptions& opts) {
    opts.validate();
    p.require_identical("unstable_manifold");
    ManifoldBranch mb;
    mb.params = p;
    mb.offset = opts.offset;
    mb.equilibrium = symmetric_equilibrium(p);

    const Eigen::EigenSolver<JacobianFull> es(jacobian_full(mb.equilibrium, p));
    int unstable = -1, count = 0;
    for (int i = 0; i < 4; ++i)
        if (es.eigenvalues()[i].real() > 0) {
            unstable = i;
            ++count;
        }
    if (count != 1)
        throw NumericsError(NumericsFailure::NotASaddle,
                            "E0 has " + std::to_string(count) + " eigenvalues with positive real part");
    const Complex lambda = es.eigenvalues()[unstable];
    if (std::abs(lambda.imag()) > 1e-12 * std::max(1.0, std::abs(lambda)))
        throw NumericsError(NumericsFailure::NotASaddle, "unstable eigenvalue of E0 is not real");
    mb.eigenvalue = lambda.real();

    PhaseState v = es.eigenvectors().col(unstable).real();
    const PhaseState anti = 0.5 * (v - swap_oscillators(v));
    if ((v - anti).norm() < 1e-8 * v.norm()) v = anti;
    v.normalize();
    if (v[0] < 0) v = -v;
    mb.direction = v;

    for (int k = 0; k < 2; ++k) {
        const double sign = k == 0 ? 1.0 : -1.0;
        mb.branches[k] = integrate(mb.equilibrium + sign * opts.offset * v, p, opts.solver);
    }
    return mb;
}

double distance_to_orbit(const Trajectory& traj, const PeriodicOrbit& orb, double t_from) {
    double worst = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.times[i] < t_from) continue;
        worst = std::max(worst, orb.distance_to(traj.states[i]));
        any = true;
    }
    if (!any) throw NumericsError(NumericsFailure::TooShort, "no trajectory points after t = " + io::fmt(t_from));
    return worst;
}

}  // namespace cvdp
