#pragma once

// Types shared by equilibrium, periodic-orbit and two-parameter continuation.

#include "cvdp/model.hpp"

#include <Eigen/Sparse>

#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cvdp {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Complex = std::complex<double>;

enum class BifurcationKind { Fold, Pitchfork, Hopf, SNPO, Torus, HomoclinicApprox };
std::string_view to_string(BifurcationKind k);

struct BifurcationPoint {
    BifurcationKind kind = BifurcationKind::Fold;
    Param free = Param::b;
    double param = 0.0;  ///< location in the free parameter
    SystemParams params; ///< full parameter set at the point
    PhaseState state = PhaseState::Zero();  ///< equilibrium, or orbit point of maximal x1
    double period = 0.0;                    ///< orbits only
    std::vector<Complex> spectrum;          ///< eigenvalues (equilibria) or multipliers (orbits)
    std::string note;
};

struct ContinuationOptions {
    double ds0 = 1e-3;
    double ds_min = 1e-5;
    double ds_max = 5e-2;
    double newton_tol = 1e-10;
    int newton_max_iter = 12;
    /// Newton gives up once the residual has grown this many times.
    int newton_max_growth = 2;
    int max_points = 4000;
    /// Localisation tolerance on the free parameter for detected bifurcations.
    double loc_tol = 1e-8;
    bool detect = true;
};

namespace arc {

struct NewtonResult {
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

/// Solves the square system [J; c^T] x = [r; s] (J is n x (n+1)). Returns false when singular.
bool solve_bordered(const SpMat& J, const Vec& c, const Vec& r, double s, Vec& x);

/// Unit tangent (in the weighted norm) of the solution curve, oriented along `orient`.
Vec tangent(const SpMat& J, const Vec& orient, const Vec& weights);

/// Anything with residual(z) -> Vec (n) and jacobian(z) -> SpMat (n x (n+1)).
template <class P>
concept CurveProblem = requires(const P& p, const Vec& z) {
    { p.residual(z) } -> std::convertible_to<Vec>;
    { p.jacobian(z) } -> std::convertible_to<SpMat>;
};

/// Newton on F(z) = 0 with the pseudo-arclength constraint <w t0, z - z0> = ds.
template <CurveProblem P>
NewtonResult correct(const P& prob, Vec& z, const Vec& z0, const Vec& t0, double ds, const Vec& w,
                     double tol, int max_iter, double residual_scale = 1.0, int max_growth = 2) {
    NewtonResult res;
    const Vec wt = w.cwiseProduct(t0);
    double prev = INFINITY;
    int growth = 0;
    for (int it = 0; it < max_iter; ++it) {
        const Vec F = prob.residual(z);
        const double g = wt.dot(z - z0) - ds;
        const double rn = std::max(F.lpNorm<Eigen::Infinity>() / residual_scale, std::abs(g));
        res.residual = rn;
        res.iterations = it;
        if (!std::isfinite(rn)) return res;
        if (rn < tol) {
            res.converged = true;
            return res;
        }
        if (rn > prev) {
            if (++growth >= max_growth) return res;
        }
        prev = rn;
        Vec dz;
        if (!solve_bordered(prob.jacobian(z), wt, -F, -g, dz)) return res;
        z += dz;
    }
    const Vec F = prob.residual(z);
    res.residual = std::max(F.lpNorm<Eigen::Infinity>() / residual_scale, std::abs(wt.dot(z - z0) - ds));
    res.converged = res.residual < tol;
    res.iterations = max_iter;
    return res;
}

/// Newton on a square system F(z) = 0 (jacobian n x n).
template <class P>
NewtonResult solve_square(const P& prob, Vec& z, double tol, int max_iter, double residual_scale = 1.0) {
    NewtonResult res;
    double prev = INFINITY;
    int growth = 0;
    for (int it = 0; it <= max_iter; ++it) {
        const Vec F = prob.residual(z);
        const double rn = F.lpNorm<Eigen::Infinity>() / residual_scale;
        res.residual = rn;
        res.iterations = it;
        if (!std::isfinite(rn)) return res;
        if (rn < tol) {
            res.converged = true;
            return res;
        }
        if (it == max_iter) break;
        if (rn > prev && ++growth >= 2) return res;
        prev = rn;
        Eigen::SparseLU<SpMat> lu;
        SpMat J = prob.jacobian(z);
        J.makeCompressed();
        lu.compute(J);
        if (lu.info() != Eigen::Success) return res;
        const Vec dz = lu.solve(-F);
        if (lu.info() != Eigen::Success || !dz.allFinite()) return res;
        z += dz;
    }
    return res;
}

/// Dense matrix -> sparse with explicit zeros dropped.
SpMat to_sparse(const Eigen::MatrixXd& m);

}  // namespace arc
}  // namespace cvdp
