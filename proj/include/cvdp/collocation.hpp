#pragma once

// Periodic orbits as piecewise polynomials on [0, 1] in rescaled time tau = t / T,
// solved by orthogonal collocation at Gauss-Legendre points.

#include "cvdp/continuation.hpp"

#include <array>
#include <vector>

namespace cvdp {

using NodeMatrix = Eigen::Matrix<double, 4, Eigen::Dynamic>;

/// Lagrange nodes i/m (i = 0..m) and Gauss points of one mesh interval mapped to [0, 1].
struct CollocationTables {
    int m = 4;
    std::vector<double> gauss;    ///< m Gauss-Legendre points
    std::vector<double> weights;  ///< Gauss weights, summing to 1
    Eigen::MatrixXd L;            ///< L(k, i) = l_i(gauss_k), m x (m+1)
    Eigen::MatrixXd D;            ///< D(k, i) = l_i'(gauss_k)
    Eigen::VectorXd quad;         ///< integral of l_i over [0, 1]
    Eigen::VectorXd mth;          ///< m-th derivative of l_i (a constant)

    static const CollocationTables& get(int m);
};

/// Lagrange basis values of the nodes i/m at s in [0, 1].
Eigen::VectorXd lagrange_basis(int m, double s);

struct PeriodicOrbit {
    std::vector<double> mesh;  ///< N+1 breakpoints from 0 to 1
    int degree = 4;
    /// Node (j, i) sits at mesh[j] + (i/m) h_j and lives in column j*m + i. Node (j, m)
    /// is node (j+1, 0); the last interval closes on column 0, which is the periodicity.
    /// Stored relative to `origin`.
    NodeMatrix nodes;
    /// E0 for identical parameters (set by CollocationSystem::unpack), so that passages
    /// close to the symmetric saddle keep full relative precision; otherwise zero.
    PhaseState origin = PhaseState::Zero();
    double period = 0.0;
    SystemParams params;
    std::array<Complex, 4> multipliers{};
    bool floquet_ok = false;
    bool stable = false;
    double residual = 0.0;  ///< collocation residual divided by max(1, T)

    int intervals() const { return static_cast<int>(mesh.size()) - 1; }
    /// Absolute position of node (j, i).
    PhaseState node(int j, int i) const;
    /// tau is reduced modulo 1.
    PhaseState eval(double tau) const;
    /// Derivative with respect to tau.
    PhaseState deriv(double tau) const;
    /// `per_interval` equally spaced points in every interval (closing point excluded).
    std::vector<PhaseState> sample(int per_interval = 8, std::vector<double>* taus = nullptr) const;
    double max_coord(int c) const;
    double min_coord(int c) const;
    /// Euclidean distance from x to the orbit, refined by golden search per interval.
    double distance_to(const PhaseState& x, double* tau_at = nullptr) const;
    /// Orbit point of maximal x1.
    PhaseState argmax_x1() const;
    /// Nontrivial multiplier of largest modulus; 0 when Floquet data is missing.
    double dominant_nontrivial_modulus() const;
    /// Index of the multiplier closest to +1.
    int trivial_index() const;
};

std::vector<double> uniform_mesh(int n);

/// Samples the orbit onto a new mesh (same degree). Works on nodes in any fixed frame.
NodeMatrix interpolate_nodes(const std::vector<double>& mesh, int m, const NodeMatrix& nodes,
                             const std::vector<double>& new_mesh);
PeriodicOrbit remesh(const PeriodicOrbit& orb, const std::vector<double>& new_mesh);

/// Mesh with `n` intervals equidistributing |u^(m+1)|^(1/(m+1)) estimated from jumps of
/// the piecewise-constant m-th derivative. The density is floored at floor_fraction of
/// its mean so slow stretches keep a share of the points.
std::vector<double> adapted_mesh(const PeriodicOrbit& orb, int n, double floor_fraction = 0.05);

/// Unknown of a collocation problem that may be released.
struct FreeVar {
    bool period = true;
    Param param = Param::b;

    static FreeVar T() { return {true, Param::b}; }
    static FreeVar of(Param p) { return {false, p}; }
};

/// Collocation equations u' - T f(u, p) = 0 at the Gauss points plus the integral phase
/// condition  int u . u_ref' dtau = 0. Unknowns: node values, then the free variables in
/// the order given. Quantities not in the free list are fixed at their values in `base`
/// and `fixed_period`. For identical parameters the node unknowns are deviations from
/// E0(p) and the field is evaluated in that frame without cancellation.
class CollocationSystem {
public:
    CollocationSystem(std::vector<double> mesh, int m, SystemParams base, std::vector<FreeVar> free,
                      double fixed_period = 0.0);

    const std::vector<double>& mesh() const { return mesh_; }
    int degree() const { return m_; }
    int intervals() const { return static_cast<int>(mesh_.size()) - 1; }
    int n_nodes() const { return 4 * intervals() * m_; }
    int n_unknowns() const { return n_nodes() + static_cast<int>(free_.size()); }
    int n_equations() const { return n_nodes() + 1; }
    const std::vector<FreeVar>& free() const { return free_; }

    void set_reference(const NodeMatrix& ref_nodes);
    void set_reference(const PeriodicOrbit& ref) { set_reference(ref.nodes); }

    Vec pack(const PeriodicOrbit& orb) const;
    /// Orbit with nodes, period and params from z; Floquet data left empty.
    PeriodicOrbit unpack(const Vec& z) const;
    double period(const Vec& z) const;
    SystemParams params(const Vec& z) const;
    /// Index of the given free variable in z, or -1.
    int index_of(const FreeVar& v) const;

    Vec residual(const Vec& z) const;
    SpMat jacobian(const Vec& z) const;
    /// Per-interval discrete monodromy factors of the linearised collocation scheme.
    std::vector<Eigen::Matrix4d> transfer_matrices(const Vec& z) const;

    /// Arclength weights: quadrature weights on the nodes, 1/T_scale^2 for the period,
    /// 1 for parameters.
    Vec weights(double period_scale) const;

private:
    std::vector<double> mesh_;
    int m_;
    SystemParams base_;
    std::vector<FreeVar> free_;
    double fixed_period_;
    bool shifted_;
    NodeMatrix ref_deriv_;  ///< u_ref' at the Gauss points, column j*m + k

    PhaseState node(const Vec& z, int j, int i) const;
    PhaseState origin(const SystemParams& p) const;
    PhaseState field(const PhaseState& w, const SystemParams& p) const;
    /// Total derivative of the field in the node frame with respect to a parameter.
    PhaseState field_param(const PhaseState& w, const SystemParams& p, Param q) const;
};

/// Floquet multipliers from the per-interval transfer matrices. The factors are grouped
/// into products of moderate norm and the block-cyclic lifted eigenproblem is solved, so
/// products that over- or underflow are never formed.
std::array<Complex, 4> floquet_multipliers(const std::vector<Eigen::Matrix4d>& factors);

/// Computes multipliers and the stability flag (all nontrivial |mu| < 1 - 1e-6).
void attach_floquet(PeriodicOrbit& orb, const CollocationSystem& sys, const Vec& z);

}  // namespace cvdp
