#pragma once

// Coupled van der Pol oscillators with mutual tanh inhibition:
//
//   x1' = y1 + (1 - x1^2/3) x1
//   y1' = eps1 (a1 - x1 + b1 tanh(k2 (a2 - x2)))
//   x2' = y2 + (1 - x2^2/3) x2
//   y2' = eps2 (a2 - x2 + b2 tanh(k1 (a1 - x1)))

#include <Eigen/Dense>

#include <string_view>

namespace cvdp {

/// A point (x1, y1, x2, y2) in phase space.
using PhaseState = Eigen::Vector4d;
/// Rows and columns ordered (x1, y1, x2, y2).
using JacobianFull = Eigen::Matrix4d;

struct SystemParams {
    double eps1 = 0.01, eps2 = 0.01;
    double a1 = -1.1, a2 = -1.1;
    double b1 = 0.3, b2 = 0.3;
    double k1 = 1.0, k2 = 1.0;

    /// Table-1 defaults: eps = 1e-2, a = -1.1, b = 0.3, k = 1 for both oscillators.
    static SystemParams table1() { return {}; }
    static SystemParams symmetric(double eps, double a, double b, double k);

    bool identical() const noexcept;
    /// Throws NumericsError(InvalidParams) unless eps_i > 0, k_i > 0 and all entries finite.
    void validate() const;
    /// Throws NumericsError(NonIdentical) unless identical().
    void require_identical(std::string_view who) const;

    bool operator==(const SystemParams&) const = default;
};

/// Parameters that can be varied symmetrically (both oscillators at once).
enum class Param { eps, a, b, k };

Param parse_param(std::string_view name);
std::string_view to_string(Param p);
/// Value of a symmetric parameter; reads the oscillator-1 copy.
double get(const SystemParams& p, Param which);
/// Sets both oscillator copies of a symmetric parameter.
SystemParams with(SystemParams p, Param which, double value);

/// The odd cubic (1 - x^2/3) x in the exact written form. Its extrema sit at x = +-1.
inline double cubic(double x) noexcept { return (1.0 - x * x / 3.0) * x; }

PhaseState vector_field(const PhaseState& s, const SystemParams& p) noexcept;
JacobianFull jacobian_full(const PhaseState& s, const SystemParams& p) noexcept;
/// vector_field(E0 + w) for identical parameters, written in deviations from E0 so that
/// it carries full relative precision for small w. No identical-parameter check.
PhaseState vector_field_about_e0(const PhaseState& w, const SystemParams& p) noexcept;
/// Partial derivative of the vector field with respect to a symmetric parameter.
PhaseState param_derivative(const PhaseState& s, const SystemParams& p, Param which) noexcept;

/// Oscillator exchange (x1, y1) <-> (x2, y2).
inline PhaseState swap_oscillators(const PhaseState& s) noexcept {
    return PhaseState(s[2], s[3], s[0], s[1]);
}

/// E0: x1 = x2 = a, y1 = y2 = -(1 - a^2/3) a. Independent of b and k.
PhaseState symmetric_equilibrium(const SystemParams& p);

/// Hopf point of an isolated oscillator on the a <= 0 side.
double single_oscillator_hopf_a() noexcept;

/// Value of x2 at which oscillator 1, with x2 frozen as an input, passes its Hopf
/// point x1* = -1. Throws NumericsError(NoSolution) when the coupling is too weak.
double forced_oscillator_hopf_x2(const SystemParams& p);

}  // namespace cvdp
