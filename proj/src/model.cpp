#include "cvdp/model.hpp"

#include "cvdp/errors.hpp"

#include <cmath>
#include <string>

namespace cvdp {

const char* to_string(NumericsFailure f) {
    switch (f) {
        case NumericsFailure::InvalidParams: return "InvalidParams";
        case NumericsFailure::NonIdentical: return "NonIdentical";
        case NumericsFailure::NoSolution: return "NoSolution";
        case NumericsFailure::StepSizeUnderflow: return "StepSizeUnderflow";
        case NumericsFailure::Blowup: return "Blowup";
        case NumericsFailure::TooShort: return "TooShort";
        case NumericsFailure::NewtonDivergence: return "NewtonDivergence";
        case NumericsFailure::StepUnderflow: return "StepUnderflow";
        case NumericsFailure::MeshAdaptationFailure: return "MeshAdaptationFailure";
        case NumericsFailure::NotASaddle: return "NotASaddle";
    }
    return "Unknown";
}

SystemParams SystemParams::symmetric(double eps, double a, double b, double k) {
    return SystemParams{eps, eps, a, a, b, b, k, k};
}

bool SystemParams::identical() const noexcept {
    return eps1 == eps2 && a1 == a2 && b1 == b2 && k1 == k2;
}

void SystemParams::validate() const {
    for (double v : {eps1, eps2, a1, a2, b1, b2, k1, k2}) {
        if (!std::isfinite(v)) throw NumericsError(NumericsFailure::InvalidParams, "non-finite parameter");
    }
    if (!(eps1 > 0 && eps2 > 0)) throw NumericsError(NumericsFailure::InvalidParams, "eps must be > 0");
    if (!(k1 > 0 && k2 > 0)) throw NumericsError(NumericsFailure::InvalidParams, "k must be > 0");
}

void SystemParams::require_identical(std::string_view who) const {
    if (!identical()) {
        throw NumericsError(NumericsFailure::NonIdentical,
                            std::string(who) + " requires identical oscillators");
    }
}

Param parse_param(std::string_view name) {
    if (name == "eps") return Param::eps;
    if (name == "a") return Param::a;
    if (name == "b") return Param::b;
    if (name == "k") return Param::k;
    throw ConfigError("unknown parameter '" + std::string(name) + "'");
}

std::string_view to_string(Param p) {
    switch (p) {
        case Param::eps: return "eps";
        case Param::a: return "a";
        case Param::b: return "b";
        case Param::k: return "k";
    }
    return "?";
}

double get(const SystemParams& p, Param which) {
    switch (which) {
        case Param::eps: return p.eps1;
        case Param::a: return p.a1;
        case Param::b: return p.b1;
        case Param::k: return p.k1;
    }
    return 0.0;
}

SystemParams with(SystemParams p, Param which, double value) {
    switch (which) {
        case Param::eps: p.eps1 = p.eps2 = value; break;
        case Param::a: p.a1 = p.a2 = value; break;
        case Param::b: p.b1 = p.b2 = value; break;
        case Param::k: p.k1 = p.k2 = value; break;
    }
    return p;
}

PhaseState vector_field(const PhaseState& s, const SystemParams& p) noexcept {
    const double x1 = s[0], y1 = s[1], x2 = s[2], y2 = s[3];
    return PhaseState(y1 + cubic(x1),
                      p.eps1 * (p.a1 - x1 + p.b1 * std::tanh(p.k2 * (p.a2 - x2))),
                      y2 + cubic(x2),
                      p.eps2 * (p.a2 - x2 + p.b2 * std::tanh(p.k1 * (p.a1 - x1))));
}

PhaseState vector_field_about_e0(const PhaseState& w, const SystemParams& p) noexcept {
    const double a = p.a1;
    // cubic(a + xi) - cubic(a) = xi (1 - a^2 - a xi - xi^2/3)
    auto dcubic = [a](double xi) { return xi * (1.0 - a * a - a * xi - xi * xi / 3.0); };
    return PhaseState(w[1] + dcubic(w[0]),
                      -p.eps1 * (w[0] + p.b1 * std::tanh(p.k2 * w[2])),
                      w[3] + dcubic(w[2]),
                      -p.eps2 * (w[2] + p.b2 * std::tanh(p.k1 * w[0])));
}

namespace {
inline double sech2(double z) noexcept {
    const double t = std::tanh(z);
    return 1.0 - t * t;
}
}  // namespace

JacobianFull jacobian_full(const PhaseState& s, const SystemParams& p) noexcept {
    const double x1 = s[0], x2 = s[2];
    JacobianFull j = JacobianFull::Zero();
    j(0, 0) = 1.0 - x1 * x1;
    j(0, 1) = 1.0;
    j(1, 0) = -p.eps1;
    j(1, 2) = -p.eps1 * p.b1 * p.k2 * sech2(p.k2 * (p.a2 - x2));
    j(2, 2) = 1.0 - x2 * x2;
    j(2, 3) = 1.0;
    j(3, 2) = -p.eps2;
    j(3, 0) = -p.eps2 * p.b2 * p.k1 * sech2(p.k1 * (p.a1 - x1));
    return j;
}

PhaseState param_derivative(const PhaseState& s, const SystemParams& p, Param which) noexcept {
    const double x1 = s[0], x2 = s[2];
    const double z1 = p.k2 * (p.a2 - x2);  // argument seen by oscillator 1
    const double z2 = p.k1 * (p.a1 - x1);
    PhaseState d = PhaseState::Zero();
    switch (which) {
        case Param::eps:
            d[1] = p.a1 - x1 + p.b1 * std::tanh(z1);
            d[3] = p.a2 - x2 + p.b2 * std::tanh(z2);
            break;
        case Param::a:
            d[1] = p.eps1 * (1.0 + p.b1 * p.k2 * sech2(z1));
            d[3] = p.eps2 * (1.0 + p.b2 * p.k1 * sech2(z2));
            break;
        case Param::b:
            d[1] = p.eps1 * std::tanh(z1);
            d[3] = p.eps2 * std::tanh(z2);
            break;
        case Param::k:
            d[1] = p.eps1 * p.b1 * (p.a2 - x2) * sech2(z1);
            d[3] = p.eps2 * p.b2 * (p.a1 - x1) * sech2(z2);
            break;
    }
    return d;
}

PhaseState symmetric_equilibrium(const SystemParams& p) {
    p.require_identical("symmetric_equilibrium");
    const double a = p.a1;
    const double y = -cubic(a);
    return PhaseState(a, y, a, y);
}

double single_oscillator_hopf_a() noexcept { return -1.0; }

double forced_oscillator_hopf_x2(const SystemParams& p) {
    p.require_identical("forced_oscillator_hopf_x2");
    const double a = p.a1, b = p.b1, k = p.k1;
    // a - x1* + b tanh(k (a - x2)) = 0 with x1* = -1.
    const double arg = b == 0.0 ? INFINITY : (-1.0 - a) / b;
    if (!(std::abs(arg) < 1.0)) {
        throw NumericsError(NumericsFailure::NoSolution,
                            "coupling too weak to move oscillator 1 onto its Hopf point");
    }
    return a - std::atanh(arg) / k;
}

}  // namespace cvdp
