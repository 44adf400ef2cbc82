#include "cvdp/collocation.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace cvdp {

namespace {

constexpr double kGroupNorm = 1e3;

std::array<Complex, 4> sorted(std::vector<Complex> mu) {
    std::sort(mu.begin(), mu.end(), [](const Complex& l, const Complex& r) {
        if (std::abs(l) != std::abs(r)) return std::abs(l) > std::abs(r);
        return l.imag() > r.imag();
    });
    mu.resize(4, Complex(0.0, 0.0));
    std::array<Complex, 4> out;
    std::copy_n(mu.begin(), 4, out.begin());
    return out;
}

}  // namespace

std::array<Complex, 4> floquet_multipliers(const std::vector<Eigen::Matrix4d>& factors) {
    std::vector<Eigen::Matrix4d> groups;
    Eigen::Matrix4d P = Eigen::Matrix4d::Identity();
    int in_group = 0;
    for (const Eigen::Matrix4d& M : factors) {
        const Eigen::Matrix4d next = M * P;
        if (in_group > 0 && next.norm() > kGroupNorm) {
            groups.push_back(P);
            P = M;
            in_group = 1;
        } else {
            P = next;
            ++in_group;
        }
    }
    groups.push_back(P);
    const int K = static_cast<int>(groups.size());

    if (K == 1) {
        Eigen::EigenSolver<Eigen::Matrix4d> es(P, false);
        std::vector<Complex> mu(4);
        for (int i = 0; i < 4; ++i) mu[i] = es.eigenvalues()[i];
        return sorted(mu);
    }

    // x_{g+1} = P_g x_g around the cycle: eigenvalues of the lifted matrix are the K-th
    // roots of the monodromy eigenvalues. Each multiplier has exactly one root with
    // argument in (-pi/K, pi/K].
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(4 * K, 4 * K);
    for (int g = 0; g < K; ++g) C.block<4, 4>(4 * ((g + 1) % K), 4 * g) = groups[g];
    Eigen::EigenSolver<Eigen::MatrixXd> es(C, false);
    const double sector = M_PI / K;
    struct Root {
        double logr, theta;
    };
    std::vector<Root> roots;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const Complex l = es.eigenvalues()[i];
        const double r = std::abs(l);
        if (r == 0.0) continue;
        const double th = std::arg(l);
        if (std::abs(th) <= sector * (1.0 + 1e-9)) roots.push_back({std::log(r), th});
    }
    std::sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) { return a.logr > b.logr; });
    // A negative real multiplier has two boundary roots at +-pi/K; keep one.
    if (roots.size() > 4) {
        std::vector<Root> kept;
        for (const Root& r : roots) {
            bool dup = false;
            for (const Root& k : kept)
                if (std::abs(std::abs(r.theta) - sector) < 1e-6 * sector && std::abs(r.theta + k.theta) < 1e-6 * sector &&
                    std::abs(r.logr - k.logr) < 1e-8 * std::max(1.0, std::abs(k.logr)))
                    dup = true;
            if (!dup) kept.push_back(r);
        }
        roots.swap(kept);
    }
    std::vector<Complex> mu;
    for (const Root& r : roots) {
        if (mu.size() == 4) break;
        const double mag = std::exp(K * r.logr);
        const double th = K * r.theta;
        mu.push_back(std::abs(std::abs(th) - M_PI) < 1e-9 ? Complex(-mag, 0.0) : std::polar(mag, th));
    }
    return sorted(mu);
}

void attach_floquet(PeriodicOrbit& orb, const CollocationSystem& sys, const Vec& z) {
    orb.multipliers = floquet_multipliers(sys.transfer_matrices(z));
    orb.floquet_ok = true;
    for (const Complex& mu : orb.multipliers)
        if (std::isnan(mu.real()) || std::isnan(mu.imag())) orb.floquet_ok = false;
    const int t = orb.trivial_index();
    orb.stable = orb.floquet_ok;
    for (int i = 0; i < 4; ++i)
        if (i != t && !(std::abs(orb.multipliers[i]) < 1.0 - 1e-6)) orb.stable = false;
}

}  // namespace cvdp
