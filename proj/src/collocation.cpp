#include "cvdp/collocation.hpp"

#include "cvdp/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace cvdp {

namespace {

CollocationTables build_tables(int m) {
    CollocationTables t;
    t.m = m;
    // Golub-Welsch on [-1, 1], then mapped to [0, 1].
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, m);
    for (int k = 1; k < m; ++k) {
        const double beta = k / std::sqrt(4.0 * k * k - 1.0);
        jac(k, k - 1) = jac(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    for (int k = 0; k < m; ++k) {
        t.gauss.push_back(0.5 * (es.eigenvalues()[k] + 1.0));
        t.weights.push_back(es.eigenvectors()(0, k) * es.eigenvectors()(0, k));
    }
    t.L.resize(m, m + 1);
    t.D.resize(m, m + 1);
    for (int k = 0; k < m; ++k) {
        const Eigen::VectorXd l = lagrange_basis(m, t.gauss[k]);
        t.L.row(k) = l.transpose();
        for (int i = 0; i <= m; ++i) {
            const double ti = static_cast<double>(i) / m;
            double d = 0.0;
            for (int r = 0; r <= m; ++r) {
                if (r == i) continue;
                double prod = 1.0 / (ti - static_cast<double>(r) / m);
                for (int l2 = 0; l2 <= m; ++l2) {
                    if (l2 == i || l2 == r) continue;
                    const double tl = static_cast<double>(l2) / m;
                    prod *= (t.gauss[k] - tl) / (ti - tl);
                }
                d += prod;
            }
            t.D(k, i) = d;
        }
    }
    t.quad = Eigen::VectorXd::Zero(m + 1);
    for (int k = 0; k < m; ++k) t.quad += t.weights[k] * t.L.row(k).transpose();
    t.mth.resize(m + 1);
    double fact = 1.0;
    for (int r = 2; r <= m; ++r) fact *= r;
    for (int i = 0; i <= m; ++i) {
        double den = 1.0;
        for (int l2 = 0; l2 <= m; ++l2)
            if (l2 != i) den *= static_cast<double>(i - l2) / m;
        t.mth[i] = fact / den;
    }
    return t;
}

int locate(const std::vector<double>& mesh, double tau) {
    const int n = static_cast<int>(mesh.size()) - 1;
    const auto it = std::upper_bound(mesh.begin(), mesh.end(), tau);
    return std::clamp(static_cast<int>(it - mesh.begin()) - 1, 0, n - 1);
}

double wrap01(double tau) {
    double t = tau - std::floor(tau);
    if (t >= 1.0) t = 0.0;
    return t;
}

PhaseState node_of(const NodeMatrix& nodes, int m, int n_int, int j, int i) {
    const int c = (j * m + i) % (n_int * m);
    return nodes.col(c);
}

PhaseState eval_nodes(const std::vector<double>& mesh, int m, const NodeMatrix& nodes, double tau) {
    const double t = wrap01(tau);
    const int n = static_cast<int>(mesh.size()) - 1;
    const int j = locate(mesh, t);
    const double h = mesh[j + 1] - mesh[j];
    const Eigen::VectorXd l = lagrange_basis(m, (t - mesh[j]) / h);
    PhaseState u = PhaseState::Zero();
    for (int i = 0; i <= m; ++i) u += l[i] * node_of(nodes, m, n, j, i);
    return u;
}

}  // namespace

const CollocationTables& CollocationTables::get(int m) {
    static std::mutex mu;
    static std::map<int, CollocationTables> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(m);
    if (it == cache.end()) it = cache.emplace(m, build_tables(m)).first;
    return it->second;
}

Eigen::VectorXd lagrange_basis(int m, double s) {
    Eigen::VectorXd l(m + 1);
    for (int i = 0; i <= m; ++i) {
        const double ti = static_cast<double>(i) / m;
        double p = 1.0;
        for (int r = 0; r <= m; ++r) {
            if (r == i) continue;
            const double tr = static_cast<double>(r) / m;
            p *= (s - tr) / (ti - tr);
        }
        l[i] = p;
    }
    return l;
}

std::vector<double> uniform_mesh(int n) {
    std::vector<double> mesh(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) mesh[j] = static_cast<double>(j) / n;
    mesh[n] = 1.0;
    return mesh;
}

PhaseState PeriodicOrbit::node(int j, int i) const { return origin + node_of(nodes, degree, intervals(), j, i); }

PhaseState PeriodicOrbit::eval(double tau) const { return origin + eval_nodes(mesh, degree, nodes, tau); }

PhaseState PeriodicOrbit::deriv(double tau) const {
    const double t = wrap01(tau);
    const int j = locate(mesh, t);
    const double h = mesh[j + 1] - mesh[j];
    const double s = (t - mesh[j]) / h;
    const int m = degree;
    PhaseState du = PhaseState::Zero();
    for (int i = 0; i <= m; ++i) {
        const double ti = static_cast<double>(i) / m;
        double d = 0.0;
        for (int r = 0; r <= m; ++r) {
            if (r == i) continue;
            double prod = 1.0 / (ti - static_cast<double>(r) / m);
            for (int l2 = 0; l2 <= m; ++l2) {
                if (l2 == i || l2 == r) continue;
                const double tl = static_cast<double>(l2) / m;
                prod *= (s - tl) / (ti - tl);
            }
            d += prod;
        }
        du += d * node_of(nodes, m, intervals(), j, i);
    }
    return du / h;
}

std::vector<PhaseState> PeriodicOrbit::sample(int per_interval, std::vector<double>* taus) const {
    std::vector<PhaseState> out;
    out.reserve(static_cast<std::size_t>(intervals() * per_interval));
    if (taus) taus->clear();
    for (int j = 0; j < intervals(); ++j) {
        const double h = mesh[j + 1] - mesh[j];
        for (int q = 0; q < per_interval; ++q) {
            const double tau = mesh[j] + h * q / per_interval;
            out.push_back(eval(tau));
            if (taus) taus->push_back(tau);
        }
    }
    return out;
}

double PeriodicOrbit::max_coord(int c) const {
    double best = -INFINITY;
    for (const PhaseState& u : sample(8)) best = std::max(best, u[c]);
    return best;
}

double PeriodicOrbit::min_coord(int c) const {
    double best = INFINITY;
    for (const PhaseState& u : sample(8)) best = std::min(best, u[c]);
    return best;
}

double PeriodicOrbit::distance_to(const PhaseState& x, double* tau_at) const {
    // Relative to the origin, so distances far below the size of x stay resolved.
    const PhaseState xr = x - origin;
    std::vector<double> taus;
    const std::vector<PhaseState> pts = sample(8, &taus);
    std::size_t best = 0;
    double dbest = INFINITY;
    for (std::size_t q = 0; q < pts.size(); ++q) {
        const double d = (eval_nodes(mesh, degree, nodes, taus[q]) - xr).squaredNorm();
        if (d < dbest) {
            dbest = d;
            best = q;
        }
    }
    const std::size_t nq = taus.size();
    double lo = taus[(best + nq - 1) % nq], hi = taus[(best + 1) % nq];
    if (hi <= lo) hi += 1.0;
    if (lo > taus[best]) lo -= 1.0;
    auto dist = [&](double t) { return (eval_nodes(mesh, degree, nodes, t) - xr).squaredNorm(); };
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    double fc = dist(c), fd = dist(d);
    for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = dist(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = dist(d);
        }
    }
    const double tm = 0.5 * (lo + hi);
    double dm = dist(tm);
    double tau = tm;
    if (dbest < dm) {
        dm = dbest;
        tau = taus[best];
    }
    if (tau_at) *tau_at = wrap01(tau);
    return std::sqrt(dm);
}

PhaseState PeriodicOrbit::argmax_x1() const {
    PhaseState best = node(0, 0);
    for (const PhaseState& u : sample(8))
        if (u[0] > best[0]) best = u;
    return best;
}

int PeriodicOrbit::trivial_index() const {
    int k = 0;
    for (int i = 1; i < 4; ++i)
        if (std::abs(multipliers[i] - 1.0) < std::abs(multipliers[k] - 1.0)) k = i;
    return k;
}

double PeriodicOrbit::dominant_nontrivial_modulus() const {
    if (!floquet_ok) return 0.0;
    const int t = trivial_index();
    double r = 0.0;
    for (int i = 0; i < 4; ++i)
        if (i != t) r = std::max(r, std::abs(multipliers[i]));
    return r;
}

NodeMatrix interpolate_nodes(const std::vector<double>& mesh, int m, const NodeMatrix& nodes,
                             const std::vector<double>& new_mesh) {
    const int n = static_cast<int>(new_mesh.size()) - 1;
    NodeMatrix out(4, n * m);
    for (int j = 0; j < n; ++j) {
        const double h = new_mesh[j + 1] - new_mesh[j];
        for (int i = 0; i < m; ++i)
            out.col(j * m + i) = eval_nodes(mesh, m, nodes, new_mesh[j] + h * i / m);
    }
    return out;
}

PeriodicOrbit remesh(const PeriodicOrbit& orb, const std::vector<double>& new_mesh) {
    PeriodicOrbit out = orb;
    out.nodes = interpolate_nodes(orb.mesh, orb.degree, orb.nodes, new_mesh);
    out.mesh = new_mesh;
    out.floquet_ok = false;
    return out;
}

namespace {

/// Floored density |u^(m+1)|^(1/(m+1)) per interval and its running integral over the mesh.
struct MeshDensity {
    std::vector<double> dens, cum;
    bool ok = false;
};

MeshDensity mesh_density(const PeriodicOrbit& orb, double floor_fraction) {
    const int N = orb.intervals();
    const int m = orb.degree;
    const CollocationTables& tb = CollocationTables::get(m);
    std::vector<PhaseState> dm(N);
    std::vector<double> h(N);
    for (int j = 0; j < N; ++j) {
        h[j] = orb.mesh[j + 1] - orb.mesh[j];
        PhaseState d = PhaseState::Zero();
        for (int i = 0; i <= m; ++i) d += tb.mth[i] * orb.node(j, i);
        dm[j] = d / std::pow(h[j], m);
    }
    // jump[j] sits on breakpoint j, between intervals j-1 and j.
    std::vector<double> jump(N);
    for (int j = 0; j < N; ++j) {
        const int p = (j + N - 1) % N;
        jump[j] = (dm[j] - dm[p]).lpNorm<Eigen::Infinity>() / (0.5 * (h[j] + h[p]));
    }
    MeshDensity md;
    md.dens.resize(N);
    double total = 0.0;
    for (int j = 0; j < N; ++j) {
        md.dens[j] = std::pow(0.5 * (jump[j] + jump[(j + 1) % N]), 1.0 / (m + 1));
        total += md.dens[j] * h[j];
    }
    if (!(total > 0.0) || !std::isfinite(total)) return md;
    const double floor = floor_fraction * total;
    md.cum.assign(N + 1, 0.0);
    for (int j = 0; j < N; ++j) {
        md.dens[j] = std::max(md.dens[j], floor);
        md.cum[j + 1] = md.cum[j] + md.dens[j] * h[j];
    }
    md.ok = true;
    return md;
}

}  // namespace

std::vector<double> adapted_mesh(const PeriodicOrbit& orb, int n, double floor_fraction) {
    const int N = orb.intervals();
    const MeshDensity md = mesh_density(orb, floor_fraction);
    if (!md.ok) return uniform_mesh(n);
    const std::vector<double>& dens = md.dens;
    const std::vector<double>& cum = md.cum;
    std::vector<double> out(static_cast<std::size_t>(n) + 1);
    out[0] = 0.0;
    out[n] = 1.0;
    int j = 0;
    for (int q = 1; q < n; ++q) {
        const double target = cum[N] * q / n;
        while (j < N - 1 && cum[j + 1] < target) ++j;
        out[q] = orb.mesh[j] + (target - cum[j]) / dens[j];
    }
    for (int q = 1; q <= n; ++q)
        if (!(out[q] > out[q - 1])) throw NumericsError(NumericsFailure::MeshAdaptationFailure, "degenerate mesh");
    return out;
}

// ---------------------------------------------------------------------------

CollocationSystem::CollocationSystem(std::vector<double> mesh, int m, SystemParams base, std::vector<FreeVar> free,
                                     double fixed_period)
    : mesh_(std::move(mesh)), m_(m), base_(base), free_(std::move(free)), fixed_period_(fixed_period),
      shifted_(base_.identical()), ref_deriv_(NodeMatrix::Zero(4, static_cast<Eigen::Index>(intervals()) * m)) {}

PhaseState CollocationSystem::origin(const SystemParams& p) const {
    return shifted_ ? symmetric_equilibrium(p) : PhaseState::Zero();
}

PhaseState CollocationSystem::field(const PhaseState& w, const SystemParams& p) const {
    return shifted_ ? vector_field_about_e0(w, p) : vector_field(w, p);
}

PhaseState CollocationSystem::field_param(const PhaseState& w, const SystemParams& p, Param q) const {
    const PhaseState u = origin(p) + w;
    PhaseState d = param_derivative(u, p, q);
    // The origin E0 moves with a: x0 = a, y0 = -cubic(a).
    if (shifted_ && q == Param::a) {
        const double dy0 = -(1.0 - p.a1 * p.a1);
        d += jacobian_full(u, p) * PhaseState(1.0, dy0, 1.0, dy0);
    }
    return d;
}

void CollocationSystem::set_reference(const NodeMatrix& ref) {
    const CollocationTables& tb = CollocationTables::get(m_);
    const int N = intervals();
    for (int j = 0; j < N; ++j) {
        const double h = mesh_[j + 1] - mesh_[j];
        for (int k = 0; k < m_; ++k) {
            PhaseState d = PhaseState::Zero();
            for (int i = 0; i <= m_; ++i) d += tb.D(k, i) * node_of(ref, m_, N, j, i);
            ref_deriv_.col(j * m_ + k) = d / h;
        }
    }
}

PhaseState CollocationSystem::node(const Vec& z, int j, int i) const {
    const int c = (j * m_ + i) % (intervals() * m_);
    return z.segment<4>(4 * c);
}

int CollocationSystem::index_of(const FreeVar& v) const {
    for (std::size_t q = 0; q < free_.size(); ++q) {
        if (free_[q].period && v.period) return n_nodes() + static_cast<int>(q);
        if (!free_[q].period && !v.period && free_[q].param == v.param) return n_nodes() + static_cast<int>(q);
    }
    return -1;
}

double CollocationSystem::period(const Vec& z) const {
    const int k = index_of(FreeVar::T());
    return k >= 0 ? z[k] : fixed_period_;
}

SystemParams CollocationSystem::params(const Vec& z) const {
    SystemParams p = base_;
    for (std::size_t q = 0; q < free_.size(); ++q)
        if (!free_[q].period) p = with(p, free_[q].param, z[n_nodes() + static_cast<Eigen::Index>(q)]);
    return p;
}

Vec CollocationSystem::pack(const PeriodicOrbit& orb) const {
    Vec z(n_unknowns());
    const PhaseState shift = orb.origin - origin(orb.params);
    for (int c = 0; c < intervals() * m_; ++c) z.segment<4>(4 * c) = orb.nodes.col(c) + shift;
    for (std::size_t q = 0; q < free_.size(); ++q)
        z[n_nodes() + static_cast<Eigen::Index>(q)] = free_[q].period ? orb.period : get(orb.params, free_[q].param);
    return z;
}

PeriodicOrbit CollocationSystem::unpack(const Vec& z) const {
    PeriodicOrbit orb;
    orb.mesh = mesh_;
    orb.degree = m_;
    orb.nodes.resize(4, intervals() * m_);
    for (int c = 0; c < intervals() * m_; ++c) orb.nodes.col(c) = z.segment<4>(4 * c);
    orb.period = period(z);
    orb.params = params(z);
    orb.origin = origin(orb.params);
    return orb;
}

Vec CollocationSystem::residual(const Vec& z) const {
    const CollocationTables& tb = CollocationTables::get(m_);
    const int N = intervals();
    const double T = period(z);
    const SystemParams p = params(z);
    Vec r(n_equations());
    double phase = 0.0;
    for (int j = 0; j < N; ++j) {
        const double h = mesh_[j + 1] - mesh_[j];
        for (int k = 0; k < m_; ++k) {
            PhaseState u = PhaseState::Zero(), du = PhaseState::Zero();
            for (int i = 0; i <= m_; ++i) {
                const PhaseState v = node(z, j, i);
                u += tb.L(k, i) * v;
                du += tb.D(k, i) * v;
            }
            r.segment<4>(4 * (j * m_ + k)) = du / h - T * field(u, p);
            phase += h * tb.weights[k] * u.dot(ref_deriv_.col(j * m_ + k));
        }
    }
    r[n_nodes()] = phase;
    return r;
}

SpMat CollocationSystem::jacobian(const Vec& z) const {
    const CollocationTables& tb = CollocationTables::get(m_);
    const int N = intervals();
    const int nn = n_nodes();
    const double T = period(z);
    const SystemParams p = params(z);
    const int iT = index_of(FreeVar::T());
    const PhaseState u0 = origin(p);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(N) * m_ * (16 * (m_ + 1) + 4 * (free_.size() + 1)) + 4 * nn);
    for (int j = 0; j < N; ++j) {
        const double h = mesh_[j + 1] - mesh_[j];
        for (int k = 0; k < m_; ++k) {
            const int row = 4 * (j * m_ + k);
            PhaseState u = PhaseState::Zero();
            for (int i = 0; i <= m_; ++i) u += tb.L(k, i) * node(z, j, i);
            const Eigen::Matrix4d Jf = jacobian_full(u0 + u, p);
            const PhaseState ref = ref_deriv_.col(j * m_ + k);
            for (int i = 0; i <= m_; ++i) {
                const int col = 4 * ((j * m_ + i) % (N * m_));
                const Eigen::Matrix4d blk = (tb.D(k, i) / h) * Eigen::Matrix4d::Identity() - T * tb.L(k, i) * Jf;
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b)
                        if (blk(a, b) != 0.0) trip.emplace_back(row + a, col + b, blk(a, b));
                const double wq = h * tb.weights[k] * tb.L(k, i);
                for (int b = 0; b < 4; ++b)
                    if (ref[b] != 0.0) trip.emplace_back(nn, col + b, wq * ref[b]);
            }
            if (iT >= 0) {
                const PhaseState f = field(u, p);
                for (int a = 0; a < 4; ++a) trip.emplace_back(row + a, iT, -f[a]);
            }
            for (std::size_t q = 0; q < free_.size(); ++q) {
                if (free_[q].period) continue;
                const PhaseState dp = field_param(u, p, free_[q].param);
                for (int a = 0; a < 4; ++a)
                    if (dp[a] != 0.0) trip.emplace_back(row + a, nn + static_cast<int>(q), -T * dp[a]);
            }
        }
    }
    SpMat J(n_equations(), n_unknowns());
    J.setFromTriplets(trip.begin(), trip.end());
    J.makeCompressed();
    return J;
}

std::vector<Eigen::Matrix4d> CollocationSystem::transfer_matrices(const Vec& z) const {
    const CollocationTables& tb = CollocationTables::get(m_);
    const int N = intervals();
    const double T = period(z);
    const SystemParams p = params(z);
    std::vector<Eigen::Matrix4d> out(N);
    const PhaseState u0 = origin(p);
    const int n = 4 * m_;
    Eigen::MatrixXd A0(n, 4), B(n, n);
    for (int j = 0; j < N; ++j) {
        const double h = mesh_[j + 1] - mesh_[j];
        for (int k = 0; k < m_; ++k) {
            PhaseState u = PhaseState::Zero();
            for (int i = 0; i <= m_; ++i) u += tb.L(k, i) * node(z, j, i);
            const Eigen::Matrix4d Jf = jacobian_full(u0 + u, p);
            for (int i = 0; i <= m_; ++i) {
                const Eigen::Matrix4d blk = (tb.D(k, i) / h) * Eigen::Matrix4d::Identity() - T * tb.L(k, i) * Jf;
                if (i == 0)
                    A0.block<4, 4>(4 * k, 0) = blk;
                else
                    B.block<4, 4>(4 * k, 4 * (i - 1)) = blk;
            }
        }
        const Eigen::MatrixXd X = B.partialPivLu().solve(-A0);
        out[j] = X.bottomRows<4>();
    }
    return out;
}

Vec CollocationSystem::weights(double period_scale) const {
    const CollocationTables& tb = CollocationTables::get(m_);
    const int N = intervals();
    Vec w = Vec::Ones(n_unknowns());
    for (int j = 0; j < N; ++j) {
        const double h = mesh_[j + 1] - mesh_[j];
        const double hp = mesh_[(j + N - 1) % N + 1] - mesh_[(j + N - 1) % N];
        for (int i = 0; i < m_; ++i) {
            double q = h * tb.quad[i];
            if (i == 0) q += hp * tb.quad[m_];
            w.segment<4>(4 * (j * m_ + i)).setConstant(q);
        }
    }
    for (std::size_t q = 0; q < free_.size(); ++q)
        if (free_[q].period) w[n_nodes() + static_cast<Eigen::Index>(q)] = 1.0 / (period_scale * period_scale);
    return w;
}

}  // namespace cvdp
