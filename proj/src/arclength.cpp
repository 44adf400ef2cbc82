#include "cvdp/continuation.hpp"

#include <Eigen/SparseLU>

namespace cvdp {

std::string_view to_string(BifurcationKind k) {
    switch (k) {
        case BifurcationKind::Fold: return "Fold";
        case BifurcationKind::Pitchfork: return "Pitchfork";
        case BifurcationKind::Hopf: return "Hopf";
        case BifurcationKind::SNPO: return "SNPO";
        case BifurcationKind::Torus: return "Torus";
        case BifurcationKind::HomoclinicApprox: return "HomoclinicApprox";
    }
    return "?";
}

namespace arc {

bool solve_bordered(const SpMat& J, const Vec& c, const Vec& r, double s, Vec& x) {
    const Eigen::Index n = J.rows();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(J.nonZeros() + c.size()));
    for (int k = 0; k < J.outerSize(); ++k)
        for (SpMat::InnerIterator it(J, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index j = 0; j < c.size(); ++j)
        if (c[j] != 0.0) trip.emplace_back(n, j, c[j]);
    SpMat A(n + 1, J.cols());
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::SparseLU<SpMat> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) return false;
    Vec rhs(n + 1);
    rhs.head(n) = r;
    rhs[n] = s;
    x = lu.solve(rhs);
    return lu.info() == Eigen::Success && x.allFinite();
}

Vec tangent(const SpMat& J, const Vec& orient, const Vec& weights) {
    Vec t;
    const Vec c = weights.cwiseProduct(orient);
    if (!solve_bordered(J, c, Vec::Zero(J.rows()), 1.0, t)) return orient;
    const double nrm = std::sqrt(t.dot(weights.cwiseProduct(t)));
    t /= nrm;
    if (t.dot(c) < 0) t = -t;
    return t;
}

SpMat to_sparse(const Eigen::MatrixXd& m) {
    SpMat s = m.sparseView(0.0, 0.0);
    s.makeCompressed();
    return s;
}

}  // namespace arc
}  // namespace cvdp
