#pragma once

// Singular limit eps -> 0: critical manifold, fold lines, reduced and desingularized
// slow flows, folded singularities.

#include "cvdp/model.hpp"

#include <array>
#include <complex>
#include <string>
#include <string_view>
#include <vector>

namespace cvdp {

enum class FoldLineId { L1Minus, L1Plus, L2Minus, L2Plus };
std::string_view to_string(FoldLineId id);

struct FoldLine {
    FoldLineId which;
    int coordinate;  ///< 0: the line is x1 = value; 1: x2 = value
    double value;    ///< exactly -1 or +1
};

/// The four lines x1 = -1, x1 = +1, x2 = -1, x2 = +1.
std::array<FoldLine, 4> fold_lines();

using Point2 = Eigen::Vector2d;

/// (x1, y1, x2, y2) on the critical manifold, y_i = (-1 + x_i^2/3) x_i.
PhaseState critical_manifold_lift(double x1, double x2);

/// diag(1 - x1^2, 1 - x2^2).
Eigen::Matrix2d layer_jacobian(double x1, double x2);

/// (g1, g2), the y-equations of the slow system with eps factored out.
Point2 slow_rhs(double x1, double x2, const SystemParams& p);

/// Reduced flow (x1', x2') = (g1 / (x1^2 - 1), g2 / (x2^2 - 1)); infinite on fold lines.
Point2 reduced_rhs(double x1, double x2, const SystemParams& p);

/// (F1, F2) = ((x2^2 - 1) g1, (x1^2 - 1) g2) = det(layer_jacobian) * reduced_rhs.
Point2 desingularized_rhs(double x1, double x2, const SystemParams& p);
Eigen::Matrix2d desingularized_jacobian(double x1, double x2, const SystemParams& p);

enum class FoldedKind { FoldedSaddle, FoldedNode, FoldedFocus };
std::string_view to_string(FoldedKind k);

/// Saddles are NotApplicable; Neutral when the eigenvalues have zero real part.
enum class FoldedStability { Stable, Unstable, Neutral, NotApplicable };
std::string_view to_string(FoldedStability s);

struct FoldedSingularity {
    Point2 location;
    /// Host fold line(s); two entries at an intersection of fold lines.
    std::vector<FoldLineId> lines;
    std::array<std::complex<double>, 2> eigenvalues{};
    FoldedKind kind = FoldedKind::FoldedSaddle;
    FoldedStability stability = FoldedStability::NotApplicable;
};

/// Classification from the two eigenvalues of the desingularized Jacobian.
FoldedKind classify_folded(const std::array<std::complex<double>, 2>& ev);

/// All zeros of (F1, F2) on the fold lines: the four intersections (+-1, +-1) and the
/// crossings of L1 with g1 = 0 and of L2 with g2 = 0 (closed form through atanh).
/// Candidates within 1e-8 of an equilibrium of the full system are dropped. Sorted by
/// (x1, x2).
std::vector<FoldedSingularity> find_folded_singularities(const SystemParams& p);

/// Columns x1,x2,fold_line,kind,stability,re_ev1,im_ev1,re_ev2,im_ev2.
void write_folded_csv(const std::vector<FoldedSingularity>& fs, const std::string& path, const std::string& comment);

}  // namespace cvdp
