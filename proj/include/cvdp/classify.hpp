#pragma once

#include "cvdp/integrate.hpp"
#include "cvdp/model.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace cvdp {

enum class AttractorTag { SteadyState, SingleLoop, DoubleLoop, Other };
std::string_view to_string(AttractorTag t);

/// Which oscillator carries the large excursions of a single-loop orbit.
enum class LoopDetail { None, X1, X2 };
std::string_view to_string(LoopDetail d);

struct ClassifyOptions {
    double min_duration = 1e4;     ///< shorter trajectories are rejected (TooShort)
    double analysis_fraction = 0.2; ///< trailing share of the run that is analysed
    double large_amplitude = 2.0;  ///< peak-to-peak above this counts as a relaxation loop
    double steady_amplitude = 0.01;
    /// SteadyState also needs |f| below this at the final state. A run whose amplitudes
    /// are already below steady_amplitude is continued for at most settle_time to get there.
    double steady_residual = 1e-6;
    double settle_time = 4e4;
};

struct AttractorClass {
    AttractorTag tag = AttractorTag::Other;
    LoopDetail detail = LoopDetail::None;
    double amp_x1 = 0.0;  ///< peak-to-peak of x1 over the analysis window
    double amp_x2 = 0.0;
    /// DoubleLoop only: major x1/x2 maxima strictly alternate.
    bool alternating = false;
    int major_peaks_x1 = 0;
    int major_peaks_x2 = 0;
    /// Last state of the run, including any settling continuation.
    PhaseState final_state = PhaseState::Zero();
    double settle_time = 0.0;  ///< extra integration spent settling
    bool failed = false;  ///< solver failure during a sweep cell
    std::string failure;
};

/// Looks only at the final `analysis_fraction` of the trajectory.
/// Throws NumericsError(TooShort) when the run is shorter than min_duration.
AttractorClass classify_trajectory(const Trajectory& traj, const ClassifyOptions& opts = {});

/// Standard sweep initial condition: E0 shifted by `delta` in x2 (or x1 when mirrored).
PhaseState perturbed_equilibrium(const SystemParams& p, double delta, bool mirrored = false);

struct SweepOptions {
    double a_min = -1.7, a_max = -1.0;
    double b_min = 0.0, b_max = 3.0;
    int n_a = 71, n_b = 121;
    double perturbation = 1.5;
    bool mirrored = false;  ///< perturb x1 instead of x2
    SystemParams base = SystemParams::table1();
    SolverOptions solver;   ///< t_end defaults to 1e4
    ClassifyOptions classify;

    void validate() const;
    double a_at(int i) const;
    double b_at(int j) const;
};

struct ClassificationMap {
    std::vector<double> a_values;
    std::vector<double> b_values;
    /// Row-major in a: cells[i * b_values.size() + j] belongs to (a_values[i], b_values[j]).
    std::vector<AttractorClass> cells;
    SweepOptions options;

    const AttractorClass& at(std::size_t ia, std::size_t jb) const { return cells[ia * b_values.size() + jb]; }
};

/// Simulates and classifies one cell; solver failures become Other with failed=true.
AttractorClass classify_cell(double a, double b, const SweepOptions& opts);

/// OpenMP-parallel sweep over the (a, b) grid. Results are identical to sweep_serial.
ClassificationMap sweep(const SweepOptions& opts);
/// Serial reference implementation of sweep().
ClassificationMap sweep_serial(const SweepOptions& opts);

void write_map_csv(const ClassificationMap& map, const std::string& path, const std::string& comment);

}  // namespace cvdp
