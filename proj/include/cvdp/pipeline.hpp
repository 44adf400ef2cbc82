#pragma once

// The CLI subcommands as library calls. Every output file lands in cfg.output_dir and
// carries the config hash: a leading "# cvdp <command> config_hash=<hex>" line in CSV
// files, a "config_hash" member in JSON files.

#include "cvdp/config.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace cvdp {

struct RunResult {
    std::vector<std::string> files;  ///< paths written, in order
    nlohmann::json summary;          ///< also written to the command's JSON file
};

/// trajectory.csv and simulate.json (attractor tag, amplitudes, period).
RunResult run_simulate(const RunConfig& cfg);

/// Equilibrium branches (E0, the asymmetric pair after the pitchfork), the periodic
/// families born at the Hopf points and the double-loop family continued both ways.
/// One CSV per branch and bifurcations.json with every detected point.
RunResult run_bif1d(const RunConfig& cfg);

/// map.csv from the (a, b) sweep; with map2d.curves also the pitchfork, Hopf, SNPO and
/// fixed-period curves through the base value of a. manifest.json lists all files.
/// `serial` selects the reference sweep.
RunResult run_map2d(const RunConfig& cfg, bool serial = false);

/// folded_singularities.csv and gspt.json.
RunResult run_gspt(const RunConfig& cfg);

/// manifold_0.csv, manifold_1.csv (both branches of the unstable manifold of E0) and
/// manifold.json.
RunResult run_manifold(const RunConfig& cfg);

/// First b (seed_b, then a scan of the bif1d range) at which the standard initial
/// condition settles on a double-loop orbit at the given a, converged by collocation.
std::optional<PeriodicOrbit> find_double_loop_seed(const RunConfig& cfg, double a);

}  // namespace cvdp
