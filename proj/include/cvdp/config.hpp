#pragma once

// Run configuration: JSON file plus command-line overrides, canonical form and hash.

#include "cvdp/classify.hpp"
#include "cvdp/curves.hpp"
#include "cvdp/integrate.hpp"
#include "cvdp/model.hpp"
#include "cvdp/periodic.hpp"

#include <string>

namespace cvdp {

inline constexpr int kSchemaVersion = 1;

struct SimulateConfig {
    double perturb_x1 = 0.0;
    double perturb_x2 = 1.5;
    /// Trajectory sampling for the CSV; 0 stores every accepted step.
    double output_dt = 0.5;
};

struct Bif1dConfig {
    double b_min = 0.0, b_max = 3.0;
    /// First b tried when looking for a double-loop seed; then the range is scanned in
    /// steps of seed_scan_step.
    double seed_b = 0.3;
    double seed_scan_step = 0.1;
};

struct Map2dConfig {
    double a_min = -1.7, a_max = -1.0;
    double b_min = 0.0, b_max = 3.0;
    int n_a = 71, n_b = 121;
    double perturbation = 1.5;
    bool mirrored = false;
    bool curves = true;
    double fixed_period = 3000.0;
    int curve_max_points = 500;
};

struct RunConfig {
    int schema_version = kSchemaVersion;
    SystemParams params = SystemParams::table1();
    SolverOptions solver;
    ClassifyOptions classify;
    PeriodicOptions periodic;
    SimulateConfig simulate;
    Bif1dConfig bif1d;
    Map2dConfig map2d;
    std::string output_dir = ".";

    /// Throws ConfigError on any inconsistent field.
    void validate() const;
    SweepOptions sweep_options() const;
    CurveOptions curve_options() const;
};

/// Parses a JSON document. Unknown keys, wrong types and a schema_version other than
/// kSchemaVersion raise ConfigError. Missing keys keep their defaults. Symmetric
/// shorthands "eps", "a", "b", "k" set both oscillator copies.
RunConfig parse_config(const std::string& json_text);
/// Reads and parses a file; IoError when it cannot be read.
RunConfig load_config(const std::string& path);

/// Canonical JSON text of every field that can change a result (output_dir is left out),
/// keys sorted, doubles round-trip exact.
std::string canonical_json(const RunConfig& cfg);
/// FNV-1a of canonical_json.
std::string config_hash(const RunConfig& cfg);

}  // namespace cvdp
