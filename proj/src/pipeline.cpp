#include "cvdp/pipeline.hpp"

#include "cvdp/classify.hpp"
#include "cvdp/curves.hpp"
#include "cvdp/equilibria.hpp"
#include "cvdp/errors.hpp"
#include "cvdp/gspt.hpp"
#include "cvdp/io.hpp"
#include "cvdp/manifold.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>

namespace cvdp {

using json = nlohmann::json;

namespace {

std::string prepare_dir(const RunConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + cfg.output_dir + "': " + ec.message());
    return cfg.output_dir;
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

std::string base(const std::string& path) { return std::filesystem::path(path).filename().string(); }

json base_names(const std::vector<std::string>& files) {
    json out = json::array();
    for (const std::string& f : files) out.push_back(base(f));
    return out;
}

std::string comment(const std::string& command, const std::string& hash) {
    return "cvdp " + command + " config_hash=" + hash;
}

json state_json(const PhaseState& s) { return json::array({s[0], s[1], s[2], s[3]}); }

json complex_list(const std::vector<Complex>& v) {
    json out = json::array();
    for (const Complex& c : v) out.push_back(json::array({c.real(), c.imag()}));
    return out;
}

json bif_json(const BifurcationPoint& bp, const std::string& branch) {
    return {{"kind", std::string(to_string(bp.kind))},
            {"branch", branch},
            {"a", get(bp.params, Param::a)},
            {"b", bp.param},
            {"period", bp.period},
            {"state", state_json(bp.state)},
            {"spectrum", complex_list(bp.spectrum)},
            {"note", bp.note}};
}

json curve_json(const ParamCurve& c, const std::string& file) {
    json j = {{"kind", std::string(to_string(c.kind))},
              {"file", base(file)},
              {"points", c.points.size()},
              {"stop_reason", c.stop_reason}};
    if (c.fold_a) j["fold_a"] = {{"a", c.fold_a->a}, {"b", c.fold_a->b}};
    return j;
}

void write_json(const std::string& path, json& j, const std::string& hash) {
    j["config_hash"] = hash;
    io::write_text(path, j.dump(2) + "\n");
}

void warn(const std::string& what, const std::exception& e) {
    std::cerr << "warning: " << what << ": " << e.what() << '\n';
}

/// Candidate b values for a double-loop seed: seed_b first, then the scan.
std::vector<double> seed_candidates(const Bif1dConfig& c) {
    std::vector<double> out;
    if (c.seed_b >= c.b_min && c.seed_b <= c.b_max) out.push_back(c.seed_b);
    for (double b = c.b_min + c.seed_scan_step; b < c.b_max; b += c.seed_scan_step)
        if (std::abs(b - c.seed_b) > 1e-12) out.push_back(b);
    return out;
}

}  // namespace

std::optional<PeriodicOrbit> find_double_loop_seed(const RunConfig& cfg, double a) {
    SweepOptions so = cfg.sweep_options();
    for (double b : seed_candidates(cfg.bif1d)) {
        const AttractorClass c = classify_cell(a, b, so);
        if (c.tag != AttractorTag::DoubleLoop) continue;
        const SystemParams p = with(with(cfg.params, Param::a, a), Param::b, b);
        try {
            return orbit_from_simulation(perturbed_equilibrium(p, so.perturbation, so.mirrored), p, cfg.periodic);
        } catch (const NumericsError& e) {
            warn("double-loop seed at b = " + io::fmt(b), e);
        }
    }
    return std::nullopt;
}

RunResult run_simulate(const RunConfig& cfg) {
    cfg.validate();
    const std::string dir = prepare_dir(cfg);
    const std::string hash = config_hash(cfg);
    const SystemParams& p = cfg.params;

    PhaseState s0 = symmetric_equilibrium(p);
    s0[0] += cfg.simulate.perturb_x1;
    s0[2] += cfg.simulate.perturb_x2;
    SolverOptions so = cfg.solver;
    so.output_dt = cfg.simulate.output_dt;
    const Trajectory tr = integrate(s0, p, so);

    RunResult r;
    r.files.push_back(join(dir, "trajectory.csv"));
    write_trajectory_csv(tr, r.files.back(), comment("simulate", hash));

    json& j = r.summary;
    j["command"] = "simulate";
    j["initial_state"] = state_json(s0);
    j["final_state"] = state_json(tr.final_state());
    j["t_end"] = tr.t_final;
    j["steps_accepted"] = tr.stats.accepted;
    if (tr.t_final - tr.t_begin >= cfg.classify.min_duration) {
        const AttractorClass c = classify_trajectory(tr, cfg.classify);
        j["tag"] = std::string(to_string(c.tag));
        j["loop"] = std::string(to_string(c.detail));
        j["alternating"] = c.alternating;
        j["amp_x1"] = c.amp_x1;
        j["amp_x2"] = c.amp_x2;
        j["period"] = nullptr;
        if (c.tag != AttractorTag::SteadyState && c.tag != AttractorTag::Other) {
            const Coordinate coord = c.amp_x2 > c.amp_x1 ? Coordinate::x2 : Coordinate::x1;
            try {
                const PeriodEstimate pe = detect_period(tr, coord);
                if (pe.periodic) j["period"] = pe.period;
            } catch (const NumericsError& e) {
                warn("period detection", e);
            }
        }
    } else {
        j["tag"] = nullptr;
        j["note"] = "run shorter than classify.min_duration; not classified";
    }
    r.files.push_back(join(dir, "simulate.json"));
    j["files"] = base_names(r.files);
    write_json(r.files.back(), j, hash);
    return r;
}

RunResult run_bif1d(const RunConfig& cfg) {
    cfg.validate();
    const std::string dir = prepare_dir(cfg);
    const std::string hash = config_hash(cfg);
    const std::string cm = comment("bif1d", hash);
    const double lo = cfg.bif1d.b_min, hi = cfg.bif1d.b_max;
    const ContinuationOptions eo;

    RunResult r;
    json points = json::array(), branches = json::array(), failures = json::array();
    auto record_eq = [&](const EquilibriumBranch& br, const std::string& label) {
        const std::string f = join(dir, "branch_" + label + ".csv");
        write_equilibrium_branch_csv(br, f, cm);
        r.files.push_back(f);
        branches.push_back({{"label", label}, {"type", "equilibrium"}, {"file", base(f)},
                            {"points", br.points.size()}, {"stop_reason", br.stop_reason}});
        for (const BifurcationPoint& bp : br.detected) points.push_back(bif_json(bp, label));
    };
    auto record_po = [&](const PeriodicBranch& br, const std::string& label) {
        const std::string f = join(dir, "branch_" + label + ".csv");
        write_periodic_branch_csv(br, f, cm);
        r.files.push_back(f);
        branches.push_back({{"label", label}, {"type", "periodic"}, {"file", base(f)},
                            {"points", br.size()}, {"stop_reason", br.stop_reason}});
        for (const BifurcationPoint& bp : br.detected) points.push_back(bif_json(bp, label));
    };
    auto failed = [&](const std::string& what, const NumericsError& e) {
        warn(what, e);
        failures.push_back({{"stage", what}, {"error", e.what()}});
    };

    const SystemParams p0 = with(cfg.params, Param::b, lo);
    const EquilibriumBranch e0 = continue_equilibria(symmetric_equilibrium(p0), p0, Param::b, lo, hi, eo);
    record_eq(e0, "E0");

    std::vector<BifurcationPoint> hopfs;
    int n_asym = 0;
    for (const BifurcationPoint& bp : e0.detected) {
        if (bp.kind == BifurcationKind::Hopf) hopfs.push_back(bp);
        if (bp.kind != BifurcationKind::Pitchfork) continue;
        try {
            const EquilibriumBranch as = switch_branch(bp, lo, hi, eo);
            const std::string label = "asym_" + std::to_string(n_asym++);
            record_eq(as, label);
            record_eq(mirror(as), label + "_mirror");
            for (const BifurcationPoint& h : as.detected)
                if (h.kind == BifurcationKind::Hopf) hopfs.push_back(h);
        } catch (const NumericsError& e) {
            failed("branch switch at b = " + io::fmt(bp.param), e);
        }
    }

    for (std::size_t n = 0; n < hopfs.size(); ++n) {
        const BifurcationPoint& h = hopfs[n];
        try {
            const PeriodicBranch pb = continue_from_hopf(h, lo, hi, cfg.periodic);
            const std::string label = "hopf_" + std::to_string(n);
            record_po(pb, label);
            if (!pb.orbits.empty() && !pb.orbits.front().params.identical()) continue;
            record_po(mirror(pb), label + "_mirror");
        } catch (const NumericsError& e) {
            failed("periodic family from Hopf at b = " + io::fmt(h.param), e);
        }
    }

    const double a = get(cfg.params, Param::a);
    std::optional<PeriodicOrbit> seed = find_double_loop_seed(cfg, a);
    json seed_json = nullptr;
    if (seed) {
        const double b_seed = get(seed->params, Param::b);
        seed_json = {{"b", b_seed}, {"period", seed->period}};
        for (int dir_b : {+1, -1}) {
            try {
                const PeriodicBranch pb = continue_periodic_orbits(*seed, Param::b, lo, hi, cfg.periodic, dir_b);
                record_po(pb, std::string("double_loop_") + (dir_b > 0 ? "up" : "down"));
            } catch (const NumericsError& e) {
                failed("double-loop family from b = " + io::fmt(b_seed), e);
            }
        }
    }

    json& j = r.summary;
    j["command"] = "bif1d";
    j["a"] = a;
    j["b_range"] = {lo, hi};
    j["double_loop_seed"] = seed_json;
    j["branches"] = branches;
    j["bifurcations"] = points;
    j["failures"] = failures;
    r.files.push_back(join(dir, "bifurcations.json"));
    j["files"] = base_names(r.files);
    write_json(r.files.back(), j, hash);
    return r;
}

RunResult run_map2d(const RunConfig& cfg, bool serial) {
    cfg.validate();
    const std::string dir = prepare_dir(cfg);
    const std::string hash = config_hash(cfg);
    const std::string cm = comment("map2d", hash);
    const SweepOptions so = cfg.sweep_options();

    RunResult r;
    const ClassificationMap map = serial ? sweep_serial(so) : sweep(so);
    r.files.push_back(join(dir, "map.csv"));
    write_map_csv(map, r.files.back(), cm);

    json counts = json::object();
    int failed_cells = 0;
    for (const AttractorClass& c : map.cells) {
        counts[std::string(to_string(c.tag))] = counts.value(std::string(to_string(c.tag)), 0) + 1;
        failed_cells += c.failed;
    }

    json curves = json::array(), failures = json::array();
    if (cfg.map2d.curves) {
        const CurveOptions co = cfg.curve_options();
        const double a = get(cfg.params, Param::a);
        const double lo = cfg.map2d.b_min, hi = cfg.map2d.b_max;
        std::vector<std::pair<std::string, ParamCurve>> done;
        std::vector<std::pair<std::string, std::string>> errors;

        auto equilibrium_curves = [&]() {
            const SystemParams p0 = with(cfg.params, Param::b, lo);
            const EquilibriumBranch e0 = continue_equilibria(symmetric_equilibrium(p0), p0, Param::b, lo, hi);
            for (const BifurcationPoint& bp : e0.detected) {
                if (bp.kind != BifurcationKind::Pitchfork) continue;
                done.emplace_back("pitchfork", continue_pitchfork_curve(bp, co));
                const EquilibriumBranch as = switch_branch(bp, lo, hi);
                int n = 0;
                for (const BifurcationPoint& h : as.detected)
                    if (h.kind == BifurcationKind::Hopf)
                        done.emplace_back("hopf_" + std::to_string(n++), continue_hopf_curve(h, co));
                break;
            }
        };
        std::optional<PeriodicOrbit> seed;
        auto snpo_curve = [&](std::vector<std::pair<std::string, ParamCurve>>& out) {
            const PeriodicBranch br = continue_periodic_orbits(*seed, Param::b, lo, hi, cfg.periodic, -1);
            for (std::size_t i = 0; i < br.detected.size(); ++i)
                if (br.detected[i].kind == BifurcationKind::SNPO) {
                    out.emplace_back("snpo", continue_snpo_curve(br.detected_orbits[i], co));
                    return;
                }
            throw NumericsError(NumericsFailure::NoSolution, "no fold of periodic orbits below the seed");
        };
        auto homoclinic_curve = [&](std::vector<std::pair<std::string, ParamCurve>>& out) {
            const PeriodicOrbit fx = fix_period(*seed, cfg.map2d.fixed_period, cfg.periodic, +1, co.fixed_period_tol);
            out.emplace_back("homoclinic", continue_fixed_period_orbit(fx, cfg.map2d.fixed_period, co));
        };

        seed = find_double_loop_seed(cfg, a);
        std::vector<std::pair<std::string, ParamCurve>> snpo_out, hc_out;
        std::string err_eq, err_snpo, err_hc;
        // Independent curves run concurrently; each section keeps its own output.
#pragma omp parallel sections
        {
#pragma omp section
            {
                try {
                    equilibrium_curves();
                } catch (const std::exception& e) {
                    err_eq = e.what();
                }
            }
#pragma omp section
            {
                if (seed) try {
                        snpo_curve(snpo_out);
                    } catch (const std::exception& e) {
                        err_snpo = e.what();
                    }
            }
#pragma omp section
            {
                if (seed) try {
                        homoclinic_curve(hc_out);
                    } catch (const std::exception& e) {
                        err_hc = e.what();
                    }
            }
        }
        for (auto& x : snpo_out) done.push_back(std::move(x));
        for (auto& x : hc_out) done.push_back(std::move(x));
        if (!err_eq.empty()) errors.emplace_back("pitchfork/hopf curves", err_eq);
        if (!err_snpo.empty()) errors.emplace_back("snpo curve", err_snpo);
        if (!err_hc.empty()) errors.emplace_back("homoclinic curve", err_hc);
        if (!seed) errors.emplace_back("snpo and homoclinic curves", "no double-loop seed at a = " + io::fmt(a));

        for (const auto& [name, curve] : done) {
            const std::string f = join(dir, "curve_" + name + ".csv");
            write_curve_csv(curve, f, cm);
            r.files.push_back(f);
            curves.push_back(curve_json(curve, f));
        }
        for (const auto& [stage, what] : errors) {
            std::cerr << "warning: " << stage << ": " << what << '\n';
            failures.push_back({{"stage", stage}, {"error", what}});
        }
    }

    json& j = r.summary;
    j["command"] = "map2d";
    j["grid"] = {{"a", {so.a_min, so.a_max, so.n_a}}, {"b", {so.b_min, so.b_max, so.n_b}}};
    j["perturbation"] = so.perturbation;
    j["mirrored"] = so.mirrored;
    j["counts"] = counts;
    j["failed_cells"] = failed_cells;
    j["curves"] = curves;
    j["failures"] = failures;
    r.files.push_back(join(dir, "manifest.json"));
    j["files"] = base_names(r.files);
    write_json(r.files.back(), j, hash);
    return r;
}

RunResult run_gspt(const RunConfig& cfg) {
    cfg.validate();
    const std::string dir = prepare_dir(cfg);
    const std::string hash = config_hash(cfg);
    const std::vector<FoldedSingularity> fs = find_folded_singularities(cfg.params);

    RunResult r;
    r.files.push_back(join(dir, "folded_singularities.csv"));
    write_folded_csv(fs, r.files.back(), comment("gspt", hash));

    json list = json::array();
    for (const FoldedSingularity& f : fs) {
        json lines = json::array();
        for (FoldLineId id : f.lines) lines.push_back(std::string(to_string(id)));
        list.push_back({{"x1", f.location[0]},
                        {"x2", f.location[1]},
                        {"fold_lines", lines},
                        {"kind", std::string(to_string(f.kind))},
                        {"stability", std::string(to_string(f.stability))},
                        {"eigenvalues", complex_list({f.eigenvalues.begin(), f.eigenvalues.end()})}});
    }
    r.summary["command"] = "gspt";
    r.summary["singularities"] = list;
    r.files.push_back(join(dir, "gspt.json"));
    r.summary["files"] = base_names(r.files);
    write_json(r.files.back(), r.summary, hash);
    return r;
}

RunResult run_manifold(const RunConfig& cfg) {
    cfg.validate();
    const std::string dir = prepare_dir(cfg);
    const std::string hash = config_hash(cfg);
    ManifoldOptions mo;
    mo.solver = cfg.solver;
    mo.solver.t_end = std::max(cfg.solver.t_end, ManifoldOptions::default_solver().t_end);
    mo.solver.output_dt = cfg.simulate.output_dt;
    const ManifoldBranch mb = unstable_manifold(cfg.params, mo);

    RunResult r;
    json branches = json::array();
    for (int k = 0; k < 2; ++k) {
        r.files.push_back(join(dir, "manifold_" + std::to_string(k) + ".csv"));
        write_trajectory_csv(mb.branches[k], r.files.back(), comment("manifold", hash));
        const AttractorClass c = classify_trajectory(mb.branches[k], cfg.classify);
        branches.push_back({{"file", base(r.files.back())},
                            {"sign", k == 0 ? 1 : -1},
                            {"tag", std::string(to_string(c.tag))},
                            {"loop", std::string(to_string(c.detail))}});
    }
    r.summary["command"] = "manifold";
    r.summary["equilibrium"] = state_json(mb.equilibrium);
    r.summary["eigenvalue"] = mb.eigenvalue;
    r.summary["direction"] = state_json(mb.direction);
    r.summary["offset"] = mb.offset;
    r.summary["branches"] = branches;
    r.files.push_back(join(dir, "manifold.json"));
    r.summary["files"] = base_names(r.files);
    write_json(r.files.back(), r.summary, hash);
    return r;
}

}  // namespace cvdp
