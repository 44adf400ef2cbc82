// cvdp: command-line front end. Exit codes: 0 success, 2 configuration error,
// 3 numerical failure, 4 I/O error.

#include "cvdp/config.hpp"
#include "cvdp/errors.hpp"
#include "cvdp/pipeline.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<double> eps, a, b, k, t_end, rel_tol, abs_tol, max_step;
    std::optional<std::string> method;
    // simulate
    std::optional<double> perturb_x1, perturb_x2, output_dt;
    // bif1d
    std::optional<double> bif_b_min, bif_b_max, seed_b;
    // map2d
    std::optional<double> a_min, a_max, map_b_min, map_b_max, perturbation, fixed_period;
    std::optional<int> n_a, n_b;
    bool mirrored = false, no_curves = false, serial = false;
    bool print_config = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config_path, "JSON run configuration");
    cmd->add_option("-o,--out", o.out, "Output directory");
    cmd->add_option("--eps", o.eps, "Timescale ratio (both oscillators)");
    cmd->add_option("--a", o.a, "Excitability parameter a (both oscillators)");
    cmd->add_option("--b", o.b, "Coupling strength b (both oscillators)");
    cmd->add_option("--k", o.k, "Coupling steepness k (both oscillators)");
    cmd->add_option("--t-end", o.t_end, "Integration time");
    cmd->add_option("--rel-tol", o.rel_tol, "Solver relative tolerance");
    cmd->add_option("--abs-tol", o.abs_tol, "Solver absolute tolerance");
    cmd->add_option("--max-step", o.max_step, "Solver maximum step");
    cmd->add_option("--method", o.method, "Solver: rk54 or radau");
    cmd->add_flag("--print-config", o.print_config, "Print the effective configuration and its hash, then exit");
}

template <class T>
void set(const std::optional<T>& v, T& dst) {
    if (v) dst = *v;
}

cvdp::RunConfig effective_config(const Overrides& o) {
    cvdp::RunConfig c = o.config_path.empty() ? cvdp::RunConfig{} : cvdp::load_config(o.config_path);
    set(o.out, c.output_dir);
    for (auto [v, which] : {std::pair{o.eps, cvdp::Param::eps}, std::pair{o.a, cvdp::Param::a},
                            std::pair{o.b, cvdp::Param::b}, std::pair{o.k, cvdp::Param::k}})
        if (v) c.params = cvdp::with(c.params, which, *v);
    set(o.t_end, c.solver.t_end);
    set(o.rel_tol, c.solver.rel_tol);
    set(o.abs_tol, c.solver.abs_tol);
    set(o.max_step, c.solver.max_step);
    if (o.method) c.solver.method = cvdp::parse_method(*o.method);
    set(o.perturb_x1, c.simulate.perturb_x1);
    set(o.perturb_x2, c.simulate.perturb_x2);
    set(o.output_dt, c.simulate.output_dt);
    set(o.bif_b_min, c.bif1d.b_min);
    set(o.bif_b_max, c.bif1d.b_max);
    set(o.seed_b, c.bif1d.seed_b);
    set(o.a_min, c.map2d.a_min);
    set(o.a_max, c.map2d.a_max);
    set(o.map_b_min, c.map2d.b_min);
    set(o.map_b_max, c.map2d.b_max);
    set(o.perturbation, c.map2d.perturbation);
    set(o.fixed_period, c.map2d.fixed_period);
    set(o.n_a, c.map2d.n_a);
    set(o.n_b, c.map2d.n_b);
    if (o.mirrored) c.map2d.mirrored = true;
    if (o.no_curves) c.map2d.curves = false;
    c.validate();
    return c;
}

void apply_thread_env() {
    const char* env = std::getenv("CVDP_THREADS");
    if (!env || !*env) return;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1 || n > 4096) throw cvdp::ConfigError("CVDP_THREADS must be a positive integer");
    omp_set_num_threads(static_cast<int>(n));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coupled van der Pol oscillators: simulation, bifurcation analysis, singular limit"};
    app.require_subcommand(1);
    Overrides o;

    CLI::App* sim = app.add_subcommand("simulate", "Integrate from E0 plus a perturbation and classify");
    add_common(sim, o);
    sim->add_option("--perturb-x1", o.perturb_x1, "Initial offset of x1 from E0");
    sim->add_option("--perturb-x2", o.perturb_x2, "Initial offset of x2 from E0");
    sim->add_option("--output-dt", o.output_dt, "Sampling of the trajectory CSV (0: every step)");

    CLI::App* bif = app.add_subcommand("bif1d", "One-parameter continuation in b");
    add_common(bif, o);
    bif->add_option("--b-min", o.bif_b_min, "Lower end of the b range");
    bif->add_option("--b-max", o.bif_b_max, "Upper end of the b range");
    bif->add_option("--seed-b", o.seed_b, "First b tried for the double-loop seed");

    CLI::App* map = app.add_subcommand("map2d", "Attractor map over (a, b) and two-parameter curves");
    add_common(map, o);
    map->add_option("--a-min", o.a_min);
    map->add_option("--a-max", o.a_max);
    map->add_option("--b-min", o.map_b_min);
    map->add_option("--b-max", o.map_b_max);
    map->add_option("--n-a", o.n_a, "Grid points in a");
    map->add_option("--n-b", o.n_b, "Grid points in b");
    map->add_option("--perturbation", o.perturbation, "Offset of the perturbed coordinate from E0");
    map->add_option("--fixed-period", o.fixed_period, "Period of the homoclinic approximation curve");
    map->add_flag("--mirrored", o.mirrored, "Perturb x1 instead of x2");
    map->add_flag("--no-curves", o.no_curves, "Skip the two-parameter curves");
    map->add_flag("--serial", o.serial, "Use the serial reference sweep");

    CLI::App* gs = app.add_subcommand("gspt", "Folded singularities of the singular limit");
    add_common(gs, o);

    CLI::App* man = app.add_subcommand("manifold", "Both branches of the unstable manifold of E0");
    add_common(man, o);
    man->add_option("--output-dt", o.output_dt, "Sampling of the manifold CSVs (0: every step)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        apply_thread_env();
        const cvdp::RunConfig cfg = effective_config(o);
        if (o.print_config) {
            std::cout << cvdp::canonical_json(cfg) << "\nconfig_hash " << cvdp::config_hash(cfg) << '\n';
            return 0;
        }
        cvdp::RunResult r;
        if (*sim) r = cvdp::run_simulate(cfg);
        else if (*bif) r = cvdp::run_bif1d(cfg);
        else if (*map) r = cvdp::run_map2d(cfg, o.serial);
        else if (*gs) r = cvdp::run_gspt(cfg);
        else r = cvdp::run_manifold(cfg);
        std::cout << r.summary.dump(2) << '\n';
        return 0;
    } catch (const cvdp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const cvdp::NumericsError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const cvdp::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 4;
    }
}
