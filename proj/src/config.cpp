#include "cvdp/config.hpp"

#include "cvdp/errors.hpp"
#include "cvdp/io.hpp"

#include <json.hpp>

#include <cmath>
#include <set>

namespace cvdp {

using json = nlohmann::json;

namespace {

/// Reads the keys of one JSON object; every key must be consumed exactly once.
class Section {
public:
    Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    void num(const std::string& key, double& dst) {
        if (!take(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
        dst = v.get<double>();
        if (!std::isfinite(dst)) throw ConfigError(path(key) + ": not finite");
    }

    void integer(const std::string& key, int& dst) {
        if (!take(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
        dst = v.get<int>();
    }

    void boolean(const std::string& key, bool& dst) {
        if (!take(key)) return;
        const json& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(path(key) + ": expected true or false");
        dst = v.get<bool>();
    }

    void text(const std::string& key, std::string& dst) {
        if (!take(key)) return;
        const json& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(path(key) + ": expected a string");
        dst = v.get<std::string>();
    }

    const json* sub(const std::string& key) { return take(key) ? &j_.at(key) : nullptr; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError("unknown key '" + path(it.key()) + "'");
    }

private:
    bool take(const std::string& key) {
        if (!j_.contains(key)) return false;
        used_.insert(key);
        return true;
    }
    std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

    const json& j_;
    std::string where_;
    std::set<std::string> used_;
};

void read_params(const json& j, SystemParams& p) {
    Section s(j, "params");
    for (Param which : {Param::eps, Param::a, Param::b, Param::k}) {
        const std::string key(to_string(which));
        if (!s.has(key)) continue;
        double v = get(p, which);
        s.num(key, v);
        p = with(p, which, v);
    }
    s.num("eps1", p.eps1);
    s.num("eps2", p.eps2);
    s.num("a1", p.a1);
    s.num("a2", p.a2);
    s.num("b1", p.b1);
    s.num("b2", p.b2);
    s.num("k1", p.k1);
    s.num("k2", p.k2);
    s.finish();
}

void read_solver(const json& j, SolverOptions& o) {
    Section s(j, "solver");
    s.num("rel_tol", o.rel_tol);
    s.num("abs_tol", o.abs_tol);
    s.num("max_step", o.max_step);
    s.num("t_end", o.t_end);
    std::string m(to_string(o.method));
    s.text("method", m);
    o.method = parse_method(m);
    s.finish();
}

void read_classify(const json& j, ClassifyOptions& o) {
    Section s(j, "classify");
    s.num("min_duration", o.min_duration);
    s.num("analysis_fraction", o.analysis_fraction);
    s.num("large_amplitude", o.large_amplitude);
    s.num("steady_amplitude", o.steady_amplitude);
    s.num("steady_residual", o.steady_residual);
    s.num("settle_time", o.settle_time);
    s.finish();
}

void read_periodic(const json& j, PeriodicOptions& o) {
    Section s(j, "periodic");
    s.integer("intervals", o.intervals);
    s.integer("degree", o.degree);
    s.num("mesh_floor", o.mesh_floor);
    s.num("period_max", o.period_max);
    s.num("homoclinic_threshold", o.homoclinic_threshold);
    s.num("homoclinic_distance", o.homoclinic_distance);
    s.num("newton_tol", o.cont.newton_tol);
    s.num("ds0", o.cont.ds0);
    s.num("ds_min", o.cont.ds_min);
    s.num("ds_max", o.cont.ds_max);
    s.integer("max_points", o.cont.max_points);
    s.finish();
}

void read_simulate(const json& j, SimulateConfig& o) {
    Section s(j, "simulate");
    s.num("perturb_x1", o.perturb_x1);
    s.num("perturb_x2", o.perturb_x2);
    s.num("output_dt", o.output_dt);
    s.finish();
}

void read_bif1d(const json& j, Bif1dConfig& o) {
    Section s(j, "bif1d");
    s.num("b_min", o.b_min);
    s.num("b_max", o.b_max);
    s.num("seed_b", o.seed_b);
    s.num("seed_scan_step", o.seed_scan_step);
    s.finish();
}

void read_map2d(const json& j, Map2dConfig& o) {
    Section s(j, "map2d");
    s.num("a_min", o.a_min);
    s.num("a_max", o.a_max);
    s.num("b_min", o.b_min);
    s.num("b_max", o.b_max);
    s.integer("n_a", o.n_a);
    s.integer("n_b", o.n_b);
    s.num("perturbation", o.perturbation);
    s.boolean("mirrored", o.mirrored);
    s.boolean("curves", o.curves);
    s.num("fixed_period", o.fixed_period);
    s.integer("curve_max_points", o.curve_max_points);
    s.finish();
}

json to_json(const RunConfig& c) {
    const SystemParams& p = c.params;
    json j;
    j["schema_version"] = c.schema_version;
    j["params"] = {{"eps1", p.eps1}, {"eps2", p.eps2}, {"a1", p.a1}, {"a2", p.a2},
                   {"b1", p.b1},     {"b2", p.b2},     {"k1", p.k1}, {"k2", p.k2}};
    j["solver"] = {{"rel_tol", c.solver.rel_tol},
                   {"abs_tol", c.solver.abs_tol},
                   {"max_step", c.solver.max_step},
                   {"t_end", c.solver.t_end},
                   {"method", std::string(to_string(c.solver.method))}};
    j["classify"] = {{"min_duration", c.classify.min_duration},
                     {"analysis_fraction", c.classify.analysis_fraction},
                     {"large_amplitude", c.classify.large_amplitude},
                     {"steady_amplitude", c.classify.steady_amplitude},
                     {"steady_residual", c.classify.steady_residual},
                     {"settle_time", c.classify.settle_time}};
    j["periodic"] = {{"intervals", c.periodic.intervals},
                     {"degree", c.periodic.degree},
                     {"mesh_floor", c.periodic.mesh_floor},
                     {"period_max", c.periodic.period_max},
                     {"homoclinic_threshold", c.periodic.homoclinic_threshold},
                     {"homoclinic_distance", c.periodic.homoclinic_distance},
                     {"newton_tol", c.periodic.cont.newton_tol},
                     {"ds0", c.periodic.cont.ds0},
                     {"ds_min", c.periodic.cont.ds_min},
                     {"ds_max", c.periodic.cont.ds_max},
                     {"max_points", c.periodic.cont.max_points}};
    j["simulate"] = {{"perturb_x1", c.simulate.perturb_x1},
                     {"perturb_x2", c.simulate.perturb_x2},
                     {"output_dt", c.simulate.output_dt}};
    j["bif1d"] = {{"b_min", c.bif1d.b_min},
                  {"b_max", c.bif1d.b_max},
                  {"seed_b", c.bif1d.seed_b},
                  {"seed_scan_step", c.bif1d.seed_scan_step}};
    j["map2d"] = {{"a_min", c.map2d.a_min},
                  {"a_max", c.map2d.a_max},
                  {"b_min", c.map2d.b_min},
                  {"b_max", c.map2d.b_max},
                  {"n_a", c.map2d.n_a},
                  {"n_b", c.map2d.n_b},
                  {"perturbation", c.map2d.perturbation},
                  {"mirrored", c.map2d.mirrored},
                  {"curves", c.map2d.curves},
                  {"fixed_period", c.map2d.fixed_period},
                  {"curve_max_points", c.map2d.curve_max_points}};
    return j;
}

}  // namespace

void RunConfig::validate() const {
    if (schema_version != kSchemaVersion)
        throw ConfigError("schema_version " + std::to_string(schema_version) + " is not supported (expected " +
                          std::to_string(kSchemaVersion) + ")");
    try {
        params.validate();
    } catch (const NumericsError& e) {
        throw ConfigError(e.what());
    }
    solver.validate();
    periodic.validate();
    if (!(classify.analysis_fraction > 0 && classify.analysis_fraction <= 1))
        throw ConfigError("classify.analysis_fraction must lie in (0, 1]");
    if (!(classify.steady_amplitude > 0) || !(classify.large_amplitude > classify.steady_amplitude) ||
        !(classify.steady_residual > 0) || !(classify.settle_time >= 0))
        throw ConfigError("classify: need 0 < steady_amplitude < large_amplitude, steady_residual > 0, settle_time >= 0");
    if (!(simulate.output_dt >= 0)) throw ConfigError("simulate.output_dt must be >= 0");
    if (!(bif1d.b_max > bif1d.b_min)) throw ConfigError("bif1d: empty b range");
    if (!(bif1d.seed_scan_step > 0)) throw ConfigError("bif1d.seed_scan_step must be > 0");
    if (!(map2d.fixed_period > 0)) throw ConfigError("map2d.fixed_period must be > 0");
    if (map2d.curve_max_points < 2) throw ConfigError("map2d.curve_max_points must be >= 2");
    sweep_options().validate();
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

SweepOptions RunConfig::sweep_options() const {
    SweepOptions s;
    s.a_min = map2d.a_min;
    s.a_max = map2d.a_max;
    s.b_min = map2d.b_min;
    s.b_max = map2d.b_max;
    s.n_a = map2d.n_a;
    s.n_b = map2d.n_b;
    s.perturbation = map2d.perturbation;
    s.mirrored = map2d.mirrored;
    s.base = params;
    s.solver = solver;
    s.classify = classify;
    return s;
}

CurveOptions RunConfig::curve_options() const {
    CurveOptions c;
    c.periodic = periodic;
    c.a_min = map2d.a_min;
    c.a_max = map2d.a_max;
    c.b_min = map2d.b_min;
    c.b_max = map2d.b_max;
    c.cont.max_points = map2d.curve_max_points;
    return c;
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    RunConfig c;
    Section s(j, "");
    if (!s.has("schema_version")) throw ConfigError("missing schema_version");
    s.integer("schema_version", c.schema_version);
    if (c.schema_version != kSchemaVersion)
        throw ConfigError("schema_version " + std::to_string(c.schema_version) + " is not supported");
    if (const json* v = s.sub("params")) read_params(*v, c.params);
    if (const json* v = s.sub("solver")) read_solver(*v, c.solver);
    if (const json* v = s.sub("classify")) read_classify(*v, c.classify);
    if (const json* v = s.sub("periodic")) read_periodic(*v, c.periodic);
    if (const json* v = s.sub("simulate")) read_simulate(*v, c.simulate);
    if (const json* v = s.sub("bif1d")) read_bif1d(*v, c.bif1d);
    if (const json* v = s.sub("map2d")) read_map2d(*v, c.map2d);
    s.text("output_dir", c.output_dir);
    s.finish();
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) { return parse_config(io::read_text(path)); }

std::string canonical_json(const RunConfig& cfg) { return to_json(cfg).dump(); }

std::string config_hash(const RunConfig& cfg) { return io::fnv1a_hex(canonical_json(cfg)); }

}  // namespace cvdp
