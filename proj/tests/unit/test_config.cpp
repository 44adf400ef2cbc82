#include "cvdp/config.hpp"
#include "cvdp/errors.hpp"

#include <doctest.h>

using namespace cvdp;

TEST_SUITE("config") {
    TEST_CASE("defaults are the Table-1 parameters") {
        const RunConfig c = parse_config(R"({"schema_version": 1})");
        CHECK(c.params == SystemParams::table1());
        CHECK(c.params.eps1 == 0.01);
        CHECK(c.params.a1 == -1.1);
        CHECK(c.params.b1 == 0.3);
        CHECK(c.params.k1 == 1.0);
        CHECK(config_hash(c) == config_hash(RunConfig{}));
    }

    TEST_CASE("shorthand and per-oscillator keys") {
        const RunConfig c = parse_config(R"({"schema_version": 1, "params": {"b": 2.05, "a2": -1.2}})");
        CHECK(c.params.b1 == 2.05);
        CHECK(c.params.b2 == 2.05);
        CHECK(c.params.a1 == -1.1);
        CHECK(c.params.a2 == -1.2);
        const RunConfig d = parse_config(R"({"schema_version": 1, "params": {"b1": 2.05, "b2": 2.05, "a2": -1.2}})");
        CHECK(config_hash(c) == config_hash(d));
    }

    TEST_CASE("rejections") {
        CHECK_THROWS_AS(parse_config("{}"), ConfigError);
        CHECK_THROWS_AS(parse_config(R"({"schema_version": 2})"), ConfigError);
        CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "colour": 3})"), ConfigError);
        CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "solver": {"rtol": 1e-6}})"), ConfigError);
        CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "params": {"b": "high"}})"), ConfigError);
        CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "params": {"eps": -0.1}})"), ConfigError);
        CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "map2d": {"n_a": 2.5}})"), ConfigError);
        CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "bif1d": {"b_min": 2, "b_max": 1}})"), ConfigError);
        CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "solver": {"method": "euler"}})"), ConfigError);
        CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "periodic": {"mesh_floor": 1.5}})"), ConfigError);
        CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
        CHECK_THROWS_AS(load_config("/nonexistent/run.json"), IoError);
    }

    TEST_CASE("canonical form round-trips and the hash tracks content") {
        RunConfig c;
        c.params = with(c.params, Param::b, 0.1 + 0.2);
        c.map2d.n_a = 36;
        c.periodic.mesh_floor = 0.2;
        c.solver.method = Method::RadauIIA3;
        const RunConfig back = parse_config(canonical_json(c));
        CHECK(canonical_json(back) == canonical_json(c));
        CHECK(config_hash(back) == config_hash(c));
        CHECK(back.params.b1 == 0.1 + 0.2);

        RunConfig moved = c;
        moved.output_dir = "elsewhere";
        CHECK(config_hash(moved) == config_hash(c));
        RunConfig changed = c;
        changed.solver.t_end = 2e4;
        CHECK(config_hash(changed) != config_hash(c));
        CHECK(config_hash(c).size() == 16);
    }
}
