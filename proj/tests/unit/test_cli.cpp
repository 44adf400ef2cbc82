#include <doctest.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = CVDP_CLI_PATH;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::path(CVDP_TEST_SCRATCH) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + kCli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("simulate with defaults finds the double loop") {
        const fs::path d = scratch("sim_default");
        REQUIRE(run("simulate -o " + d.string()) == 0);
        const json j = load(d / "simulate.json");
        CHECK(j["tag"] == "DoubleLoop");
        CHECK(j["alternating"] == true);
        CHECK(j["period"].get<double>() == doctest::Approx(349.86).epsilon(2e-3));
        CHECK(first_line(d / "trajectory.csv") == "# cvdp simulate config_hash=" + j["config_hash"].get<std::string>());
    }

    TEST_CASE("unperturbed start at b = 0 rests at E0") {
        const fs::path d = scratch("sim_rest");
        REQUIRE(run("simulate --b 0 --perturb-x2 0 -o " + d.string()) == 0);
        CHECK(load(d / "simulate.json")["tag"] == "SteadyState");
    }

    TEST_CASE("same configuration gives byte-identical output") {
        const fs::path u = scratch("det_u"), v = scratch("det_v");
        REQUIRE(run("simulate --b 2.05 -o " + u.string()) == 0);
        REQUIRE(run("simulate --b 2.05 -o " + v.string()) == 0);
        CHECK(slurp(u / "trajectory.csv") == slurp(v / "trajectory.csv"));
        CHECK(slurp(u / "simulate.json") == slurp(v / "simulate.json"));
        const fs::path g1 = scratch("det_g1"), g2 = scratch("det_g2");
        REQUIRE(run("gspt -o " + g1.string()) == 0);
        REQUIRE(run("gspt -o " + g2.string(), "CVDP_THREADS=3") == 0);
        CHECK(slurp(g1 / "folded_singularities.csv") == slurp(g2 / "folded_singularities.csv"));
    }

    TEST_CASE("config file and flag overrides") {
        const fs::path d = scratch("cfg");
        std::ofstream(d / "run.json") << R"({"schema_version": 1, "params": {"b": 2.05}, "simulate": {"perturb_x2": -1.5}})";
        REQUIRE(run("simulate -c " + (d / "run.json").string() + " -o " + (d / "a").string()) == 0);
        const json a = load(d / "a" / "simulate.json");
        CHECK(a["tag"] == "SingleLoop");
        REQUIRE(run("simulate -c " + (d / "run.json").string() + " --b 0.3 --perturb-x2 1.5 -o " + (d / "b").string()) == 0);
        const json b = load(d / "b" / "simulate.json");
        CHECK(b["tag"] == "DoubleLoop");
        CHECK(a["config_hash"] != b["config_hash"]);
    }

    TEST_CASE("exit codes") {
        const fs::path d = scratch("exit");
        std::ofstream(d / "unknown.json") << R"({"schema_version": 1, "params": {"bogus": 1}})";
        std::ofstream(d / "broken.json") << R"({"schema_version": )";
        CHECK(run("simulate -c " + (d / "unknown.json").string() + " -o " + d.string()) == 2);
        CHECK(run("simulate -c " + (d / "broken.json").string() + " -o " + d.string()) == 2);
        CHECK(run("simulate -c " + (d / "missing.json").string() + " -o " + d.string()) == 4);
        CHECK(run("bif1d --b-min 2 --b-max 1 -o " + d.string()) == 2);
        CHECK(run("simulate --no-such-flag") == 2);
        CHECK(run("gspt -o " + d.string(), "CVDP_THREADS=zero") == 2);
        CHECK(run("simulate --eps -1 -o " + d.string()) == 2);
        // E0 is stable at Table-1 parameters, so it has no unstable manifold.
        CHECK(run("manifold -o " + d.string()) == 3);
        std::ofstream(d / "plain_file") << "x";
        CHECK(run("gspt -o " + (d / "plain_file" / "sub").string()) == 4);
    }

    TEST_CASE("map2d smoke run on a 2x2 grid") {
        const fs::path d = scratch("map_smoke");
        const auto t0 = std::chrono::steady_clock::now();
        REQUIRE(run("map2d --n-a 2 --n-b 2 --no-curves -o " + d.string(), "CVDP_THREADS=4") == 0);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        CHECK(secs < 60.0);
        const json m = load(d / "manifest.json");
        CHECK(m["files"].size() == 2);
        CHECK(first_line(d / "map.csv") == "# cvdp map2d config_hash=" + m["config_hash"].get<std::string>());
        std::ifstream in(d / "map.csv");
        std::string line;
        int rows = 0;
        while (std::getline(in, line)) ++rows;
        CHECK(rows == 2 + 4);
    }

    TEST_CASE("gspt lists six singularities") {
        const fs::path d = scratch("gspt");
        REQUIRE(run("gspt -o " + d.string()) == 0);
        CHECK(load(d / "gspt.json")["singularities"].size() == 6);
    }
}
