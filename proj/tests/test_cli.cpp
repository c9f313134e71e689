#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string bin() {
    const char* p = std::getenv("OPTK_BIN");
    REQUIRE(p != nullptr);
    return p;
}

int run(const std::string& args) {
    const std::string cmd = bin() + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("optk_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("simulate writes the full artifact set and is rerun-identical") {
    const auto dir = fresh_dir("sim");
    const std::string args = "simulate --init list:0,0.9,1.8 --max-time 20 "
                             "--sample-interval 0.25 --plot --out " +
                             dir.string();
    REQUIRE(run(args) == 0);
    for (const char* f : {"config.json", "trajectory.csv", "events.csv", "clusters.json",
                          "audit.json", "plot.svg"})
        CHECK(fs::exists(dir / f));

    const std::string traj = slurp(dir / "trajectory.csv");
    CHECK(traj.rfind("t,x_0,x_1,x_2", 0) == 0);
    const std::string events = slurp(dir / "events.csv");
    CHECK(events.find("connect") != std::string::npos);
    CHECK(slurp(dir / "config.json").find("toolkit_version") != std::string::npos);

    // Byte-identical rerun.
    const auto dir2 = fresh_dir("sim2");
    REQUIRE(run("simulate --init list:0,0.9,1.8 --max-time 20 --sample-interval 0.25 "
                "--plot --out " +
                dir2.string()) == 0);
    CHECK(slurp(dir / "trajectory.csv") == slurp(dir2 / "trajectory.csv"));
    CHECK(slurp(dir / "events.csv") == slurp(dir2 / "events.csv"));
    CHECK(slurp(dir / "clusters.json") == slurp(dir2 / "clusters.json"));
    CHECK(slurp(dir / "plot.svg") == slurp(dir2 / "plot.svg"));
}

TEST_CASE("simulate equilibrium input leaves an empty event log") {
    const auto dir = fresh_dir("eq");
    REQUIRE(run("simulate --init list:0,1.5 --max-time 5 --out " + dir.string()) == 0);
    CHECK(slurp(dir / "events.csv") == "t,i,j,kind\n");
}

TEST_CASE("continuum rejects step data, solves linear data") {
    CHECK(run("continuum --init step:0:1 --T 1 --out /tmp/optk_cli_reject") == 1);

    const auto dir = fresh_dir("cont");
    REQUIRE(run("continuum --init linear:0:2 --K 64 --T 0.5 --store-interval 0.25 --out " +
                dir.string()) == 0);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "fixed_point.json"));
    CHECK(fs::exists(dir / "clusters.json"));
    CHECK(fs::exists(dir / "states/state_0.csv"));
    CHECK(slurp(dir / "states/state_0.csv").rfind("alpha,value", 0) == 0);
}

TEST_CASE("stability classifies and probes") {
    const auto dir = fresh_dir("stab");
    REQUIRE(run("stability --clusters 0:1,2.2:1 --probe --delta 1e-3 --out " + dir.string()) ==
            0);
    const std::string rep = slurp(dir / "stability.json");
    CHECK(rep.find("\"overall\": \"stable\"") != std::string::npos);
    CHECK(rep.find("\"merged\": false") != std::string::npos);
}

TEST_CASE("montecarlo control run is fully stable and deterministic") {
    const auto dir = fresh_dir("mc");
    REQUIRE(run("montecarlo --density uniform:0:0.5 --ns 12 --trials 4 --seed 7 --out " +
                dir.string()) == 0);
    const std::string rep = slurp(dir / "report.json");
    CHECK(rep.find("\"stable\": 4") != std::string::npos);

    const auto dir2 = fresh_dir("mc2");
    REQUIRE(run("montecarlo --density uniform:0:0.5 --ns 12 --trials 4 --seed 7 --out " +
                dir2.string()) == 0);
    CHECK(slurp(dir / "report.json") == slurp(dir2 / "report.json"));
    CHECK(slurp(dir / "trials.csv") == slurp(dir2 / "trials.csv"));
}

TEST_CASE("config file merges under flags and rejects unknown keys") {
    const auto dir = fresh_dir("cfg");
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "run.json");
        cfg << R"({"init": "list:0,1.5", "max-time": 5.0})";
    }
    REQUIRE(run("simulate --config " + (dir / "run.json").string() + " --out " +
                (dir / "out").string()) == 0);
    CHECK(slurp(dir / "out/config.json").find("list:0,1.5") != std::string::npos);

    {
        std::ofstream cfg(dir / "bad.json");
        cfg << R"({"no-such-key": 1})";
    }
    CHECK(run("simulate --config " + (dir / "bad.json").string() + " --out " +
              (dir / "out2").string()) == 1);
}

TEST_CASE("usage errors exit with code 1") {
    CHECK(run("simulate --init bogus:1") == 1);
    CHECK(run("nonsense") == 1);
}
