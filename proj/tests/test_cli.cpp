#include "catch_amalgamated.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = POSCERT_CONFIG_DIR;

fs::path out_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / ("poscert_test_cli_" + name);
    fs::remove_all(d);
    return d;
}

int run(const std::string& args) {
    const std::string cmd = std::string("\"") + POSCERT_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_config(const std::string& sub, const std::string& config, const fs::path& out) {
    return run("--quiet --config \"" + (kConfigs / config).string() + "\" --out \"" + out.string() + "\" " + sub);
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit 1") {
    CHECK(run("") == 1);
    CHECK(run("frobnicate") == 1);
    CHECK(run("certify") == 1);  // no --config
    CHECK(run("--help") == 0);
}

TEST_CASE("certify: epidemic succeeds and writes the report") {
    const auto out = out_dir("certify");
    REQUIRE(run_config("certify", "epidemic.toml", out) == 0);
    const auto j = read_json(out / "epidemic_certification.json");
    CHECK(j["certified"] == true);
    CHECK(j["lambda"].get<double>() == Catch::Approx(0.5));
    CHECK(j["model"] == "epidemic");
    fs::remove_all(out);
}

TEST_CASE("certify: negative beta is a parameter error") {
    CHECK(run_config("certify", "epidemic_negative_beta.toml", out_dir("neg")) == 1);
}

TEST_CASE("certify: boundary violation exits 2") {
    const auto out = out_dir("boundary");
    CHECK(run_config("certify", "boundary_violation.toml", out) == 2);
    const auto j = read_json(out / "certification.json");
    CHECK(j["certified"] == false);
    CHECK(j["worst_violation"]["component"] == 0);
    fs::remove_all(out);
}

TEST_CASE("simulate: epidemic writes CSV, metadata and plot") {
    const auto out = out_dir("simulate");
    REQUIRE(run_config("simulate", "epidemic.toml", out) == 0);
    CHECK(fs::exists(out / "epidemic.csv"));
    CHECK(fs::exists(out / "epidemic.svg"));
    const auto j = read_json(out / "epidemic.json");
    CHECK(j["status"] == "ok");
    CHECK(j["horizon_reached"].get<double>() == 5.0);
    CHECK(j["min_component"]["value"].get<double>() >= 0.0);
    fs::remove_all(out);
}

TEST_CASE("simulate: blow-up exits 3 with partial output") {
    const auto out = out_dir("blowup");
    CHECK(run_config("simulate", "blowup.toml", out) == 3);
    const auto j = read_json(out / "blowup.json");
    CHECK(j["status"] == "blow_up");
    const double te = j["blow_up"]["time_estimate"].get<double>();
    CHECK(te >= 0.9);
    CHECK(te <= 1.1);
    CHECK(fs::exists(out / "blowup.csv"));
    fs::remove_all(out);
}

TEST_CASE("simulate: zero horizon gives a single row") {
    const auto out = out_dir("h0");
    REQUIRE(run_config("simulate", "horizon_zero.toml", out) == 0);
    const auto csv = slurp(out / "horizon_zero.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    fs::remove_all(out);
}

TEST_CASE("simulate: solver error exits 4 with a structured error") {
    const auto dir = out_dir("solver_error");
    fs::create_directories(dir);
    std::ofstream(dir / "stiff.toml") << "model = \"scalar_system\"\n[scalar_system]\nconstant = [0.0]\n"
                                         "quadratic = [1.0]\n[initial]\ny0 = 1.0\n"
                                         "[solver]\nhorizon = 0.5\nmax_picard_iters = 1\n";
    CHECK(run("--quiet --config \"" + (dir / "stiff.toml").string() + "\" simulate") == 4);
    const auto j = read_json(dir / "run.json");
    CHECK(j["status"] == "error");
    CHECK(j["error"]["kind"] == "iteration");
    fs::remove_all(dir);
}

TEST_CASE("seed override changes nothing for a deterministic formula") {
    const auto a = out_dir("seed_a"), b = out_dir("seed_b");
    REQUIRE(run("--quiet --seed 1 --config \"" + (kConfigs / "epidemic.toml").string() + "\" --out \"" +
                a.string() + "\" certify") == 0);
    REQUIRE(run("--quiet --seed 1 --config \"" + (kConfigs / "epidemic.toml").string() + "\" --out \"" +
                b.string() + "\" certify") == 0);
    CHECK(slurp(a / "epidemic_certification.json") == slurp(b / "epidemic_certification.json"));
    CHECK(read_json(a / "epidemic_certification.json")["seed"] == 1);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("convergence: one rung succeeds, unknown benchmark is a usage error") {
    const auto out = out_dir("conv");
    REQUIRE(run_config("convergence", "convergence_single.toml", out) == 0);
    const auto csv = slurp(out / "convergence.csv");
    CHECK(csv.rfind("resolution,nodes_per_window,error\n50,100,", 0) == 0);
    CHECK(run_config("convergence", "convergence_unknown.toml", out_dir("conv_unknown")) == 1);
    fs::remove_all(out);
}

TEST_CASE("plot: renders a CSV and rejects malformed input") {
    const auto out = out_dir("plot");
    fs::create_directories(out);
    std::ofstream(out / "traj.csv") << "t,S,I[0],I[1]\n0,1,0.5,0.25\n1,0.9,0.6,0.3\n";
    CHECK(run("--quiet plot \"" + (out / "traj.csv").string() + "\" \"" + (out / "traj.svg").string() + "\"") == 0);
    CHECK(slurp(out / "traj.svg").find("<svg") == 0);
    std::ofstream(out / "bad.csv") << "t,S\n";
    CHECK(run("--quiet plot \"" + (out / "bad.csv").string() + "\" \"" + (out / "bad.svg").string() + "\"") == 1);
    CHECK(run("--quiet plot \"" + (out / "missing.csv").string() + "\"") == 1);
    fs::remove_all(out);
}
