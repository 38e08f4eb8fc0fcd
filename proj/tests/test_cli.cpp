#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qpic/config.hpp"
#include "qpic/scenarios.hpp"

using namespace qpic;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " \"" QPIC_CLI_PATH "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("qpic_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << body;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config angles are read in units of pi") {
    const auto cfg = parse_config(nlohmann::json::parse(R"({"source": {"theta_ss": 0.5}})"));
    CHECK(cfg.source.theta_ss == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("config rejects unknown keys and bad values") {
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"sourse": {}})")), ValidationError);
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"source": {"theta": 1}})")), ValidationError);
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"detector_1": {"efficiency": 2}})")), ValidationError);
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"run": {"duration_s": "long"}})")), ValidationError);
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"scenario": "teleport"})")), ValidationError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), InputError);
}

TEST_CASE("scenario in the config must match the request") {
    const auto cfg = parse_config(nlohmann::json::parse(R"({"scenario": "chsh"})"));
    CHECK_THROWS_AS(run_scenario(Scenario::loss_budget, cfg, 1), ValidationError);
}

TEST_CASE("cli writes records and summary") {
    const fs::path dir = scratch("ok");
    const fs::path cfg = write_config(dir, R"({"scenario": "loss-budget"})");
    REQUIRE(run_cli("loss-budget --config " + cfg.string() + " --out " + (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "records.csv"));
    const auto summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
    CHECK(summary["scenario"] == "loss-budget");
}

TEST_CASE("cli seed precedence") {
    const fs::path dir = scratch("seed");
    const fs::path with_seed = write_config(dir, R"({"seed": 5})");
    const std::string out = (dir / "out").string();
    auto seed_of = [&] { return nlohmann::json::parse(slurp(dir / "out" / "summary.json"))["seed"].get<std::uint64_t>(); };

    REQUIRE(run_cli("loss-budget --config " + with_seed.string() + " --seed 9 --out " + out, "QPIC_SEED=3") == 0);
    CHECK(seed_of() == 9);
    REQUIRE(run_cli("loss-budget --config " + with_seed.string() + " --out " + out, "QPIC_SEED=3") == 0);
    CHECK(seed_of() == 5);
    const fs::path bare = dir / "bare.json";
    std::ofstream(bare) << "{}";
    REQUIRE(run_cli("loss-budget --config " + bare.string() + " --out " + out, "QPIC_SEED=3") == 0);
    CHECK(seed_of() == 3);
}

TEST_CASE("cli exit codes") {
    const fs::path dir = scratch("codes");
    const std::string out = " --out " + (dir / "out").string();
    CHECK(run_cli("chsh --config " + (dir / "missing.json").string() + out) == 2);
    const fs::path bad = write_config(dir, R"({"detector_1": {"efficency": 0.5}})");
    CHECK(run_cli("chsh --config " + bad.string() + out) == 2);
    CHECK(run_cli("warp --config " + bad.string() + out) == 2);
    CHECK(run_cli("loss-budget --config " + bad.string() + " --seed -4" + out) == 2);
    const fs::path opaque = dir / "opaque.json";
    std::ofstream(opaque) << R"({"ppc_out": {"insertion_loss_db": 400}, "ppc_in": {"insertion_loss_db": 400}})";
    CHECK(run_cli("chsh --config " + opaque.string() + out) == 3);
}
