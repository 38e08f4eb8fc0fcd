// qpic <scenario> --config <file> [--seed N] [--out DIR]

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qpic/config.hpp"
#include "qpic/error.hpp"
#include "qpic/fock.hpp"
#include "qpic/scenarios.hpp"

namespace {

constexpr std::uint64_t kDefaultSeed = 20230101;

enum Exit { ok = 0, failure = 1, validation = 2, contract = 3 };

std::uint64_t parse_seed(const std::string& text, const char* origin) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &used, 10);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || text.empty() || text.front() == '-')
        throw qpic::ValidationError(std::string(origin) + " is not a non-negative integer: '" + text + "'");
    return v;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw qpic::InputError("cannot write " + path.string());
    out << content;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chip-to-chip photonic interconnect simulator"};
    std::string scenario_name, config_path, out_dir = ".";
    std::optional<std::string> seed_text;
    app.add_option("scenario", scenario_name,
                   "classical-fringe | quantum-fringe | correlation-fringe | chsh | state-tomo | process-tomo | "
                   "calibrate | loss-budget")
        ->required();
    app.add_option("--config", config_path, "JSON configuration file")->required();
    app.add_option("--seed", seed_text, "RNG seed (falls back to the config, then QPIC_SEED)");
    app.add_option("--out", out_dir, "output directory");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Exit::ok : Exit::validation;
    }

    try {
        const qpic::Scenario scenario = qpic::scenario_from_string(scenario_name);
        const qpic::ExperimentConfig cfg = qpic::load_config(config_path);

        std::uint64_t seed = kDefaultSeed;
        if (seed_text) {
            seed = parse_seed(*seed_text, "--seed");
        } else if (cfg.seed) {
            seed = *cfg.seed;
        } else if (const char* env = std::getenv("QPIC_SEED"); env && *env) {
            seed = parse_seed(env, "QPIC_SEED");
        }

        const qpic::ScenarioResult result = qpic::run_scenario(scenario, cfg, seed);
        std::filesystem::create_directories(out_dir);
        write_file(std::filesystem::path(out_dir) / "records.csv", result.records_csv);
        write_file(std::filesystem::path(out_dir) / "summary.json", result.summary.dump(2) + "\n");
        return Exit::ok;
    } catch (const qpic::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return Exit::validation;
    } catch (const qpic::ConfigurationError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return Exit::validation;
    } catch (const qpic::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return Exit::validation;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "json error: " << e.what() << "\n";
        return Exit::validation;
    } catch (const qpic::ContractViolation& e) {
        std::cerr << "physics contract violated: " << e.what() << "\n";
        return Exit::contract;
    } catch (const qpic::EmptyPostSelection& e) {
        std::cerr << "physics contract violated: " << e.what() << "\n";
        return Exit::contract;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Exit::failure;
    }
}
