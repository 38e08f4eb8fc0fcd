#pragma once

// Experiment configuration. One JSON document; unknown keys are rejected.
// Angles are given in units of pi (0.25 means pi/4) and converted to radians
// on load.

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpic/calibration.hpp"
#include "qpic/components.hpp"
#include "qpic/detection.hpp"

namespace qpic {

enum class Scenario {
    classical_fringe,
    quantum_fringe,
    correlation_fringe,
    chsh,
    state_tomo,
    process_tomo,
    calibrate,
    loss_budget,
};

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);  // ValidationError if unknown

struct CalibrationRun {
    std::string csv;  // sample file; empty means synthetic
    HeaterCoefficients heater_y{0.3, 0.11};
    HeaterCoefficients heater_z{0.3, 0.11};
    int grid = 16;
    double max_power_y_mw = 120.0;
    double max_power_z_mw = 120.0;
    double noise = 0.0;  // relative multiplicative noise on synthetic samples
};

struct RunSettings {
    double duration_s = 0.0;  // 0 = scenario default
    double window_s = 450e-12;
    int points = 0;           // 0 = scenario default
    double scan_start = 0.0;  // radians
    double scan_stop = 0.0;   // radians, 0 = one full turn
    std::vector<double> theta_ay;  // correlation fringe, radians
    std::int64_t shots_per_basis = 10000;
    double coincidence_rate_hz = 0.0;  // 0 = scenario default; sets the pair rate when none is given
    std::vector<double> observed_pair_rates_hz = {500.0, 650.0, 800.0};
    std::vector<LossEntry> loss_entries;  // custom budget for loss-budget
    CalibrationRun calibration;
};

struct ExperimentConfig {
    std::optional<Scenario> scenario;
    std::optional<std::uint64_t> seed;
    SourceSettings source{std::numbers::pi / 2.0, 1.0};
    PpcModel ppc_out{18.0, 0.0};
    PpcModel ppc_in{18.0, 0.0};
    Eigen::Vector3d fibre_axis{0.0, 0.0, 1.0};
    double fibre_angle = 0.0;  // radians
    FibreChannel fibre;        // rotation built from axis and angle
    double demux_reflectivity = 0.5;
    WavelengthPlan wavelengths;
    DetectorModel detector_1{0.5, 800.0, "D1"};
    DetectorModel detector_2{0.5, 800.0, "D2"};
    std::optional<double> pair_rate_hz;
    std::optional<double> transmittance_1;
    std::optional<double> transmittance_2;
    double noise_visibility = 0.9763;
    RunSettings run;

    void validate() const;
};

// Throws ValidationError for unknown keys, wrong types or out-of-range values.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

// Echo of the effective configuration (radians), for summaries.
nlohmann::json to_json(const ExperimentConfig& config);

}  // namespace qpic
