#pragma once

// Experiment scenarios: the physics pipelines behind each CLI subcommand and
// the helpers they share.

#include <array>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpic/analysis.hpp"
#include "qpic/config.hpp"
#include "qpic/detection.hpp"
#include "qpic/tomography.hpp"

namespace qpic {

// Detector labels. Primed labels are the complementary analyzer outputs.
inline const std::string kD1 = "D1";    // tb.s, analyzer A rail 1
inline const std::string kD1p = "D1'";  // tt.s
inline const std::string kD2 = "D2";    // tt.i, idler leaving analyzer A
inline const std::string kD2p = "D2'";  // tb.i
inline const std::string kD3 = "D3";    // bb.i, analyzer B rail 1
inline const std::string kD3p = "D3'";  // bt.i
inline const std::string kSink = "sink";

// Analyzer setting that leaves both rails untouched (theta_y = theta_z = pi).
inline constexpr AnalyzerAngles kIdentityAnalyzer{std::numbers::pi, std::numbers::pi};

InterconnectSettings interconnect_settings(const ExperimentConfig& cfg, double theta_ss, AnalyzerAngles a,
                                           AnalyzerAngles b);

// Routes the listed modes to detectors and every other mode of `state` to
// the sink.
DetectorAssignment assign_detectors(const PhotonicState& state,
                                    const std::vector<std::pair<std::string, std::string>>& routes);

// Pair probabilities at D1/D3 across the link, white noise v mixed into the
// four post-selected outcomes.
CountProbabilities correlation_probabilities(const InterconnectSettings& settings, double v);
// Pair probabilities at D1/D2 with both photons leaving analyzer A.
CountProbabilities quantum_fringe_probabilities(const InterconnectSettings& settings, double v);
// Probability that the single-photon probe reaches D1.
double classical_fringe_probability(const InterconnectSettings& settings);

// Post-selected two-qubit state after the link.
Eigen::Matrix4cd link_two_qubit_state(const InterconnectSettings& settings);

RateModel chip_a_rate_model(const ExperimentConfig& cfg);
RateModel link_rate_model(const ExperimentConfig& cfg);

// Bell state implied by theta_ss (pi/2 -> phi+, pi -> phi-), or throws
// ValidationError.
BellState bell_state_for(double theta_ss);

struct ChshPlan {
    BellState state;
    ChshAngles angles;
    // 16 settings: four coefficients (11, 12, 21, 22) x four records.
    std::array<SettingAngles, 16> settings;
    std::array<CountProbabilities, 16> probabilities;
};

ChshPlan plan_chsh(const ExperimentConfig& cfg);
// S from the exact coincidence probabilities.
ChshResult exact_chsh(const ChshPlan& plan);
struct ChshRun {
    std::array<CountRecord, 16> records;
    std::array<CorrelationCoefficient, 4> coefficients;
    ChshResult result;
};
ChshRun sample_chsh(const ChshPlan& plan, const ExperimentConfig& cfg, double duration_s, std::uint64_t seed);

// Single photon in the path qubit `ket` through one PPC (path -> pol),
// post-selected on the photon surviving, then projected by an ideal
// analyzer: probability of each of the six projectors.
std::map<Basis, double> ppc_projector_probabilities(const PpcModel& model, const Eigen::Vector2cd& ket);
// Post-selected output state of the same channel.
Eigen::Matrix2cd ppc_output_state(const PpcModel& model, const Eigen::Vector2cd& ket);

struct ScenarioResult {
    std::string records_csv;
    nlohmann::json summary;
};

ScenarioResult run_scenario(Scenario scenario, const ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace qpic
