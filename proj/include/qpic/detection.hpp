#pragma once

// Born-rule outcome probabilities, detector and rate models, and Poissonian
// count sampling with accidental-coincidence subtraction.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qpic/fock.hpp"

namespace qpic {

struct DetectorModel {
    double efficiency = 0.5;
    double dark_rate_hz = 800.0;
    std::string label;
    void validate() const;
};

// Every mode that can carry a photon must be routed to a detector label.
// Labels need not be real detectors: filtered or discarded light is routed
// to a sink label like any other.
struct DetectorAssignment {
    std::vector<std::pair<std::string, std::string>> routes;  // (mode, detector)
    DetectorAssignment& route(std::string mode, std::string detector);
};

// Detector labels hit by the photons of one basis term, one entry per photon,
// sorted.
using Outcome = std::vector<std::string>;
using OutcomeProbabilities = std::map<Outcome, double>;

// Probabilities over the outcomes of a normalized state. Throws
// ContractViolation if an unassigned mode carries more than 1e-9.
OutcomeProbabilities outcome_probabilities(const PhotonicState& state, const DetectorAssignment& detectors);

// Probability that `detector` registers at least one photon.
double click_probability(const OutcomeProbabilities& p, const std::string& detector);
// Probability that both detectors register (photons at both labels).
double coincidence_probability(const OutcomeProbabilities& p, const std::string& d1, const std::string& d2);

// Replaces the weight on `group` by v * p + (1 - v) * (group total)/|group|:
// white noise mixed into the state that populates the group.
OutcomeProbabilities mix_white_noise(const OutcomeProbabilities& p, std::span<const Outcome> group, double v);

// Qubit-level outcome probabilities of the analyzer pair acting on a two-qubit
// density matrix; index 2*a + b, where a (b) is the output rail of analyzer A (B).
std::array<double, 4> two_qubit_outcome_probabilities(const Eigen::Matrix4cd& rho, const Eigen::Matrix2cd& analyzer_a,
                                                      const Eigen::Matrix2cd& analyzer_b);

struct RateModel {
    double pair_rate_hz = 0.0;
    double transmittance_1 = 1.0;  // arm feeding detector 1
    double transmittance_2 = 1.0;  // arm feeding detector 2
    void validate() const;
};

// Per-pair probabilities for one detector pair.
struct CountProbabilities {
    double coincidence = 0.0;
    double single_1 = 0.0;
    double single_2 = 0.0;
};

CountProbabilities count_probabilities(const OutcomeProbabilities& p, const std::string& d1, const std::string& d2);

struct SettingAngles {
    double theta_ay = 0.0;
    double theta_az = 0.0;
    double theta_by = 0.0;
    double theta_bz = 0.0;
    double theta_ss = 0.0;
};

struct CountRecord {
    SettingAngles settings;
    std::int64_t singles_1 = 0;
    std::int64_t singles_2 = 0;
    std::int64_t coincidences = 0;  // raw
    double window_s = 0.0;
    double duration_s = 0.0;
    double accidentals_estimate = 0.0;
    bool corrected = false;  // accidentals subtracted (singles-product estimator)
    bool clamped = false;    // raw - accidentals went negative and was clamped to 0

    double corrected_coincidences() const;
    // sqrt(raw + var(accidentals estimate)).
    double sigma() const;
};

// singles_1_hz * singles_2_hz * window_s * duration_s.
double estimate_accidentals(double singles_1_hz, double singles_2_hz, double window_s, double duration_s);

// Samples one record. Dark counts add to the singles only; the accidental
// coincidence rate implied by the singles rates is added to the raw
// coincidences and then subtracted again with estimate_accidentals on the
// sampled singles.
CountRecord sample_counts(const CountProbabilities& probabilities, const RateModel& rates,
                          const DetectorModel& detector_1, const DetectorModel& detector_2, double window_s,
                          double duration_s, std::uint64_t seed, const SettingAngles& settings = {});

// Expected raw coincidences for the same inputs (no sampling).
double expected_coincidences(const CountProbabilities& probabilities, const RateModel& rates,
                             const DetectorModel& detector_1, const DetectorModel& detector_2, double duration_s);

std::string count_record_csv_header();
std::string to_csv_row(const CountRecord& record);
std::string to_csv(std::span<const CountRecord> records);

}  // namespace qpic
