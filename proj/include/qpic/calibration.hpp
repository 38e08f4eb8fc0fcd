#pragma once

// Heater calibration from optical-vs-electrical power contours, state to
// power lookup, and dB loss budgets.

#include <array>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qpic/components.hpp"
#include "qpic/detection.hpp"
#include "qpic/error.hpp"

namespace qpic {

class CalibrationError : public Error {
public:
    CalibrationError(const std::string& what, double rms, std::vector<double> residuals)
        : Error(what), rms_(rms), residuals_(std::move(residuals)) {}
    double rms() const { return rms_; }
    // One entry per sample, in input order.
    const std::vector<double>& residuals() const { return residuals_; }

private:
    double rms_;
    std::vector<double> residuals_;
};

class RangeError : public Error {
public:
    RangeError(const std::string& what, double required_phase) : Error(what), required_phase_(required_phase) {}
    double required_phase() const { return required_phase_; }

private:
    double required_phase_;
};

struct OeSample {
    double p_y_mw = 0.0;
    double p_z_mw = 0.0;
    double power_norm = 0.0;  // normalized optical power at the analyzer output
};

// theta = theta0 + alpha * P
struct HeaterCoefficients {
    double theta0 = 0.0;  // radians
    double alpha = 1.0;   // radians per mW
    double phase(double p_mw) const { return theta0 + alpha * p_mw; }
};

struct HeaterPowers {
    double p_y_mw;
    double p_z_mw;
};

// Bloch vector of the light sent into the analyzer while calibrating.
// Probing with a state on the x-z great circle, off both axes, removes the
// (theta_y, theta_z) -> (-theta_y, theta_z + pi) ambiguity.
Eigen::Vector3d default_calibration_probe();

// Normalized optical power at analyzer rail 1 for the given probe state.
double analyzer_transmission(const Eigen::Vector3d& probe_bloch, double theta_y, double theta_z);

struct CalibrationMap {
    HeaterCoefficients heater_y;
    HeaterCoefficients heater_z;
    Eigen::Vector3d probe = default_calibration_probe();
    double residual_rms = 0.0;
    double max_power_y_mw = std::numeric_limits<double>::infinity();
    double max_power_z_mw = std::numeric_limits<double>::infinity();
    std::map<Basis, HeaterPowers> lookup;  // filled for every reachable projector

    double predicted(double p_y_mw, double p_z_mw) const;
};

// Least-squares fit of the affine heater model to an O-E contour. Needs at
// least 8 distinct powers per heater, and the fitted phase range must cover
// 2 pi on each heater. Throws CalibrationError if the residual RMS exceeds
// 0.05.
CalibrationMap fit_oe_contour(const std::vector<OeSample>& samples,
                              const Eigen::Vector3d& probe = default_calibration_probe());

// Smallest non-negative heater powers realizing the projector. Throws
// RangeError when a needed power exceeds the calibrated range.
HeaterPowers powers_for_state(const CalibrationMap& map, Basis target);

// Fills map.lookup for all six projectors that are within range.
void fill_lookup(CalibrationMap& map);

// Synthetic contour on an n x n grid over [0, max_y] x [0, max_z].
std::vector<OeSample> synthetic_contour(const HeaterCoefficients& y, const HeaterCoefficients& z, int n,
                                        double max_y_mw, double max_z_mw,
                                        const Eigen::Vector3d& probe = default_calibration_probe());

// CSV with header p_y_mw,p_z_mw,power_norm.
std::vector<OeSample> read_oe_csv(std::istream& in);
std::string write_oe_csv(const std::vector<OeSample>& samples);

nlohmann::json to_json(const CalibrationMap& map);

struct LossEntry {
    std::string name;
    double db = 0.0;  // <= 0
};

struct LossBudget {
    std::vector<LossEntry> entries;
    double total_db = 0.0;
    double transmittance() const;  // 10^(total/10)
};

// Throws ValidationError for a positive entry.
LossBudget loss_budget(const std::vector<LossEntry>& entries);

// The itemized contributors, pair level (both photons), with their ranges.
struct LossContributor {
    std::string name;
    double db_low;   // more lossy end
    double db_high;  // less lossy end
    double mid() const { return 0.5 * (db_low + db_high); }
    bool link_only;  // only present on the chip-to-chip path
};
const std::vector<LossContributor>& itemized_contributors();

// Quoted totals, per photon.
struct QuotedTotals {
    double signal_low = -38.0, signal_high = -36.0;
    double idler_low = -19.0, idler_high = -18.0;
    double link_low = -16.0, link_high = -15.0;
};

// Per-photon transmittances built from the contributor mid points. Each
// pair-level item is split evenly between the photons; demultiplexing is
// carried by the 1/4 post-selection and the detectors by their efficiency,
// so both are left out.
struct PathTransmittances {
    double arm;   // one photon, chip A alone
    double link;  // extra factor for the photon crossing to chip B
};
PathTransmittances path_transmittances();

struct RatePrediction {
    double observed_chip_a_hz;    // input: pairs seen after chip A alone
    double fitted_pair_rate_hz;   // generation rate reproducing it
    double chip_to_chip_hz;       // predicted coincidences across the link
};

// Fits the generation rate to the chip-A coincidence rate, then moves the
// idler across the link.
RatePrediction predict_chip_to_chip_rate(double observed_chip_a_hz, const DetectorModel& d1 = {},
                                         const DetectorModel& d2 = {});

struct ItemizedSums {
    double pair_total_db;       // all contributors
    double chip_a_pair_db;      // without link-only items
    double link_db;             // link-only items
};
ItemizedSums itemized_sums();

}  // namespace qpic
