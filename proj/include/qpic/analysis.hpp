#pragma once

// Fringe fitting, visibility, CHSH correlation coefficients and S.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qpic/detection.hpp"
#include "qpic/error.hpp"

namespace qpic {

class FitError : public Error {
public:
    FitError(const std::string& what, double chi2, std::vector<double> residuals)
        : Error(what), chi2_(chi2), residuals_(std::move(residuals)) {}
    double chi2() const { return chi2_; }
    const std::vector<double>& residuals() const { return residuals_; }

private:
    double chi2_;
    std::vector<double> residuals_;
};

struct FringePoint {
    double angle = 0.0;  // radians
    double value = 0.0;  // counts (corrected coincidences or intensity)
    // Variance in addition to the Poisson model variance, e.g. from the
    // accidental estimate.
    double extra_variance = 0.0;
};

// y = floor + amplitude * cos(k * angle + phase)
struct FringeFit {
    int k = 1;
    double floor = 0.0;
    double amplitude = 0.0;
    double phase = 0.0;
    double sigma_floor = 0.0;
    double sigma_amplitude = 0.0;
    double sigma_phase = 0.0;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // (floor, amplitude, phase)
    double chi2 = 0.0;
    int dof = 0;
    double chi2_per_dof() const { return dof > 0 ? chi2 / dof : 0.0; }
};

struct FringeDataset {
    std::string variable;  // name of the scanned angle
    std::vector<FringePoint> points;
    std::optional<FringeFit> fit;
};

// Weighted least squares with Poisson weights (variance max(model, 1) +
// extra_variance), iteratively reweighted, with multi-start over the phase.
// Requires at least 8 points per period of k over the scanned span. Throws
// FitError on a degenerate or non-finite fit.
FringeFit fit_fringe(const FringeDataset& data, int k);
// Fits k = 1 and k = 2 and keeps the one with the lower chi2.
FringeFit fit_fringe_auto(const FringeDataset& data);

double points_per_period(const FringeDataset& data, int k);

struct Visibility {
    double value = 0.0;  // 1 - Nmin/Nmax from the fitted extrema
    double sigma = 0.0;
    double raw = 0.0;    // 1 - min/max over the samples
};

// Uses data.fit; throws FitError if the dataset has not been fitted.
Visibility visibility(const FringeDataset& data);

struct CorrelationCoefficient {
    double value = 0.0;
    double sigma = 0.0;
    std::array<CountRecord, 4> records;
};

// Records at (ay, by), (ay+pi, by+pi), (ay, by+pi), (ay+pi, by):
// E = (C1 + C2 - C3 - C4)/(C1 + C2 + C3 + C4) on corrected coincidences.
// All four must have theta_az = theta_bz = 0 and the same duration.
CorrelationCoefficient correlation_coefficient(const std::array<CountRecord, 4>& records);

enum class BellState { phi_plus, phi_minus };
std::string to_string(BellState s);

struct ChshResult {
    double s = 0.0;
    double sigma = 0.0;
    double violation_sigmas = 0.0;  // (S - 2)/sigma
    BellState state = BellState::phi_plus;
};

ChshResult chsh(const CorrelationCoefficient& c11, const CorrelationCoefficient& c12,
                const CorrelationCoefficient& c21, const CorrelationCoefficient& c22, BellState state);
ChshResult chsh(double e11, double e12, double e21, double e22, BellState state);

struct ChshAngles {
    double a1, a2, b1, b2;  // theta_y settings, radians
};
// theta_ay in {pi/2, 0} and theta_by in {pi/4, 3pi/4}, ordered so that the
// sign pattern + + + - reaches 2 sqrt2 for the given state.
ChshAngles chsh_settings(BellState state);

struct SFromVisibility {
    double s;
    double sigma;
};
SFromVisibility s_from_visibility(double v, double sigma_v);

nlohmann::json to_json(const FringeFit& fit);
nlohmann::json to_json(const Visibility& v);
nlohmann::json to_json(const CorrelationCoefficient& c);
nlohmann::json to_json(const ChshResult& r);
std::string fringe_points_csv(const FringeDataset& data);

}  // namespace qpic
