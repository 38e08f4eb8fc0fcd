#include "qpic/detection.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>

#include "qpic/random.hpp"

namespace qpic {

void DetectorModel::validate() const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw ValidationError("detector efficiency must lie in [0, 1]");
    if (!(dark_rate_hz >= 0.0) || !std::isfinite(dark_rate_hz)) throw ValidationError("dark rate must be >= 0");
}

DetectorAssignment& DetectorAssignment::route(std::string mode, std::string detector) {
    routes.emplace_back(std::move(mode), std::move(detector));
    return *this;
}

void RateModel::validate() const {
    if (!(pair_rate_hz >= 0.0) || !std::isfinite(pair_rate_hz)) throw ValidationError("pair rate must be >= 0");
    for (double t : {transmittance_1, transmittance_2})
        if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("transmittances must lie in [0, 1]");
}

OutcomeProbabilities outcome_probabilities(const PhotonicState& state, const DetectorAssignment& detectors) {
    const auto& modes = state.modes();
    std::vector<const std::string*> detector_of(modes.size(), nullptr);
    for (const auto& [mode, det] : detectors.routes) {
        const auto idx = modes.index(mode);
        if (detector_of[idx]) throw ConfigurationError("mode '" + mode + "' is routed to two detectors");
        detector_of[idx] = &det;
    }

    const double norm = state.norm_squared();
    if (std::abs(norm - 1.0) > 1e-9) throw ValidationError("outcome probabilities need a normalized state");

    OutcomeProbabilities out;
    double unassigned = 0.0;
    for (const auto& [occ, amp] : state.amplitudes()) {
        Outcome o;
        bool lost = false;
        for (std::size_t m = 0; m < occ.size(); ++m) {
            if (occ[m] == 0) continue;
            if (!detector_of[m]) {
                lost = true;
                break;
            }
            for (int k = 0; k < occ[m]; ++k) o.push_back(*detector_of[m]);
        }
        if (lost) {
            unassigned += std::norm(amp);
            continue;
        }
        std::sort(o.begin(), o.end());
        out[o] += std::norm(amp);
    }
    if (unassigned > 1e-9)
        throw ContractViolation("modes without a detector carry probability " + std::to_string(unassigned));
    return out;
}

double click_probability(const OutcomeProbabilities& p, const std::string& detector) {
    double s = 0.0;
    for (const auto& [o, prob] : p)
        if (std::find(o.begin(), o.end(), detector) != o.end()) s += prob;
    return s;
}

double coincidence_probability(const OutcomeProbabilities& p, const std::string& d1, const std::string& d2) {
    double s = 0.0;
    for (const auto& [o, prob] : p) {
        if (d1 == d2) {
            if (std::count(o.begin(), o.end(), d1) >= 2) s += prob;
        } else if (std::find(o.begin(), o.end(), d1) != o.end() && std::find(o.begin(), o.end(), d2) != o.end()) {
            s += prob;
        }
    }
    return s;
}

OutcomeProbabilities mix_white_noise(const OutcomeProbabilities& p, std::span<const Outcome> group, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("noise visibility must lie in [0, 1]");
    if (group.empty()) throw ConfigurationError("white-noise group is empty");
    double total = 0.0;
    for (const auto& o : group) {
        auto it = p.find(o);
        if (it != p.end()) total += it->second;
    }
    OutcomeProbabilities out = p;
    const double flat = total / static_cast<double>(group.size());
    for (const auto& o : group) {
        auto it = p.find(o);
        const double orig = it == p.end() ? 0.0 : it->second;
        out[o] = v * orig + (1.0 - v) * flat;
    }
    return out;
}

std::array<double, 4> two_qubit_outcome_probabilities(const Eigen::Matrix4cd& rho, const Eigen::Matrix2cd& analyzer_a,
                                                      const Eigen::Matrix2cd& analyzer_b) {
    Eigen::Matrix4cd u;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d) u(2 * a + b, 2 * c + d) = analyzer_a(a, c) * analyzer_b(b, d);
    const Eigen::Matrix4cd out = u * rho * u.adjoint();
    return {out(0, 0).real(), out(1, 1).real(), out(2, 2).real(), out(3, 3).real()};
}

CountProbabilities count_probabilities(const OutcomeProbabilities& p, const std::string& d1, const std::string& d2) {
    return {coincidence_probability(p, d1, d2), click_probability(p, d1), click_probability(p, d2)};
}

double CountRecord::corrected_coincidences() const {
    if (!corrected) return static_cast<double>(coincidences);
    return std::max(0.0, static_cast<double>(coincidences) - accidentals_estimate);
}

double CountRecord::sigma() const {
    double var = static_cast<double>(coincidences);
    if (corrected && accidentals_estimate > 0.0) {
        double rel = 0.0;
        if (singles_1 > 0) rel += 1.0 / static_cast<double>(singles_1);
        if (singles_2 > 0) rel += 1.0 / static_cast<double>(singles_2);
        var += accidentals_estimate * accidentals_estimate * rel;
    }
    return std::sqrt(var);
}

double estimate_accidentals(double singles_1_hz, double singles_2_hz, double window_s, double duration_s) {
    if (singles_1_hz < 0.0 || singles_2_hz < 0.0 || window_s < 0.0 || duration_s < 0.0)
        throw ValidationError("accidental estimator inputs must be >= 0");
    return singles_1_hz * singles_2_hz * window_s * duration_s;
}

namespace {

struct Means {
    double singles_1_hz;
    double singles_2_hz;
    double true_coinc_hz;
};

Means expected_rates(const CountProbabilities& pr, const RateModel& rates, const DetectorModel& d1,
                     const DetectorModel& d2) {
    rates.validate();
    d1.validate();
    d2.validate();
    const double arm1 = rates.pair_rate_hz * rates.transmittance_1 * d1.efficiency;
    const double arm2 = rates.pair_rate_hz * rates.transmittance_2 * d2.efficiency;
    const double coinc = rates.pair_rate_hz * rates.transmittance_1 * rates.transmittance_2 * d1.efficiency *
                         d2.efficiency * pr.coincidence;
    return {arm1 * pr.single_1 + d1.dark_rate_hz, arm2 * pr.single_2 + d2.dark_rate_hz, coinc};
}

}  // namespace

double expected_coincidences(const CountProbabilities& probabilities, const RateModel& rates,
                             const DetectorModel& detector_1, const DetectorModel& detector_2, double duration_s) {
    return expected_rates(probabilities, rates, detector_1, detector_2).true_coinc_hz * duration_s;
}

CountRecord sample_counts(const CountProbabilities& probabilities, const RateModel& rates,
                          const DetectorModel& detector_1, const DetectorModel& detector_2, double window_s,
                          double duration_s, std::uint64_t seed, const SettingAngles& settings) {
    if (!(duration_s > 0.0)) throw ValidationError("duration must be > 0");
    if (!(window_s > 0.0)) throw ValidationError("coincidence window must be > 0");
    const Means m = expected_rates(probabilities, rates, detector_1, detector_2);

    Rng rng(seed);
    CountRecord r;
    r.settings = settings;
    r.window_s = window_s;
    r.duration_s = duration_s;
    r.singles_1 = rng.poisson(m.singles_1_hz * duration_s);
    r.singles_2 = rng.poisson(m.singles_2_hz * duration_s);
    const double accidental_mean = estimate_accidentals(m.singles_1_hz, m.singles_2_hz, window_s, duration_s);
    r.coincidences = rng.poisson(m.true_coinc_hz * duration_s + accidental_mean);

    r.accidentals_estimate =
        estimate_accidentals(static_cast<double>(r.singles_1) / duration_s,
                             static_cast<double>(r.singles_2) / duration_s, window_s, duration_s);
    r.corrected = true;
    r.clamped = static_cast<double>(r.coincidences) < r.accidentals_estimate;
    return r;
}

std::string count_record_csv_header() {
    return "theta_ay,theta_az,theta_by,theta_bz,theta_ss,singles1,singles2,coinc_raw,accidentals,coinc_corrected,"
           "sigma,window_s,duration_s";
}

std::string to_csv_row(const CountRecord& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%.12g,%.12g,%.12g,%.12g,%.12g,%" PRId64 ",%" PRId64 ",%" PRId64 ",%.9g,%.9g,%.9g,%.6g,%.9g",
                  r.settings.theta_ay, r.settings.theta_az, r.settings.theta_by, r.settings.theta_bz,
                  r.settings.theta_ss, r.singles_1, r.singles_2, r.coincidences, r.accidentals_estimate,
                  r.corrected_coincidences(), r.sigma(), r.window_s, r.duration_s);
    return buf;
}

std::string to_csv(std::span<const CountRecord> records) {
    std::string out = count_record_csv_header() + "\n";
    for (const auto& r : records) out += to_csv_row(r) + "\n";
    return out;
}

}  // namespace qpic
