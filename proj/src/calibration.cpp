#include "qpic/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <set>
#include <sstream>

#include "qpic/numerics.hpp"

namespace qpic {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_2pi(double x) {
    x = std::fmod(x, kTwoPi);
    if (x < 0.0) x += kTwoPi;
    if (x >= kTwoPi - 1e-12) x = 0.0;
    return x;
}

struct Candidate {
    double theta0;
    double alpha;
};

}  // namespace

Eigen::Vector3d default_calibration_probe() {
    return Eigen::Vector3d(-1.0, 0.0, 1.0) / std::numbers::sqrt2;
}

double analyzer_transmission(const Eigen::Vector3d& probe_bloch, double theta_y, double theta_z) {
    return 0.5 * (1.0 + probe_bloch.dot(projector_bloch(theta_y, theta_z)));
}

double CalibrationMap::predicted(double p_y_mw, double p_z_mw) const {
    return analyzer_transmission(probe, heater_y.phase(p_y_mw), heater_z.phase(p_z_mw));
}

CalibrationMap fit_oe_contour(const std::vector<OeSample>& samples, const Eigen::Vector3d& probe) {
    std::set<double> ys, zs;
    for (const auto& s : samples) {
        if (!std::isfinite(s.p_y_mw) || !std::isfinite(s.p_z_mw) || !std::isfinite(s.power_norm))
            throw InputError("calibration sample is not finite");
        if (s.p_y_mw < 0.0 || s.p_z_mw < 0.0) throw InputError("heater power must be >= 0");
        ys.insert(s.p_y_mw);
        zs.insert(s.p_z_mw);
    }
    if (ys.size() < 8 || zs.size() < 8) throw ValidationError("calibration grid must be at least 8 x 8");
    const double min_y = *ys.begin(), max_y = *ys.rbegin();
    const double min_z = *zs.begin(), max_z = *zs.rbegin();

    const auto n = samples.size();
    auto candidates = [](double pmax) {
        std::vector<Candidate> c;
        const double step = kPi / (4.0 * pmax);
        for (double a = 0.5 * kTwoPi / pmax; a <= 8.0 * kTwoPi / pmax + 1e-12; a += step)
            for (int k = 0; k < 8; ++k) c.push_back({k * kPi / 4.0, a});
        return c;
    };
    const std::vector<Candidate> cy = candidates(max_y), cz = candidates(max_z);

    // cos/sin of each candidate phase at each sample.
    std::vector<double> cos_y(cy.size() * n), sin_y(cy.size() * n), cos_z(cz.size() * n), sin_z(cz.size() * n);
    for (std::size_t c = 0; c < cy.size(); ++c)
        for (std::size_t i = 0; i < n; ++i) {
            const double t = cy[c].theta0 + cy[c].alpha * samples[i].p_y_mw;
            cos_y[c * n + i] = std::cos(t);
            sin_y[c * n + i] = std::sin(t);
        }
    for (std::size_t c = 0; c < cz.size(); ++c)
        for (std::size_t i = 0; i < n; ++i) {
            const double t = cz[c].theta0 + cz[c].alpha * samples[i].p_z_mw;
            cos_z[c * n + i] = std::cos(t);
            sin_z[c * n + i] = std::sin(t);
        }

    struct Scored {
        double cost;
        std::size_t y, z;
    };
    constexpr std::size_t keep = 12;
    std::vector<Scored> top;
    for (std::size_t a = 0; a < cy.size(); ++a) {
        const double* cya = &cos_y[a * n];
        const double* sya = &sin_y[a * n];
        for (std::size_t b = 0; b < cz.size(); ++b) {
            const double* czb = &cos_z[b * n];
            const double* szb = &sin_z[b * n];
            double cost = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double p =
                    0.5 * (1.0 + probe[0] * sya[i] * czb[i] - probe[1] * sya[i] * szb[i] + probe[2] * cya[i]);
                const double d = p - samples[i].power_norm;
                cost += d * d;
            }
            if (top.size() < keep || cost < top.back().cost) {
                top.push_back({cost, a, b});
                std::sort(top.begin(), top.end(), [](const auto& l, const auto& r) { return l.cost < r.cost; });
                if (top.size() > keep) top.pop_back();
            }
        }
    }

    auto residuals = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            r[static_cast<Eigen::Index>(i)] =
                analyzer_transmission(probe, x[0] + x[1] * samples[i].p_y_mw, x[2] + x[3] * samples[i].p_z_mw) -
                samples[i].power_norm;
        return r;
    };

    Eigen::VectorXd best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const auto& s : top) {
        Eigen::VectorXd x0(4);
        x0 << cy[s.y].theta0, cy[s.y].alpha, cz[s.z].theta0, cz[s.z].alpha;
        LeastSquaresOptions opt;
        opt.tolerance = 1e-16;
        const LeastSquaresResult r = levenberg_marquardt(residuals, x0, {}, opt);
        if (r.x.allFinite() && r.x[1] > 0.0 && r.x[3] > 0.0 && r.cost < best_cost) {
            best_cost = r.cost;
            best = r.x;
        }
    }
    if (best.size() != 4) throw CalibrationError("no calibration candidate converged", 1.0, {});

    CalibrationMap map;
    map.probe = probe;
    map.heater_y = {wrap_2pi(best[0]), best[1]};
    map.heater_z = {wrap_2pi(best[2]), best[3]};
    map.max_power_y_mw = max_y;
    map.max_power_z_mw = max_z;
    const Eigen::VectorXd r = residuals(best);
    map.residual_rms = std::sqrt(r.squaredNorm() / static_cast<double>(n));
    if (map.residual_rms > 0.05)
        throw CalibrationError("calibration residual RMS " + std::to_string(map.residual_rms) + " exceeds 0.05",
                               map.residual_rms, std::vector<double>(r.data(), r.data() + r.size()));
    if (map.heater_y.alpha * (max_y - min_y) < kTwoPi - 1e-6 || map.heater_z.alpha * (max_z - min_z) < kTwoPi - 1e-6)
        throw ValidationError("calibration scan spans less than 2 pi on a heater");
    fill_lookup(map);
    return map;
}

HeaterPowers powers_for_state(const CalibrationMap& map, Basis target) {
    if (!(map.heater_y.alpha > 0.0) || !(map.heater_z.alpha > 0.0)) throw ValidationError("heater alpha must be > 0");
    const AnalyzerAngles a = analyzer_angles_for(target);
    const bool pole = std::abs(std::sin(a.theta_y)) < 1e-12;

    std::vector<std::pair<double, double>> branches = {{a.theta_y, a.theta_z}};
    if (!pole) branches.push_back({-a.theta_y, a.theta_z + kPi});

    std::optional<HeaterPowers> best;
    double needed = 0.0;
    for (const auto& [ty, tz] : branches) {
        const double py = wrap_2pi(ty - map.heater_y.theta0) / map.heater_y.alpha;
        // At the poles theta_z does not change the projector.
        const double pz = pole ? 0.0 : wrap_2pi(tz - map.heater_z.theta0) / map.heater_z.alpha;
        if (py > map.max_power_y_mw) {
            needed = ty;
            continue;
        }
        if (pz > map.max_power_z_mw) {
            needed = tz;
            continue;
        }
        if (!best || py + pz < best->p_y_mw + best->p_z_mw) best = HeaterPowers{py, pz};
    }
    if (!best)
        throw RangeError("projector '" + to_string(target) + "' needs more heater power than the calibrated range",
                         needed);
    return *best;
}

void fill_lookup(CalibrationMap& map) {
    map.lookup.clear();
    for (Basis b : kAllBases) {
        try {
            map.lookup[b] = powers_for_state(map, b);
        } catch (const RangeError&) {
        }
    }
}

std::vector<OeSample> synthetic_contour(const HeaterCoefficients& y, const HeaterCoefficients& z, int n,
                                        double max_y_mw, double max_z_mw, const Eigen::Vector3d& probe) {
    if (n < 2) throw ValidationError("synthetic contour needs n >= 2");
    std::vector<OeSample> out;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double py = max_y_mw * i / (n - 1);
            const double pz = max_z_mw * j / (n - 1);
            out.push_back({py, pz, analyzer_transmission(probe, y.phase(py), z.phase(pz))});
        }
    return out;
}

std::vector<OeSample> read_oe_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("calibration CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "p_y_mw,p_z_mw,power_norm") throw InputError("calibration CSV header must be p_y_mw,p_z_mw,power_norm");
    std::vector<OeSample> out;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        OeSample s;
        char c1 = 0, c2 = 0;
        if (!(ss >> s.p_y_mw >> c1 >> s.p_z_mw >> c2 >> s.power_norm) || c1 != ',' || c2 != ',')
            throw InputError("calibration CSV row " + std::to_string(row) + " is malformed");
        ss >> std::ws;
        if (!ss.eof()) throw InputError("calibration CSV row " + std::to_string(row) + " has extra fields");
        out.push_back(s);
    }
    return out;
}

std::string write_oe_csv(const std::vector<OeSample>& samples) {
    std::string out = "p_y_mw,p_z_mw,power_norm\n";
    char buf[128];
    for (const auto& s : samples) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", s.p_y_mw, s.p_z_mw, s.power_norm);
        out += buf;
    }
    return out;
}

nlohmann::json to_json(const CalibrationMap& map) {
    nlohmann::json lookup = nlohmann::json::object();
    for (const auto& [b, p] : map.lookup) lookup[to_string(b)] = {{"p_y_mw", p.p_y_mw}, {"p_z_mw", p.p_z_mw}};
    return {{"heater_y", {{"theta0", map.heater_y.theta0}, {"alpha_rad_per_mw", map.heater_y.alpha}}},
            {"heater_z", {{"theta0", map.heater_z.theta0}, {"alpha_rad_per_mw", map.heater_z.alpha}}},
            {"probe_bloch", {map.probe[0], map.probe[1], map.probe[2]}},
            {"residual_rms", map.residual_rms},
            {"max_power_y_mw", map.max_power_y_mw},
            {"max_power_z_mw", map.max_power_z_mw},
            {"lookup", lookup}};
}

double LossBudget::transmittance() const {
    return std::pow(10.0, total_db / 10.0);
}

LossBudget loss_budget(const std::vector<LossEntry>& entries) {
    LossBudget b;
    for (const auto& e : entries) {
        if (!std::isfinite(e.db)) throw ValidationError("loss entry '" + e.name + "' is not finite");
        if (e.db > 0.0) throw ValidationError("loss entry '" + e.name + "' is positive");
        b.total_db += e.db;
    }
    b.entries = entries;
    return b;
}

const std::vector<LossContributor>& itemized_contributors() {
    static const std::vector<LossContributor> items = {
        {"off-chip filters", -6.0, -6.0, false},
        {"SNSPD", -6.0, -6.0, false},
        {"1D grating couplers", -9.5, -9.0, false},
        {"2D grating couplers", -15.5, -15.0, true},
        {"demultiplexing MMIs", -6.0, -6.0, false},
        {"MMI excess and propagation", -9.0, -8.0, false},
    };
    return items;
}

ItemizedSums itemized_sums() {
    ItemizedSums s{0.0, 0.0, 0.0};
    for (const auto& c : itemized_contributors()) {
        s.pair_total_db += c.mid();
        (c.link_only ? s.link_db : s.chip_a_pair_db) += c.mid();
    }
    return s;
}

PathTransmittances path_transmittances() {
    std::vector<LossEntry> arm, link;
    for (const auto& c : itemized_contributors()) {
        if (c.name == "SNSPD" || c.name == "demultiplexing MMIs") continue;
        if (c.link_only) link.push_back({c.name, c.mid()});
        else arm.push_back({c.name, c.mid() / 2.0});
    }
    return {loss_budget(arm).transmittance(), loss_budget(link).transmittance()};
}

RatePrediction predict_chip_to_chip_rate(double observed_chip_a_hz, const DetectorModel& d1, const DetectorModel& d2) {
    if (!(observed_chip_a_hz > 0.0)) throw ValidationError("observed pair rate must be > 0");
    const PathTransmittances t = path_transmittances();
    const CountProbabilities post{0.25, 0.5, 0.5};
    const double per_hz = expected_coincidences(post, RateModel{1.0, t.arm, t.arm}, d1, d2, 1.0);

    RatePrediction out;
    out.observed_chip_a_hz = observed_chip_a_hz;
    out.fitted_pair_rate_hz = observed_chip_a_hz / per_hz;
    const RateModel across{out.fitted_pair_rate_hz, t.arm, t.arm * t.link};
    out.chip_to_chip_hz = expected_coincidences(post, across, d1, d2, 1.0);
    return out;
}

}  // namespace qpic
