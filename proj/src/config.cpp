#include "qpic/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qpic {

namespace {

constexpr double kPi = std::numbers::pi;

using nlohmann::json;

// Reads the keys of one JSON object and rejects any key nobody asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError(where() + " must be an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number()) throw ValidationError(where(key) + " must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ValidationError(where(key) + " must be finite");
        return x;
    }

    // Value given in units of pi, returned in radians.
    double angle(const std::string& key, double fallback_radians) {
        return has(key) ? number(key, 0.0) * kPi : fallback_radians;
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) throw ValidationError(where(key) + " must be an integer");
        return v.get<std::int64_t>();
    }

    std::string text(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_string()) throw ValidationError(where(key) + " must be a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_array()) throw ValidationError(where(key) + " must be an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ValidationError(where(key) + " must be an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    const json& child(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string where(const std::string& key = "") const {
        if (key.empty()) return path_.empty() ? "config" : path_;
        return path_.empty() ? key : path_ + "." + key;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw ValidationError("unknown config key '" + where(k) + "'");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_ppc(Section& parent, const std::string& key, PpcModel& ppc) {
    if (!parent.has(key)) return;
    Section s(parent.child(key), parent.where(key));
    if (s.has("extinction_db")) {
        const json& v = s.child("extinction_db");
        if (v.is_null()) ppc.extinction_db = std::numeric_limits<double>::infinity();
        else ppc.extinction_db = s.number("extinction_db", ppc.extinction_db);
    }
    ppc.insertion_loss_db = s.number("insertion_loss_db", ppc.insertion_loss_db);
    s.finish();
}

void read_detector(Section& parent, const std::string& key, DetectorModel& d) {
    if (!parent.has(key)) return;
    Section s(parent.child(key), parent.where(key));
    d.efficiency = s.number("efficiency", d.efficiency);
    d.dark_rate_hz = s.number("dark_rate_hz", d.dark_rate_hz);
    d.label = s.text("label", d.label);
    s.finish();
}

void read_heater(Section& parent, const std::string& key, HeaterCoefficients& h) {
    if (!parent.has(key)) return;
    Section s(parent.child(key), parent.where(key));
    h.theta0 = s.angle("theta0", h.theta0);
    h.alpha = s.number("alpha_rad_per_mw", h.alpha);
    s.finish();
}

}  // namespace

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::classical_fringe: return "classical-fringe";
        case Scenario::quantum_fringe: return "quantum-fringe";
        case Scenario::correlation_fringe: return "correlation-fringe";
        case Scenario::chsh: return "chsh";
        case Scenario::state_tomo: return "state-tomo";
        case Scenario::process_tomo: return "process-tomo";
        case Scenario::calibrate: return "calibrate";
        case Scenario::loss_budget: return "loss-budget";
    }
    return "?";
}

Scenario scenario_from_string(const std::string& name) {
    for (Scenario s : {Scenario::classical_fringe, Scenario::quantum_fringe, Scenario::correlation_fringe,
                       Scenario::chsh, Scenario::state_tomo, Scenario::process_tomo, Scenario::calibrate,
                       Scenario::loss_budget})
        if (to_string(s) == name) return s;
    throw ValidationError("unknown scenario '" + name + "'");
}

void ExperimentConfig::validate() const {
    source.validate();
    ppc_out.validate();
    ppc_in.validate();
    fibre.validate();
    wavelengths.validate();
    detector_1.validate();
    detector_2.validate();
    if (!(demux_reflectivity >= 0.0 && demux_reflectivity <= 1.0))
        throw ValidationError("demux_reflectivity must lie in [0, 1]");
    if (!(noise_visibility >= 0.0 && noise_visibility <= 1.0))
        throw ValidationError("noise.visibility must lie in [0, 1]");
    if (pair_rate_hz && !(*pair_rate_hz >= 0.0)) throw ValidationError("rates.pair_rate_hz must be >= 0");
    for (const auto& t : {transmittance_1, transmittance_2})
        if (t && !(*t >= 0.0 && *t <= 1.0)) throw ValidationError("rates transmittances must lie in [0, 1]");
    if (fibre_axis.norm() < 1e-12) throw ValidationError("fibre.rotation_axis must be non-zero");
    if (run.duration_s < 0.0) throw ValidationError("run.duration_s must be > 0");
    if (!(run.window_s > 0.0)) throw ValidationError("run.window_s must be > 0");
    if (run.points < 0) throw ValidationError("run.points must be > 0");
    if (run.shots_per_basis <= 0) throw ValidationError("run.shots_per_basis must be > 0");
    if (run.coincidence_rate_hz < 0.0) throw ValidationError("run.coincidence_rate_hz must be > 0");
    for (double r : run.observed_pair_rates_hz)
        if (!(r > 0.0)) throw ValidationError("run.observed_pair_rates_hz entries must be > 0");
    const auto& c = run.calibration;
    if (c.grid < 8) throw ValidationError("run.calibration.grid must be >= 8");
    if (!(c.max_power_y_mw > 0.0) || !(c.max_power_z_mw > 0.0))
        throw ValidationError("run.calibration max powers must be > 0");
    if (!(c.heater_y.alpha > 0.0) || !(c.heater_z.alpha > 0.0))
        throw ValidationError("run.calibration heater alpha must be > 0");
    if (!(c.noise >= 0.0 && c.noise < 1.0)) throw ValidationError("run.calibration.noise must lie in [0, 1)");
}

ExperimentConfig parse_config(const json& doc) {
    ExperimentConfig cfg;
    try {
        Section root(doc, "");
        if (root.has("scenario")) cfg.scenario = scenario_from_string(root.text("scenario", ""));
        if (root.has("seed")) {
            const std::int64_t s = root.integer("seed", 0);
            if (s < 0) throw ValidationError("seed must be >= 0");
            cfg.seed = static_cast<std::uint64_t>(s);
        }
        if (root.has("source")) {
            Section s(root.child("source"), "source");
            cfg.source.theta_ss = s.angle("theta_ss", cfg.source.theta_ss);
            cfg.source.pair_amplitude = s.number("pair_amplitude", cfg.source.pair_amplitude);
            s.finish();
        }
        read_ppc(root, "ppc_out", cfg.ppc_out);
        read_ppc(root, "ppc_in", cfg.ppc_in);
        if (root.has("fibre")) {
            Section s(root.child("fibre"), "fibre");
            const auto axis = s.numbers("rotation_axis", {cfg.fibre_axis[0], cfg.fibre_axis[1], cfg.fibre_axis[2]});
            if (axis.size() != 3) throw ValidationError("fibre.rotation_axis must have 3 entries");
            cfg.fibre_axis = {axis[0], axis[1], axis[2]};
            cfg.fibre_angle = s.angle("rotation_angle", cfg.fibre_angle);
            cfg.fibre.compensation_residual = s.angle("compensation_residual", cfg.fibre.compensation_residual);
            const std::int64_t seed = s.integer("residual_seed", 0);
            if (seed < 0) throw ValidationError("fibre.residual_seed must be >= 0");
            cfg.fibre.residual_seed = static_cast<std::uint64_t>(seed);
            s.finish();
        }
        cfg.demux_reflectivity = root.number("demux_reflectivity", cfg.demux_reflectivity);
        if (root.has("wavelengths")) {
            Section s(root.child("wavelengths"), "wavelengths");
            cfg.wavelengths.pump_nm = s.number("pump_nm", cfg.wavelengths.pump_nm);
            cfg.wavelengths.signal_nm = s.number("signal_nm", cfg.wavelengths.signal_nm);
            cfg.wavelengths.idler_nm = s.number("idler_nm", cfg.wavelengths.idler_nm);
            s.finish();
        }
        read_detector(root, "detector_1", cfg.detector_1);
        read_detector(root, "detector_2", cfg.detector_2);
        if (root.has("rates")) {
            Section s(root.child("rates"), "rates");
            if (s.has("pair_rate_hz")) cfg.pair_rate_hz = s.number("pair_rate_hz", 0.0);
            if (s.has("transmittance_1")) cfg.transmittance_1 = s.number("transmittance_1", 0.0);
            if (s.has("transmittance_2")) cfg.transmittance_2 = s.number("transmittance_2", 0.0);
            s.finish();
        }
        if (root.has("noise")) {
            Section s(root.child("noise"), "noise");
            cfg.noise_visibility = s.number("visibility", cfg.noise_visibility);
            s.finish();
        }
        if (root.has("run")) {
            Section s(root.child("run"), "run");
            RunSettings& r = cfg.run;
            r.duration_s = s.number("duration_s", r.duration_s);
            r.window_s = s.number("window_s", r.window_s);
            r.points = static_cast<int>(s.integer("points", r.points));
            r.scan_start = s.angle("scan_start", r.scan_start);
            r.scan_stop = s.angle("scan_stop", r.scan_stop);
            r.theta_ay = s.numbers("theta_ay", {});
            for (double& a : r.theta_ay) a *= kPi;
            r.shots_per_basis = s.integer("shots_per_basis", r.shots_per_basis);
            r.coincidence_rate_hz = s.number("coincidence_rate_hz", r.coincidence_rate_hz);
            r.observed_pair_rates_hz = s.numbers("observed_pair_rates_hz", r.observed_pair_rates_hz);
            if (s.has("loss_entries")) {
                const json& list = s.child("loss_entries");
                if (!list.is_array()) throw ValidationError("run.loss_entries must be an array");
                for (std::size_t i = 0; i < list.size(); ++i) {
                    Section e(list[i], "run.loss_entries[" + std::to_string(i) + "]");
                    r.loss_entries.push_back({e.text("name", "entry " + std::to_string(i)), e.number("db", 0.0)});
                    e.finish();
                }
            }
            if (s.has("calibration")) {
                Section c(s.child("calibration"), "run.calibration");
                CalibrationRun& cr = r.calibration;
                cr.csv = c.text("csv", cr.csv);
                read_heater(c, "heater_y", cr.heater_y);
                read_heater(c, "heater_z", cr.heater_z);
                cr.grid = static_cast<int>(c.integer("grid", cr.grid));
                cr.max_power_y_mw = c.number("max_power_y_mw", cr.max_power_y_mw);
                cr.max_power_z_mw = c.number("max_power_z_mw", cr.max_power_z_mw);
                cr.noise = c.number("noise", cr.noise);
                c.finish();
            }
            s.finish();
        }
        root.finish();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    cfg.fibre.rotation = su2_rotation(cfg.fibre_axis.normalized(), cfg.fibre_angle);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
    auto ppc = [](const PpcModel& p) {
        json j = {{"insertion_loss_db", p.insertion_loss_db}};
        j["extinction_db"] = std::isfinite(p.extinction_db) ? json(p.extinction_db) : json(nullptr);
        return j;
    };
    auto det = [](const DetectorModel& d) {
        return json{{"efficiency", d.efficiency}, {"dark_rate_hz", d.dark_rate_hz}, {"label", d.label}};
    };
    json j;
    j["source"] = {{"theta_ss_rad", c.source.theta_ss}, {"pair_amplitude", c.source.pair_amplitude}};
    j["ppc_out"] = ppc(c.ppc_out);
    j["ppc_in"] = ppc(c.ppc_in);
    j["fibre"] = {{"rotation_axis", {c.fibre_axis[0], c.fibre_axis[1], c.fibre_axis[2]}},
                  {"rotation_angle_rad", c.fibre_angle},
                  {"compensation_residual_rad", c.fibre.compensation_residual},
                  {"residual_seed", c.fibre.residual_seed}};
    j["demux_reflectivity"] = c.demux_reflectivity;
    j["detector_1"] = det(c.detector_1);
    j["detector_2"] = det(c.detector_2);
    j["noise_visibility"] = c.noise_visibility;
    j["window_s"] = c.run.window_s;
    return j;
}

}  // namespace qpic
