#include "qpic/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "qpic/calibration.hpp"
#include "qpic/random.hpp"

namespace qpic {

namespace {

constexpr double kPi = std::numbers::pi;
using nlohmann::json;

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

std::vector<double> scan_grid(double start, double stop, int points) {
    std::vector<double> out;
    if (stop == start) stop = start + 2.0 * kPi;
    for (int i = 0; i < points; ++i) out.push_back(start + (stop - start) * i / points);
    return out;
}

double effective_pair_rate(const ExperimentConfig& cfg, double t1, double t2, double default_coinc_hz) {
    double rate;
    if (cfg.pair_rate_hz) {
        rate = *cfg.pair_rate_hz;
    } else {
        const double target = cfg.run.coincidence_rate_hz > 0.0 ? cfg.run.coincidence_rate_hz : default_coinc_hz;
        const double per_pair = t1 * t2 * cfg.detector_1.efficiency * cfg.detector_2.efficiency * 0.25;
        rate = per_pair > 0.0 ? target / per_pair : 0.0;
    }
    // Pair emission probability goes with the square of the SFWM amplitude.
    return rate * cfg.source.pair_amplitude * cfg.source.pair_amplitude;
}

std::vector<Outcome> pair_group(const std::string& a, const std::string& ap, const std::string& b,
                                const std::string& bp) {
    std::vector<Outcome> g;
    for (const auto& x : {a, ap})
        for (const auto& y : {b, bp}) {
            Outcome o{x, y};
            std::sort(o.begin(), o.end());
            g.push_back(o);
        }
    return g;
}

double post_selected_rail_one(const PhotonicState& s, const std::string& rail_one) {
    const std::size_t idx = s.modes().index(rail_one);
    double p = 0.0;
    for (const auto& [occ, amp] : s.amplitudes())
        if (occ[idx] == 1) p += std::norm(amp);
    return p;
}

PhotonicState ppc_propagated(const PpcModel& model, const Eigen::Vector2cd& ket) {
    const ModeRegistry reg({"p.0", "p.1"});
    const Eigen::Vector2cd k = ket.normalized();
    PhotonicState s(reg, {{{1, 0}, k[0]}, {{0, 1}, k[1]}});
    const std::vector<std::string> rails = {"p.0", "p.1"};
    s = apply_element(s, ppc_element(model, PpcDirection::path_to_pol), rails);
    PostSelectionPattern pattern;
    pattern.exactly(rails, 1);
    return post_select(s, pattern).state;
}

}  // namespace

InterconnectSettings interconnect_settings(const ExperimentConfig& cfg, double theta_ss, AnalyzerAngles a,
                                           AnalyzerAngles b) {
    InterconnectSettings s;
    s.source = cfg.source;
    s.source.theta_ss = theta_ss;
    s.analyzer_a = {a.theta_z, a.theta_y, AnalyzerSide::a};
    s.analyzer_b = {b.theta_z, b.theta_y, AnalyzerSide::b};
    s.ppc_out = cfg.ppc_out;
    s.ppc_in = cfg.ppc_in;
    s.fibre = cfg.fibre;
    s.demux_reflectivity = cfg.demux_reflectivity;
    return s;
}

DetectorAssignment assign_detectors(const PhotonicState& state,
                                    const std::vector<std::pair<std::string, std::string>>& routes) {
    DetectorAssignment d;
    for (const auto& label : state.modes().labels()) {
        auto it = std::find_if(routes.begin(), routes.end(), [&](const auto& r) { return r.first == label; });
        d.route(label, it == routes.end() ? kSink : it->second);
    }
    return d;
}

CountProbabilities correlation_probabilities(const InterconnectSettings& settings, double v) {
    const Interconnect c = build_interconnect(settings);
    const PhotonicState out = propagate(c);
    const auto det = assign_detectors(out, {{"tb.s", kD1}, {"tt.s", kD1p}, {"bb.i", kD3}, {"bt.i", kD3p}});
    const auto group = pair_group(kD1, kD1p, kD3, kD3p);
    const OutcomeProbabilities p = mix_white_noise(outcome_probabilities(out, det), group, v);
    return count_probabilities(p, kD1, kD3);
}

CountProbabilities quantum_fringe_probabilities(const InterconnectSettings& settings, double v) {
    const Interconnect c = build_interconnect(settings);
    const PhotonicState out = propagate(c);
    const auto det = assign_detectors(out, {{"tb.s", kD1}, {"tt.s", kD1p}, {"tt.i", kD2}, {"tb.i", kD2p}});
    const auto group = pair_group(kD1, kD1p, kD2, kD2p);
    const OutcomeProbabilities p = mix_white_noise(outcome_probabilities(out, det), group, v);
    return count_probabilities(p, kD1, kD2);
}

double classical_fringe_probability(const InterconnectSettings& settings) {
    const Interconnect c = build_interconnect(settings);
    const PhotonicState out = propagate(c, classical_probe(c));
    const auto det = assign_detectors(out, {{"tb.s", kD1}});
    return click_probability(outcome_probabilities(out, det), kD1);
}

Eigen::Matrix4cd link_two_qubit_state(const InterconnectSettings& settings) {
    const Interconnect c = build_interconnect(settings);
    const PhotonicState out = propagate(c);
    PostSelectionPattern pattern;
    pattern.exactly({c.signal_rails.zero, c.signal_rails.one}, 1).exactly({c.idler_rails.zero, c.idler_rails.one}, 1);
    const PostSelected ps = post_select(out, pattern);
    return reduce_to_two_qubits(ps.state, {c.signal_rails.zero, c.signal_rails.one},
                                {c.idler_rails.zero, c.idler_rails.one});
}

RateModel chip_a_rate_model(const ExperimentConfig& cfg) {
    const PathTransmittances t = path_transmittances();
    RateModel r;
    r.transmittance_1 = cfg.transmittance_1.value_or(t.arm);
    r.transmittance_2 = cfg.transmittance_2.value_or(t.arm);
    r.pair_rate_hz = effective_pair_rate(cfg, r.transmittance_1, r.transmittance_2, 650.0);
    return r;
}

RateModel link_rate_model(const ExperimentConfig& cfg) {
    const PathTransmittances t = path_transmittances();
    RateModel r;
    r.transmittance_1 = cfg.transmittance_1.value_or(t.arm);
    r.transmittance_2 = cfg.transmittance_2.value_or(t.arm * t.link);
    r.pair_rate_hz = effective_pair_rate(cfg, r.transmittance_1, r.transmittance_2, 10.0);
    return r;
}

BellState bell_state_for(double theta_ss) {
    const double x = std::remainder(theta_ss, 2.0 * kPi);
    if (std::abs(x - kPi / 2.0) < 1e-9) return BellState::phi_plus;
    if (std::abs(std::abs(x) - kPi) < 1e-9) return BellState::phi_minus;
    throw ValidationError("theta_ss must be pi/2 (phi+) or pi (phi-) for a Bell measurement");
}

ChshPlan plan_chsh(const ExperimentConfig& cfg) {
    ChshPlan plan;
    plan.state = bell_state_for(cfg.source.theta_ss);
    plan.angles = chsh_settings(plan.state);
    const std::array<std::pair<double, double>, 4> pairs = {{{plan.angles.a1, plan.angles.b1},
                                                             {plan.angles.a1, plan.angles.b2},
                                                             {plan.angles.a2, plan.angles.b1},
                                                             {plan.angles.a2, plan.angles.b2}}};
    const std::array<std::pair<double, double>, 4> offsets = {{{0, 0}, {kPi, kPi}, {0, kPi}, {kPi, 0}}};
    for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t r = 0; r < 4; ++r) {
            const double ay = pairs[c].first + offsets[r].first;
            const double by = pairs[c].second + offsets[r].second;
            plan.settings[4 * c + r] = {ay, 0.0, by, 0.0, cfg.source.theta_ss};
            plan.probabilities[4 * c + r] = correlation_probabilities(
                interconnect_settings(cfg, cfg.source.theta_ss, {ay, 0.0}, {by, 0.0}), cfg.noise_visibility);
        }
    return plan;
}

ChshResult exact_chsh(const ChshPlan& plan) {
    std::array<double, 4> e{};
    for (std::size_t c = 0; c < 4; ++c) {
        const auto& p = plan.probabilities;
        const double a = p[4 * c].coincidence, b = p[4 * c + 1].coincidence;
        const double d = p[4 * c + 2].coincidence, f = p[4 * c + 3].coincidence;
        const double total = a + b + d + f;
        if (!(total > 0.0)) throw ContractViolation("CHSH setting has zero coincidence probability");
        e[c] = (a + b - d - f) / total;
    }
    return chsh(e[0], e[1], e[2], e[3], plan.state);
}

ChshRun sample_chsh(const ChshPlan& plan, const ExperimentConfig& cfg, double duration_s, std::uint64_t seed) {
    const RateModel rates = link_rate_model(cfg);
    ChshRun run;
    for (std::size_t i = 0; i < 16; ++i)
        run.records[i] = sample_counts(plan.probabilities[i], rates, cfg.detector_1, cfg.detector_2, cfg.run.window_s,
                                       duration_s, derive_seed(seed, i), plan.settings[i]);
    for (std::size_t c = 0; c < 4; ++c)
        run.coefficients[c] = correlation_coefficient(
            {run.records[4 * c], run.records[4 * c + 1], run.records[4 * c + 2], run.records[4 * c + 3]});
    run.result = chsh(run.coefficients[0], run.coefficients[1], run.coefficients[2], run.coefficients[3], plan.state);
    return run;
}

std::map<Basis, double> ppc_projector_probabilities(const PpcModel& model, const Eigen::Vector2cd& ket) {
    const PhotonicState s = ppc_propagated(model, ket);
    const std::vector<std::string> rails = {"p.0", "p.1"};
    std::map<Basis, double> out;
    for (Basis b : kAllBases) {
        const AnalyzerAngles a = analyzer_angles_for(b);
        PhotonicState m = s;
        for (const auto& e : analyzer_elements({a.theta_z, a.theta_y, AnalyzerSide::b})) m = apply_element(m, e, rails);
        out[b] = std::clamp(post_selected_rail_one(m, "p.1"), 0.0, 1.0);
    }
    return out;
}

Eigen::Matrix2cd ppc_output_state(const PpcModel& model, const Eigen::Vector2cd& ket) {
    const PhotonicState s = ppc_propagated(model, ket);
    Occupation o0(s.modes().size(), 0), o1(s.modes().size(), 0);
    o0[s.modes().index("p.0")] = 1;
    o1[s.modes().index("p.1")] = 1;
    const Eigen::Vector2cd v(s.amplitude(o0), s.amplitude(o1));
    return v * v.adjoint() / v.squaredNorm();
}

namespace {

json base_summary(Scenario scenario, const ExperimentConfig& cfg, std::uint64_t seed) {
    return {{"scenario", to_string(scenario)}, {"seed", seed}, {"config", to_json(cfg)}};
}

json rate_json(const RateModel& r) {
    return {{"pair_rate_hz", r.pair_rate_hz}, {"transmittance_1", r.transmittance_1}, {"transmittance_2", r.transmittance_2}};
}

double duration_or(const ExperimentConfig& cfg, double fallback) {
    return cfg.run.duration_s > 0.0 ? cfg.run.duration_s : fallback;
}

int points_or(const ExperimentConfig& cfg, int fallback) {
    return cfg.run.points > 0 ? cfg.run.points : fallback;
}

ScenarioResult run_classical_fringe(const ExperimentConfig& cfg, std::uint64_t seed) {
    const double duration = duration_or(cfg, 20.0);
    const RateModel rates = chip_a_rate_model(cfg);
    const auto grid = scan_grid(cfg.run.scan_start, cfg.run.scan_stop, points_or(cfg, 64));
    const AnalyzerAngles hadamard{kPi / 2.0, 0.0};

    std::vector<CountRecord> records;
    FringeDataset sampled{"theta_ss", {}, {}}, exact{"theta_ss", {}, {}};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double p = classical_fringe_probability(interconnect_settings(cfg, grid[i], hadamard, {0.0, 0.0}));
        const CountProbabilities cp{0.0, p, 0.0};
        const double peak = rates.pair_rate_hz * rates.transmittance_1 * cfg.detector_1.efficiency * duration;
        exact.points.push_back({grid[i], peak * p, 0.0});
        CountRecord r = sample_counts(cp, rates, cfg.detector_1, cfg.detector_2, cfg.run.window_s, duration,
                                      derive_seed(seed, i), {hadamard.theta_y, hadamard.theta_z, 0.0, 0.0, grid[i]});
        records.push_back(r);
        // Dark counts are a known flat background on the intensity.
        const double dark = cfg.detector_1.dark_rate_hz * duration;
        sampled.points.push_back({grid[i], static_cast<double>(r.singles_1) - dark, dark});
    }
    exact.fit = fit_fringe_auto(exact);
    sampled.fit = fit_fringe_auto(sampled);

    json s = base_summary(Scenario::classical_fringe, cfg, seed);
    s["rates"] = rate_json(rates);
    s["duration_s"] = duration;
    s["exact"] = {{"fit", to_json(*exact.fit)}, {"visibility", to_json(visibility(exact))}};
    s["sampled"] = {{"fit", to_json(*sampled.fit)}, {"visibility", to_json(visibility(sampled))}};
    return {to_csv(records), s};
}

ScenarioResult run_quantum_fringe(const ExperimentConfig& cfg, std::uint64_t seed) {
    const double duration = duration_or(cfg, 20.0);
    const RateModel rates = chip_a_rate_model(cfg);
    const auto grid = scan_grid(cfg.run.scan_start, cfg.run.scan_stop, points_or(cfg, 64));
    const AnalyzerAngles hadamard{kPi / 2.0, 0.0};

    std::vector<CountRecord> records;
    FringeDataset sampled{"theta_ss", {}, {}}, exact{"theta_ss", {}, {}};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const CountProbabilities cp = quantum_fringe_probabilities(
            interconnect_settings(cfg, grid[i], hadamard, {0.0, 0.0}), cfg.noise_visibility);
        exact.points.push_back({grid[i], expected_coincidences(cp, rates, cfg.detector_1, cfg.detector_2, duration), 0.0});
        CountRecord r = sample_counts(cp, rates, cfg.detector_1, cfg.detector_2, cfg.run.window_s, duration,
                                      derive_seed(seed, i), {hadamard.theta_y, hadamard.theta_z, 0.0, 0.0, grid[i]});
        records.push_back(r);
        sampled.points.push_back({grid[i], r.corrected_coincidences(), r.sigma() * r.sigma() - static_cast<double>(r.coincidences)});
    }
    exact.fit = fit_fringe_auto(exact);
    sampled.fit = fit_fringe_auto(sampled);

    json s = base_summary(Scenario::quantum_fringe, cfg, seed);
    s["rates"] = rate_json(rates);
    s["duration_s"] = duration;
    s["exact"] = {{"fit", to_json(*exact.fit)}, {"visibility", to_json(visibility(exact))}};
    s["sampled"] = {{"fit", to_json(*sampled.fit)}, {"visibility", to_json(visibility(sampled))}};
    return {to_csv(records), s};
}

ScenarioResult run_correlation_fringe(const ExperimentConfig& cfg, std::uint64_t seed) {
    const double duration = duration_or(cfg, 30.0);
    const RateModel rates = link_rate_model(cfg);
    const BellState state = bell_state_for(cfg.source.theta_ss);
    const auto grid = scan_grid(cfg.run.scan_start, cfg.run.scan_stop, points_or(cfg, 32));
    std::vector<double> thetas_a = cfg.run.theta_ay;
    if (thetas_a.empty()) thetas_a = {0.0, kPi / 2.0, kPi, 3.0 * kPi / 2.0};

    std::vector<CountRecord> records;
    json fringes = json::array();
    double sum_v = 0.0, sum_var = 0.0, sum_c = 0.0, sum_cvar = 0.0;
    std::uint64_t index = 0;
    for (double ay : thetas_a) {
        FringeDataset data{"theta_by", {}, {}};
        for (double by : grid) {
            const CountProbabilities cp = correlation_probabilities(
                interconnect_settings(cfg, cfg.source.theta_ss, {ay, 0.0}, {by, 0.0}), cfg.noise_visibility);
            CountRecord r = sample_counts(cp, rates, cfg.detector_1, cfg.detector_2, cfg.run.window_s, duration,
                                          derive_seed(seed, index++), {ay, 0.0, by, 0.0, cfg.source.theta_ss});
            records.push_back(r);
            data.points.push_back({by, r.corrected_coincidences(), r.sigma() * r.sigma() - static_cast<double>(r.coincidences)});
        }
        data.fit = fit_fringe(data, 1);
        const Visibility v = visibility(data);
        // Contrast (Nmax - Nmin)/(Nmax + Nmin), the quantity that bounds S.
        const double contrast = data.fit->amplitude / data.fit->floor;
        const Eigen::Vector2d g(-data.fit->amplitude / (data.fit->floor * data.fit->floor), 1.0 / data.fit->floor);
        const double contrast_var = g.dot(data.fit->covariance.topLeftCorner<2, 2>() * g);
        sum_v += v.value;
        sum_var += v.sigma * v.sigma;
        sum_c += contrast;
        sum_cvar += contrast_var;
        fringes.push_back({{"theta_ay", ay},
                           {"fit", to_json(*data.fit)},
                           {"visibility", to_json(v)},
                           {"contrast", contrast},
                           {"sigma_contrast", std::sqrt(std::max(contrast_var, 0.0))}});
    }
    const double n = static_cast<double>(thetas_a.size());
    const double mean_v = sum_v / n, sigma_v = std::sqrt(sum_var) / n;
    const double mean_c = sum_c / n, sigma_c = std::sqrt(sum_cvar) / n;

    json s = base_summary(Scenario::correlation_fringe, cfg, seed);
    s["state"] = to_string(state);
    s["rates"] = rate_json(rates);
    s["duration_s"] = duration;
    s["fringes"] = fringes;
    s["mean_visibility"] = {{"V", mean_v}, {"sigma_V", sigma_v}};
    s["mean_contrast"] = {{"value", mean_c}, {"sigma", sigma_c}};
    const SFromVisibility sv = s_from_visibility(std::clamp(mean_v, 0.0, 1.0), sigma_v);
    const SFromVisibility sc = s_from_visibility(std::clamp(mean_c, 0.0, 1.0), sigma_c);
    s["S_fringe"] = {{"from_V", sv.s}, {"sigma_from_V", sv.sigma}, {"from_contrast", sc.s}, {"sigma_from_contrast", sc.sigma}};
    return {to_csv(records), s};
}

ScenarioResult run_chsh(const ExperimentConfig& cfg, std::uint64_t seed) {
    const double duration = duration_or(cfg, 60.0);
    const ChshPlan plan = plan_chsh(cfg);
    const ChshResult ideal = exact_chsh(plan);
    if (ideal.s > 2.0 * std::numbers::sqrt2 + 1e-9)
        throw ContractViolation("exact S exceeds the Tsirelson bound: " + std::to_string(ideal.s));
    const ChshRun run = sample_chsh(plan, cfg, duration, seed);

    json coeffs = json::array();
    for (const auto& c : run.coefficients) coeffs.push_back(to_json(c));
    json s = base_summary(Scenario::chsh, cfg, seed);
    s["state"] = to_string(plan.state);
    s["rates"] = rate_json(link_rate_model(cfg));
    s["duration_s"] = duration;
    s["angles"] = {{"a1", plan.angles.a1}, {"a2", plan.angles.a2}, {"b1", plan.angles.b1}, {"b2", plan.angles.b2}};
    s["exact_S"] = ideal.s;
    s["coefficients"] = coeffs;
    s["result"] = to_json(run.result);
    return {to_csv(std::span<const CountRecord>(run.records.data(), run.records.size())), s};
}

struct TomoRow {
    std::string input;
    Basis basis;
    BasisCounts counts;
};

std::string tomo_csv(const std::vector<TomoRow>& rows) {
    std::string out = "input,basis,theta_y,theta_z,count,total\n";
    char buf[160];
    for (const auto& r : rows) {
        const AnalyzerAngles a = analyzer_angles_for(r.basis);
        std::snprintf(buf, sizeof buf, "%s,%s,%.12g,%.12g,%.0f,%.0f\n", r.input.c_str(), to_string(r.basis).c_str(),
                      a.theta_y, a.theta_z, r.counts.count, r.counts.total);
        out += buf;
    }
    return out;
}

TomographyCounts sample_from(const std::map<Basis, double>& p, std::int64_t shots, Rng& rng) {
    TomographyCounts c;
    for (const auto& [b, prob] : p) c.bases[b] = {static_cast<double>(rng.binomial(shots, prob)), static_cast<double>(shots)};
    return c;
}

ScenarioResult run_state_tomo(const ExperimentConfig& cfg, std::uint64_t seed) {
    std::vector<TomoRow> rows;
    json states = json::array();
    double sum_f = 0.0, sum_exact = 0.0;
    for (std::size_t i = 0; i < kAllBases.size(); ++i) {
        const Basis in = kAllBases[i];
        const Eigen::Vector2cd ket = basis_ket(in);
        const auto probs = ppc_projector_probabilities(cfg.ppc_out, ket);
        Rng rng(derive_seed(seed, i));
        const TomographyCounts counts = sample_from(probs, cfg.run.shots_per_basis, rng);
        for (const auto& [b, c] : counts.bases) rows.push_back({to_string(in), b, c});
        const MleResult mle = mle_reconstruct(counts);
        const auto ideal = QubitDensityMatrix::pure(ket);
        const double f = state_fidelity(ideal, mle.rho);
        const double fx = state_fidelity(ideal, QubitDensityMatrix(ppc_output_state(cfg.ppc_out, ket)));
        sum_f += f;
        sum_exact += fx;
        states.push_back({{"input", to_string(in)},
                          {"fidelity", f},
                          {"exact_fidelity", fx},
                          {"rho", to_json(mle.rho)},
                          {"log_likelihood", mle.log_likelihood}});
    }
    json s = base_summary(Scenario::state_tomo, cfg, seed);
    s["shots_per_basis"] = cfg.run.shots_per_basis;
    s["states"] = states;
    s["mean_fidelity"] = sum_f / 6.0;
    s["mean_exact_fidelity"] = sum_exact / 6.0;
    return {tomo_csv(rows), s};
}

ScenarioResult run_process_tomo(const ExperimentConfig& cfg, std::uint64_t seed) {
    const std::array<Basis, 4> inputs = {Basis::zero, Basis::one, Basis::plus, Basis::plus_i};
    std::vector<TomoRow> rows;
    std::vector<QubitDensityMatrix> sampled, exact;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Eigen::Vector2cd ket = basis_ket(inputs[i]);
        Rng rng(derive_seed(seed, i));
        const TomographyCounts counts = sample_from(ppc_projector_probabilities(cfg.ppc_out, ket), cfg.run.shots_per_basis, rng);
        for (const auto& [b, c] : counts.bases) rows.push_back({to_string(inputs[i]), b, c});
        sampled.push_back(mle_reconstruct(counts).rho);
        exact.push_back(QubitDensityMatrix(ppc_output_state(cfg.ppc_out, ket)));
    }
    const ProcessMatrix chi = process_tomography(sampled[0], sampled[1], sampled[2], sampled[3]);
    const ProcessMatrix chi_exact = process_tomography(exact[0], exact[1], exact[2], exact[3]);
    const ProcessMatrix ideal(unitary_chi(Eigen::Matrix2cd::Identity()));

    json s = base_summary(Scenario::process_tomo, cfg, seed);
    s["shots_per_basis"] = cfg.run.shots_per_basis;
    s["chi"] = to_json(chi);
    s["process_fidelity"] = process_fidelity(chi, ideal);
    s["exact_chi"] = to_json(chi_exact);
    s["exact_process_fidelity"] = process_fidelity(chi_exact, ideal);
    return {tomo_csv(rows), s};
}

ScenarioResult run_calibrate(const ExperimentConfig& cfg, std::uint64_t seed) {
    const CalibrationRun& c = cfg.run.calibration;
    std::vector<OeSample> samples;
    if (!c.csv.empty()) {
        std::ifstream in(c.csv);
        if (!in) throw InputError("cannot open calibration CSV '" + c.csv + "'");
        samples = read_oe_csv(in);
    } else {
        samples = synthetic_contour(c.heater_y, c.heater_z, c.grid, c.max_power_y_mw, c.max_power_z_mw);
        Rng rng(derive_seed(seed, 0));
        for (auto& smp : samples) smp.power_norm *= 1.0 + c.noise * rng.normal();
    }
    const CalibrationMap map = fit_oe_contour(samples);

    json replay = json::object();
    double worst = 0.0;
    for (const auto& [b, p] : map.lookup) {
        const Eigen::Vector3d r = projector_bloch(map.heater_y.phase(p.p_y_mw), map.heater_z.phase(p.p_z_mw));
        const AnalyzerAngles t = analyzer_angles_for(b);
        // Largest probability error over all probe states.
        const double err = 0.5 * (r - projector_bloch(t.theta_y, t.theta_z)).norm();
        worst = std::max(worst, err);
        replay[to_string(b)] = err;
    }

    std::string csv = "p_y_mw,p_z_mw,power_norm,fitted\n";
    char buf[160];
    for (const auto& smp : samples) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g\n", smp.p_y_mw, smp.p_z_mw, smp.power_norm,
                      map.predicted(smp.p_y_mw, smp.p_z_mw));
        csv += buf;
    }
    json s = base_summary(Scenario::calibrate, cfg, seed);
    s["map"] = to_json(map);
    s["replay_error"] = replay;
    s["max_replay_error"] = worst;
    s["samples"] = samples.size();
    return {csv, s};
}

ScenarioResult run_loss_budget(const ExperimentConfig& cfg, std::uint64_t seed) {
    std::string csv = "name,db_low,db_high,db_mid,link_only\n";
    for (const auto& c : itemized_contributors())
        csv += c.name + "," + fmt("%.6g", c.db_low) + "," + fmt("%.6g", c.db_high) + "," + fmt("%.6g", c.mid()) + "," +
               (c.link_only ? "1" : "0") + "\n";

    const ItemizedSums sums = itemized_sums();
    const QuotedTotals quoted;
    const PathTransmittances t = path_transmittances();
    json preds = json::array();
    for (double r : cfg.run.observed_pair_rates_hz) {
        const RatePrediction p = predict_chip_to_chip_rate(r, cfg.detector_1, cfg.detector_2);
        preds.push_back({{"observed_chip_a_hz", p.observed_chip_a_hz},
                         {"fitted_pair_rate_hz", p.fitted_pair_rate_hz},
                         {"chip_to_chip_hz", p.chip_to_chip_hz}});
    }
    json s = base_summary(Scenario::loss_budget, cfg, seed);
    s["itemized"] = {{"pair_total_db", sums.pair_total_db},
                     {"chip_a_pair_db", sums.chip_a_pair_db},
                     {"link_db", sums.link_db}};
    s["quoted"] = {{"signal_db", {quoted.signal_low, quoted.signal_high}},
                   {"idler_db", {quoted.idler_low, quoted.idler_high}},
                   {"link_db", {quoted.link_low, quoted.link_high}}};
    s["transmittance"] = {{"arm", t.arm}, {"link", t.link}};
    s["rate_predictions"] = preds;
    if (!cfg.run.loss_entries.empty()) {
        const LossBudget b = loss_budget(cfg.run.loss_entries);
        s["custom"] = {{"total_db", b.total_db}, {"transmittance", b.transmittance()}};
    }
    return {csv, s};
}

}  // namespace

ScenarioResult run_scenario(Scenario scenario, const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.scenario && *cfg.scenario != scenario)
        throw ValidationError("config is for scenario '" + to_string(*cfg.scenario) + "', not '" + to_string(scenario) + "'");
    switch (scenario) {
        case Scenario::classical_fringe: return run_classical_fringe(cfg, seed);
        case Scenario::quantum_fringe: return run_quantum_fringe(cfg, seed);
        case Scenario::correlation_fringe: return run_correlation_fringe(cfg, seed);
        case Scenario::chsh: return run_chsh(cfg, seed);
        case Scenario::state_tomo: return run_state_tomo(cfg, seed);
        case Scenario::process_tomo: return run_process_tomo(cfg, seed);
        case Scenario::calibrate: return run_calibrate(cfg, seed);
        case Scenario::loss_budget: return run_loss_budget(cfg, seed);
    }
    throw ValidationError("unknown scenario");
}

}  // namespace qpic
