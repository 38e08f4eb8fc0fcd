// Acceptance runner: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "qpic/calibration.hpp"
#include "qpic/config.hpp"
#include "qpic/random.hpp"
#include "qpic/scenarios.hpp"
#include "qpic/tomography.hpp"

using namespace qpic;

namespace {

constexpr double kPi = std::numbers::pi;
const double kTsirelson = 2.0 * std::numbers::sqrt2;

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [x]");
    }
};

std::string num(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

ExperimentConfig ideal_config() {
    ExperimentConfig cfg;
    cfg.ppc_out = {};
    cfg.ppc_in = {};
    cfg.noise_visibility = 1.0;
    return cfg;
}

Verdict bell_state() {
    Verdict o;
    const auto cfg = ideal_config();
    const auto settings = interconnect_settings(cfg, kPi / 2, kIdentityAnalyzer, kIdentityAnalyzer);
    const Interconnect c = build_interconnect(settings);
    PostSelectionPattern p;
    p.exactly({c.signal_rails.zero, c.signal_rails.one}, 1).exactly({c.idler_rails.zero, c.idler_rails.one}, 1);
    const double prob = post_select(propagate(c), p).probability;
    const Eigen::Matrix4cd rho = link_two_qubit_state(settings);
    Eigen::Vector4cd phi = Eigen::Vector4cd::Zero();
    phi[0] = phi[3] = 1.0 / std::sqrt(2.0);
    const double f = std::real(phi.dot(rho * phi));
    o.require(f >= 1.0 - 1e-12, "F(phi+) = 1 - " + num("%.2e", 1.0 - f));
    o.require(std::abs(prob - 0.25) <= 1e-12, "p_post = " + num("%.15f", prob));
    return o;
}

struct FringePair {
    FringeDataset classical{"theta_ss", {}, {}};
    FringeDataset quantum{"theta_ss", {}, {}};
};

Verdict fringes() {
    Verdict o;
    auto cfg = ideal_config();
    cfg.detector_1.dark_rate_hz = 0.0;
    cfg.detector_2.dark_rate_hz = 0.0;
    const int n = 64;
    const double duration = 20.0;
    std::vector<double> pc(n);
    std::vector<CountProbabilities> pq(n);
    FringePair exact;
    for (int i = 0; i < n; ++i) {
        const double t = 2 * kPi * i / n;
        const auto s = interconnect_settings(cfg, t, {kPi / 2, 0.0}, {0.0, 0.0});
        pc[i] = classical_fringe_probability(s);
        pq[i] = quantum_fringe_probabilities(s, 1.0);
        exact.classical.points.push_back({t, pc[i], 0.0});
        exact.quantum.points.push_back({t, pq[i].coincidence, 0.0});
    }
    exact.classical.fit = fit_fringe_auto(exact.classical);
    exact.quantum.fit = fit_fringe_auto(exact.quantum);
    o.require(exact.classical.fit->k == 1, "classical k = " + std::to_string(exact.classical.fit->k));
    o.require(exact.quantum.fit->k == 2, "coincidence k = " + std::to_string(exact.quantum.fit->k));
    const double vc = visibility(exact.classical).value, vq = visibility(exact.quantum).value;
    o.require(std::abs(vc - 1.0) <= 1e-9 && std::abs(vq - 1.0) <= 1e-9,
              "exact V = " + num("%.12f", vc) + ", " + num("%.12f", vq));

    // Pair rate set so each scan averages 600 counts per point.
    cfg.run.coincidence_rate_hz = 1.0;
    RateModel rates = chip_a_rate_model(cfg);
    double mean_c = 0, mean_q = 0;
    for (int i = 0; i < n; ++i) {
        mean_c += rates.pair_rate_hz * rates.transmittance_1 * cfg.detector_1.efficiency * pc[i] * duration / n;
        mean_q += expected_coincidences(pq[i], rates, cfg.detector_1, cfg.detector_2, duration) / n;
    }
    RateModel rc = rates, rq = rates;
    rc.pair_rate_hz *= 600.0 / mean_c;
    rq.pair_rate_hz *= 600.0 / mean_q;
    FringePair sampled;
    for (int i = 0; i < n; ++i) {
        const double t = 2 * kPi * i / n;
        const CountRecord c = sample_counts({0.0, pc[i], 0.0}, rc, cfg.detector_1, cfg.detector_2, cfg.run.window_s,
                                            duration, derive_seed(2, i));
        const CountRecord q = sample_counts(pq[i], rq, cfg.detector_1, cfg.detector_2, cfg.run.window_s, duration,
                                            derive_seed(3, i));
        sampled.classical.points.push_back({t, static_cast<double>(c.singles_1), 0.0});
        sampled.quantum.points.push_back({t, q.corrected_coincidences(), q.sigma() * q.sigma() - static_cast<double>(q.coincidences)});
    }
    sampled.classical.fit = fit_fringe_auto(sampled.classical);
    sampled.quantum.fit = fit_fringe_auto(sampled.quantum);
    const double sc = visibility(sampled.classical).value, sq = visibility(sampled.quantum).value;
    o.require(sampled.classical.fit->k == 1 && sampled.quantum.fit->k == 2, "sampled k = 1, 2");
    o.require(sc >= 0.995 && sq >= 0.995, "sampled V = " + num("%.4f", sc) + ", " + num("%.4f", sq) + " at 600 counts/point");
    return o;
}

Verdict chsh_values() {
    Verdict o;
    double worst = 0.0;
    for (double theta : {kPi / 2, kPi})
        for (double v : {1.0, 0.9763, 0.9685, 1.0 / std::sqrt(2.0)}) {
            auto cfg = ideal_config();
            cfg.source.theta_ss = theta;
            cfg.noise_visibility = v;
            worst = std::max(worst, std::abs(exact_chsh(plan_chsh(cfg)).s - kTsirelson * v));
        }
    o.require(worst <= 1e-9, "exact S = 2 sqrt2 v, max error " + num("%.1e", worst));

    // Lab-scale sampling: 60 s per setting, 10 Hz post-selected coincidences.
    ExperimentConfig cfg;
    cfg.source.theta_ss = kPi / 2;
    cfg.noise_visibility = 0.9763;
    const ChshPlan plan = plan_chsh(cfg);
    int inside = 0;
    double mean = 0, mean_sigma = 0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        const ChshRun run = sample_chsh(plan, cfg, 60.0, derive_seed(0xC5, s));
        if (run.result.s >= 2.60 && run.result.s <= 2.68) ++inside;
        mean += run.result.s / seeds;
        mean_sigma += run.result.sigma / seeds;
    }
    o.require(inside >= 95, "sampled S in [2.60, 2.68] for " + std::to_string(inside) + "/100 seeds (mean S " +
                                num("%.4f", mean) + " +- " + num("%.4f", mean_sigma) + ", exact " +
                                num("%.4f", exact_chsh(plan).s) + ")");
    return o;
}

Verdict tomography() {
    Verdict o;
    Rng rng(404);
    double worst = 1.0;
    for (int i = 0; i < 1000; ++i) {
        Eigen::Vector3d r(rng.normal(), rng.normal(), rng.normal());
        r = r.normalized() * std::cbrt(rng.uniform());
        const auto rho = QubitDensityMatrix::from_bloch(r);
        worst = std::min(worst, state_fidelity(rho, mle_reconstruct(exact_tomography_counts(rho.matrix(), 1e4)).rho));
    }
    o.require(worst >= 1.0 - 1e-6, "1000 exact states, min F = 1 - " + num("%.1e", 1.0 - worst));

    auto out = [](Basis b) { return QubitDensityMatrix::pure(basis_ket(b)); };
    const ProcessMatrix chi = process_tomography(out(Basis::zero), out(Basis::one), out(Basis::plus), out(Basis::plus_i));
    const double f = process_fidelity(chi, ProcessMatrix(unitary_chi(Eigen::Matrix2cd::Identity())));
    o.require(std::abs(chi.matrix()(0, 0) - 1.0) <= 1e-10 && std::abs(f - 1.0) <= 1e-8,
              "identity chi[I,I] = " + num("%.12f", chi.matrix()(0, 0).real()) + ", F = " + num("%.12f", f));

    auto cfg = parse_config(nlohmann::json::parse(R"({"ppc_out": {"extinction_db": 18}, "run": {"shots_per_basis": 10000}})"));
    const auto summary = run_scenario(Scenario::state_tomo, cfg, 2024).summary;
    const double mean = summary["mean_fidelity"].get<double>();
    o.require(mean >= 0.98, "six-state MC mean F = " + num("%.4f", mean) + " at N = 1e4");
    return o;
}

Verdict oracle_equivalence() {
    Verdict o;
    Rng rng(5150);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const auto c = oracle::random_circuit(rng, 4, 8);
        const PhotonicState got = apply_element(c.input, CircuitElement("u", c.unitary), c.subset);
        worst = std::max(worst, oracle::max_amplitude_error(
                                    got, oracle::brute_force_evolve(c.input, oracle::embed(c.unitary, c.input.modes(), c.subset))));
    }
    o.require(worst <= 1e-12, "200 circuits, max amplitude error " + num("%.1e", worst));
    return o;
}

double spread(const std::vector<double>& x) {
    double m = 0, m2 = 0;
    for (double v : x) {
        m += v / x.size();
        m2 += v * v / x.size();
    }
    return std::sqrt(std::max(m2 - m * m, 0.0));
}

double mean_of(const std::vector<double>& x) {
    double m = 0;
    for (double v : x) m += v / x.size();
    return m;
}

Verdict error_propagation() {
    Verdict o;
    ExperimentConfig cfg;
    cfg.source.theta_ss = kPi / 2;
    cfg.noise_visibility = 0.9763;
    const int reps = 1000;

    const ChshPlan plan = plan_chsh(cfg);
    std::vector<double> s, s_sigma;
    for (int i = 0; i < reps; ++i) {
        const ChshRun run = sample_chsh(plan, cfg, 60.0, derive_seed(0x5160, i));
        s.push_back(run.result.s);
        s_sigma.push_back(run.result.sigma);
    }
    const double rs = mean_of(s_sigma) / spread(s);
    o.require(std::abs(rs - 1.0) <= 0.10, "S: analytic/empirical sigma = " + num("%.3f", rs));

    // Correlation fringe at theta_ay = 0, 32 points, 30 s per point.
    const RateModel rates = link_rate_model(cfg);
    std::vector<CountProbabilities> probs;
    std::vector<double> angles;
    for (int i = 0; i < 32; ++i) {
        angles.push_back(2 * kPi * i / 32);
        probs.push_back(correlation_probabilities(interconnect_settings(cfg, cfg.source.theta_ss, {0.0, 0.0}, {angles.back(), 0.0}),
                                                  cfg.noise_visibility));
    }
    std::vector<double> v, v_sigma;
    for (int r = 0; r < reps; ++r) {
        FringeDataset d{"theta_by", {}, {}};
        for (int i = 0; i < 32; ++i) {
            const CountRecord rec = sample_counts(probs[i], rates, cfg.detector_1, cfg.detector_2, cfg.run.window_s, 30.0,
                                                  derive_seed(derive_seed(0x7157, r), i));
            d.points.push_back({angles[i], rec.corrected_coincidences(), rec.sigma() * rec.sigma() - static_cast<double>(rec.coincidences)});
        }
        d.fit = fit_fringe(d, 1);
        const Visibility vis = visibility(d);
        v.push_back(vis.value);
        v_sigma.push_back(vis.sigma);
    }
    const double rv = mean_of(v_sigma) / spread(v);
    o.require(std::abs(rv - 1.0) <= 0.10, "V: analytic/empirical sigma = " + num("%.3f", rv));
    return o;
}

Verdict calibration() {
    Verdict o;
    const HeaterCoefficients y{0.9, 0.11}, z{0.3, 0.095};
    const CalibrationMap map = fit_oe_contour(synthetic_contour(y, z, 16, 120.0, 120.0));
    double worst = 0.0;
    for (Basis b : kAllBases) {
        if (!map.lookup.count(b)) {
            worst = 1.0;
            continue;
        }
        const HeaterPowers p = map.lookup.at(b);
        const AnalyzerAngles t = analyzer_angles_for(b);
        const Eigen::Vector3d got = projector_bloch(y.phase(p.p_y_mw), z.phase(p.p_z_mw));
        worst = std::max(worst, 0.5 * (got - projector_bloch(t.theta_y, t.theta_z)).norm());
    }
    o.require(worst <= 1e-3, "noiseless replay max probability error " + num("%.1e", worst));

    double alpha_err = 0.0;
    for (int s = 0; s < 20; ++s) {
        auto samples = synthetic_contour(y, z, 16, 120.0, 120.0);
        Rng rng(derive_seed(0xCA1, s));
        for (auto& smp : samples) smp.power_norm *= 1.0 + 0.01 * rng.normal();
        const CalibrationMap noisy = fit_oe_contour(samples);
        alpha_err = std::max({alpha_err, std::abs(noisy.heater_y.alpha / y.alpha - 1.0),
                              std::abs(noisy.heater_z.alpha / z.alpha - 1.0)});
    }
    o.require(alpha_err <= 0.01, "1% noise, worst alpha error over 20 seeds " + num("%.2e", alpha_err));
    return o;
}

Verdict rate_budget() {
    Verdict o;
    std::string rates;
    bool ok = true;
    for (double observed : {500.0, 650.0, 800.0}) {
        const double r = predict_chip_to_chip_rate(observed).chip_to_chip_hz;
        ok = ok && r >= 4.0 && r <= 24.0;
        rates += (rates.empty() ? "" : ", ") + num("%.1f", r);
    }
    o.require(ok, "chip-to-chip " + rates + " Hz for 500/650/800 Hz on chip");
    return o;
}

Verdict determinism() {
    Verdict o;
    const auto cfg = load_config(QPIC_SOURCE_DIR "/configs/chsh.json");
    const auto a = run_scenario(Scenario::chsh, cfg, 7).records_csv;
    const auto b = run_scenario(Scenario::chsh, cfg, 7).records_csv;
    const auto c = run_scenario(Scenario::chsh, cfg, 8).records_csv;
    o.require(a == b, "same seed, identical records.csv");
    o.require(a != c, "different seed, different records");
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;  // 0 = no runtime limit
        std::function<Verdict()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "Bell-state generation", 1.0, bell_state},
        {2, "fringe frequencies and visibilities", 10.0, fringes},
        {3, "CHSH", 60.0, chsh_values},
        {4, "tomography", 120.0, tomography},
        {5, "oracle equivalence", 30.0, oracle_equivalence},
        {6, "error propagation", 0.0, error_propagation},
        {7, "calibration closed loop", 0.0, calibration},
        {8, "rate budget", 0.0, rate_budget},
        {9, "determinism", 0.0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0.0) o.require(dt < c.budget_s, "runtime " + num("%.2f", dt) + " s < " + num("%.0f", c.budget_s) + " s");
        if (!o.pass) ++failed;
        std::printf("%s criterion %d %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, dt, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed;
}
