#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qpic/analysis.hpp"
#include "qpic/random.hpp"
#include "qpic/scenarios.hpp"

using namespace qpic;

namespace {

constexpr double kPi = std::numbers::pi;

FringeDataset synthetic(double a, double b, int k, double phase, int n, double sigma_scale = 0.0, Rng* rng = nullptr) {
    FringeDataset d{"theta", {}, {}};
    for (int i = 0; i < n; ++i) {
        const double x = 2 * kPi * i / n;
        double y = a + b * std::cos(k * x + phase);
        if (rng) y = static_cast<double>(rng->poisson(y));
        d.points.push_back({x, y + sigma_scale, 0.0});
    }
    return d;
}

ExperimentConfig link_config(double theta_ss, double v) {
    ExperimentConfig cfg;
    cfg.source.theta_ss = theta_ss;
    cfg.noise_visibility = v;
    return cfg;
}

}  // namespace

TEST_CASE("fringe fit recovers the model") {
    for (int k : {1, 2}) {
        FringeDataset d = synthetic(100.0, 60.0, k, 0.4, 64);
        const FringeFit f = fit_fringe(d, k);
        CHECK(f.floor == doctest::Approx(100.0).epsilon(1e-6));
        CHECK(f.amplitude == doctest::Approx(60.0).epsilon(1e-6));
        CHECK(std::remainder(f.phase - 0.4, 2 * kPi) == doctest::Approx(0.0).epsilon(1e-6));
        d.fit = f;
        CHECK(visibility(d).value == doctest::Approx(120.0 / 160.0).epsilon(1e-6));
    }
}

TEST_CASE("automatic fit picks the fringe frequency") {
    Rng rng(4);
    CHECK(fit_fringe_auto(synthetic(500, 480, 1, 0.0, 64, 0.0, &rng)).k == 1);
    CHECK(fit_fringe_auto(synthetic(500, 480, 2, 1.0, 64, 0.0, &rng)).k == 2);
}

TEST_CASE("sparse scans are rejected") {
    CHECK_THROWS_AS(fit_fringe(synthetic(10, 5, 2, 0, 12), 2), ValidationError);
    CHECK_THROWS_AS(fit_fringe(synthetic(10, 5, 1, 0, 32), 3), ValidationError);
}

TEST_CASE("ideal fringes have unit visibility") {
    ExperimentConfig cfg;
    cfg.noise_visibility = 1.0;
    FringeDataset classical{"theta_ss", {}, {}}, quantum{"theta_ss", {}, {}};
    for (int i = 0; i < 64; ++i) {
        const double t = 2 * kPi * i / 64;
        const auto s = interconnect_settings(cfg, t, {kPi / 2, 0.0}, {0.0, 0.0});
        classical.points.push_back({t, 1000.0 * classical_fringe_probability(s), 0.0});
        quantum.points.push_back({t, 1000.0 * quantum_fringe_probabilities(s, 1.0).coincidence, 0.0});
    }
    classical.fit = fit_fringe_auto(classical);
    quantum.fit = fit_fringe_auto(quantum);
    CHECK(classical.fit->k == 1);
    CHECK(quantum.fit->k == 2);
    CHECK(visibility(classical).value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(visibility(quantum).value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("exact CHSH value scales with white-noise visibility") {
    for (double theta : {kPi / 2, kPi})
        for (double v : {1.0, 0.9763, 0.9685, 1 / std::sqrt(2.0)}) {
            const ChshPlan plan = plan_chsh(link_config(theta, v));
            CHECK(exact_chsh(plan).s == doctest::Approx(2 * std::sqrt(2.0) * v).epsilon(1e-9));
        }
}

TEST_CASE("Bell state from the source phase") {
    CHECK(bell_state_for(kPi / 2) == BellState::phi_plus);
    CHECK(bell_state_for(kPi) == BellState::phi_minus);
    CHECK_THROWS_AS(bell_state_for(0.3), ValidationError);
}

TEST_CASE("S from visibility") {
    CHECK(s_from_visibility(1.0, 0.0).s == doctest::Approx(2 * std::sqrt(2.0)));
    CHECK(s_from_visibility(1 / std::sqrt(2.0), 0.0).s == doctest::Approx(2.0));
    CHECK_THROWS_AS(s_from_visibility(1.2, 0.0), ValidationError);
}

TEST_CASE("correlation coefficient from four records") {
    auto rec = [](double a, double b, std::int64_t n) {
        CountRecord r;
        r.settings = {a, 0.0, b, 0.0, kPi / 2};
        r.coincidences = n;
        r.duration_s = 60;
        return r;
    };
    const auto c = correlation_coefficient({rec(0, 1, 90), rec(kPi, 1 + kPi, 90), rec(0, 1 + kPi, 10), rec(kPi, 1, 10)});
    CHECK(c.value == doctest::Approx(0.8));
    CHECK(c.sigma > 0.0);
    CHECK_THROWS_AS(correlation_coefficient({rec(0, 1, 90), rec(0, 1, 90), rec(0, 1, 10), rec(0, 1, 10)}), ValidationError);
}

TEST_CASE("property: CHSH sigma matches the spread of repeated runs") {
    const ExperimentConfig cfg = link_config(kPi / 2, 0.9763);
    const ChshPlan plan = plan_chsh(cfg);
    const int reps = 300;
    double s = 0, s2 = 0, sig = 0;
    for (int i = 0; i < reps; ++i) {
        const ChshRun run = sample_chsh(plan, cfg, 60.0, derive_seed(1234, i));
        s += run.result.s;
        s2 += run.result.s * run.result.s;
        sig += run.result.sigma;
    }
    const double mean = s / reps, sd = std::sqrt(s2 / reps - mean * mean);
    CHECK(sig / reps == doctest::Approx(sd).epsilon(0.15));
    CHECK(mean == doctest::Approx(exact_chsh(plan).s).epsilon(0.01));
}

TEST_CASE("property: fitted visibility sigma matches the spread of repeated scans") {
    const int reps = 300;
    double s = 0, s2 = 0, sig = 0;
    for (int i = 0; i < reps; ++i) {
        Rng rng(derive_seed(55, i));
        FringeDataset d = synthetic(300, 270, 1, 0.2, 32, 0.0, &rng);
        d.fit = fit_fringe(d, 1);
        const Visibility v = visibility(d);
        s += v.value;
        s2 += v.value * v.value;
        sig += v.sigma;
    }
    const double mean = s / reps, sd = std::sqrt(s2 / reps - mean * mean);
    CHECK(sig / reps == doctest::Approx(sd).epsilon(0.15));
}
