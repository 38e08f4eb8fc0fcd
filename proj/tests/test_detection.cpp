#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qpic/detection.hpp"
#include "qpic/random.hpp"
#include "qpic/scenarios.hpp"

using namespace qpic;

TEST_CASE("Poisson and binomial moments") {
    Rng rng(99);
    for (double mean : {0.3, 4.0, 50.0, 5000.0}) {
        const int n = 20000;
        double s = 0, s2 = 0;
        for (int i = 0; i < n; ++i) {
            const double x = static_cast<double>(rng.poisson(mean));
            s += x;
            s2 += x * x;
        }
        const double m = s / n, var = s2 / n - m * m;
        CHECK(m == doctest::Approx(mean).epsilon(5.0 / std::sqrt(n * mean) + 1e-3));
        CHECK(var == doctest::Approx(mean).epsilon(0.05));
    }
    double s = 0;
    for (int i = 0; i < 20000; ++i) s += static_cast<double>(rng.binomial(10000, 0.3));
    CHECK(s / 20000 == doctest::Approx(3000.0).epsilon(1e-3));
}

TEST_CASE("derived seeds are distinct and reproducible") {
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}

TEST_CASE("accidental estimator matches a time-tag simulation") {
    // Two independent Poisson click streams, pairs counted within one window.
    const double r1 = 2.0e5, r2 = 1.5e5, tau = 1e-9, duration = 2.0;
    Rng rng(3);
    auto stream = [&](double rate) {
        std::vector<double> t;
        double now = 0.0;
        while (true) {
            now += -std::log(1.0 - rng.uniform()) / rate;
            if (now >= duration) break;
            t.push_back(now);
        }
        return t;
    };
    const auto a = stream(r1), b = stream(r2);
    long pairs = 0;
    for (double t : a) {
        auto lo = std::lower_bound(b.begin(), b.end(), t - tau / 2);
        auto hi = std::lower_bound(b.begin(), b.end(), t + tau / 2);
        pairs += hi - lo;
    }
    const double predicted = estimate_accidentals(r1, r2, tau, duration);
    CHECK(static_cast<double>(pairs) == doctest::Approx(predicted).epsilon(4.0 / std::sqrt(predicted)));
}

TEST_CASE("sampled records follow the expected means") {
    const CountProbabilities p{0.2, 0.5, 0.5};
    RateModel rates{1.0e5, 0.1, 0.1};
    DetectorModel d1, d2;
    const double duration = 10.0, window = 1e-9;
    double coinc = 0, singles = 0;
    const int n = 400;
    for (int i = 0; i < n; ++i) {
        const CountRecord r = sample_counts(p, rates, d1, d2, window, duration, derive_seed(42, i));
        coinc += r.corrected_coincidences();
        singles += static_cast<double>(r.singles_1);
    }
    CHECK(coinc / n == doctest::Approx(expected_coincidences(p, rates, d1, d2, duration)).epsilon(0.01));
    CHECK(singles / n == doctest::Approx((1.0e5 * 0.1 * 0.5 * 0.5 + 800.0) * duration).epsilon(0.01));
}

TEST_CASE("same seed gives the same record") {
    const CountProbabilities p{0.1, 0.4, 0.3};
    const RateModel rates{1e6, 0.05, 0.01};
    const CountRecord a = sample_counts(p, rates, {}, {}, 450e-12, 60.0, 17);
    const CountRecord b = sample_counts(p, rates, {}, {}, 450e-12, 60.0, 17);
    CHECK(to_csv_row(a) == to_csv_row(b));
}

TEST_CASE("corrected coincidences are clamped at zero") {
    CountRecord r;
    r.coincidences = 2;
    r.accidentals_estimate = 5.0;
    r.corrected = true;
    CHECK(r.corrected_coincidences() == 0.0);
}

TEST_CASE("csv header") {
    CHECK(count_record_csv_header() ==
          "theta_ay,theta_az,theta_by,theta_bz,theta_ss,singles1,singles2,coinc_raw,accidentals,coinc_corrected,sigma,"
          "window_s,duration_s");
}

TEST_CASE("white-noise mixing keeps the group total") {
    const std::vector<Outcome> group = {{"A", "B"}, {"A", "B'"}, {"A'", "B"}, {"A'", "B'"}};
    OutcomeProbabilities p{{group[0], 0.2}, {group[3], 0.05}, {{"sink"}, 0.75}};
    const auto same = mix_white_noise(p, group, 1.0);
    CHECK(same.at(group[0]) == doctest::Approx(0.2));
    const auto mixed = mix_white_noise(p, group, 0.5);
    double total = 0;
    for (const auto& g : group) total += mixed.count(g) ? mixed.at(g) : 0.0;
    CHECK(total == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(mixed.at(group[1]) == doctest::Approx(0.5 * 0.25 / 4).epsilon(1e-12));
    CHECK(mixed.at({"sink"}) == doctest::Approx(0.75));
}

TEST_CASE("unrouted modes violate the detection contract") {
    const ModeRegistry reg({"a", "b"});
    const std::vector<std::string> b_only = {"b"};
    const PhotonicState st = PhotonicState::from_creations(reg, b_only);
    DetectorAssignment d;
    d.route("a", "D");
    CHECK_THROWS_AS(outcome_probabilities(st, d), ContractViolation);
    d.route("b", "E");
    CHECK(click_probability(outcome_probabilities(st, d), "E") == doctest::Approx(1.0));
}

TEST_CASE("property: outcome probabilities sum to one on the link") {
    ExperimentConfig cfg;
    for (double ay : {0.0, 1.1, 2.5})
        for (double by : {0.3, 1.9}) {
            const Interconnect c = build_interconnect(interconnect_settings(cfg, 1.3, {ay, 0.2}, {by, -0.4}));
            const PhotonicState out = propagate(c);
            const auto p = outcome_probabilities(out, assign_detectors(out, {{"tb.s", kD1}, {"bb.i", kD3}}));
            double total = 0;
            for (const auto& [o, v] : p) {
                CHECK(v >= -1e-15);
                total += v;
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
}

TEST_CASE("rate model validation") {
    RateModel r{-1.0, 0.5, 0.5};
    CHECK_THROWS_AS(r.validate(), ValidationError);
    DetectorModel d;
    d.efficiency = 1.5;
    CHECK_THROWS_AS(d.validate(), ValidationError);
}

TEST_CASE("phi+ correlations at a quarter-turn offset") {
    ExperimentConfig cfg;
    cfg.ppc_out = {};
    cfg.ppc_in = {};
    const double pi = std::numbers::pi;
    const Interconnect c = build_interconnect(interconnect_settings(cfg, pi / 2, {0.0, 0.0}, {pi / 4, 0.0}));
    const PhotonicState out = propagate(c);
    const auto p = outcome_probabilities(
        out, assign_detectors(out, {{"tb.s", kD1}, {"tt.s", kD1p}, {"bb.i", kD3}, {"bt.i", kD3p}}));
    const double same = coincidence_probability(p, kD1, kD3) + coincidence_probability(p, kD1p, kD3p);
    const double diff = coincidence_probability(p, kD1, kD3p) + coincidence_probability(p, kD1p, kD3);
    CHECK(same + diff == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(same / (same + diff) == doctest::Approx(std::pow(std::cos(pi / 8), 2)).epsilon(1e-12));
}
