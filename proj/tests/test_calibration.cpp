#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "qpic/calibration.hpp"
#include "qpic/random.hpp"

using namespace qpic;

namespace {

const HeaterCoefficients kY{0.9, 0.11};
const HeaterCoefficients kZ{0.3, 0.095};

double replay_error(const CalibrationMap& map, Basis b) {
    const HeaterPowers p = map.lookup.at(b);
    const Eigen::Vector3d got = projector_bloch(kY.phase(p.p_y_mw), kZ.phase(p.p_z_mw));
    const AnalyzerAngles t = analyzer_angles_for(b);
    return 0.5 * (got - projector_bloch(t.theta_y, t.theta_z)).norm();
}

}  // namespace

TEST_CASE("noiseless contour round-trips every projector") {
    const auto samples = synthetic_contour(kY, kZ, 16, 120.0, 120.0);
    const CalibrationMap map = fit_oe_contour(samples);
    CHECK(map.heater_y.alpha == doctest::Approx(kY.alpha).epsilon(1e-6));
    CHECK(map.heater_z.alpha == doctest::Approx(kZ.alpha).epsilon(1e-6));
    CHECK(map.residual_rms < 1e-8);
    for (Basis b : kAllBases) {
        REQUIRE(map.lookup.count(b) == 1);
        CHECK(replay_error(map, b) < 1e-3);
    }
}

TEST_CASE("one percent noise keeps the heater slope within one percent") {
    auto samples = synthetic_contour(kY, kZ, 16, 120.0, 120.0);
    Rng rng(9);
    for (auto& s : samples) s.power_norm *= 1.0 + 0.01 * rng.normal();
    const CalibrationMap map = fit_oe_contour(samples);
    CHECK(std::abs(map.heater_y.alpha / kY.alpha - 1.0) <= 0.01);
    CHECK(std::abs(map.heater_z.alpha / kZ.alpha - 1.0) <= 0.01);
}

TEST_CASE("transmission model matches the projector overlap") {
    const Eigen::Vector3d probe = default_calibration_probe();
    CHECK(probe.norm() == doctest::Approx(1.0));
    for (double ty : {0.2, 1.3, 2.9})
        for (double tz : {0.0, 1.0, 4.0})
            CHECK(analyzer_transmission(probe, ty, tz) ==
                  doctest::Approx(0.5 * (1.0 + probe.dot(projector_bloch(ty, tz)))).epsilon(1e-12));
}

TEST_CASE("contour validation") {
    const auto coarse = synthetic_contour(kY, kZ, 6, 120.0, 120.0);
    CHECK_THROWS_AS(fit_oe_contour(coarse), ValidationError);
    const auto narrow = synthetic_contour(kY, kZ, 16, 20.0, 20.0);
    CHECK_THROWS_AS(fit_oe_contour(narrow), ValidationError);
    auto garbage = synthetic_contour(kY, kZ, 16, 120.0, 120.0);
    Rng rng(1);
    for (auto& s : garbage) s.power_norm = rng.uniform();
    CHECK_THROWS_AS(fit_oe_contour(garbage), CalibrationError);
}

TEST_CASE("out-of-range projector raises RangeError") {
    CalibrationMap map = fit_oe_contour(synthetic_contour(kY, kZ, 16, 120.0, 120.0));
    map.max_power_y_mw = 1.0;
    map.max_power_z_mw = 1.0;
    CHECK_THROWS_AS(powers_for_state(map, Basis::minus_i), RangeError);
}

TEST_CASE("contour csv round trip and strict header") {
    const auto samples = synthetic_contour(kY, kZ, 8, 60.0, 60.0);
    std::istringstream in(write_oe_csv(samples));
    const auto back = read_oe_csv(in);
    REQUIRE(back.size() == samples.size());
    CHECK(back[5].power_norm == doctest::Approx(samples[5].power_norm).epsilon(1e-10));
    std::istringstream bad("py,pz,power\n1,2,0.5\n");
    CHECK_THROWS_AS(read_oe_csv(bad), InputError);
}

TEST_CASE("loss budget sums in dB") {
    const LossBudget b = loss_budget({{"filter", -6.0}, {"snspd", -6.0}, {"grating", -9.0}});
    CHECK(b.total_db == doctest::Approx(-21.0));
    CHECK(b.transmittance() == doctest::Approx(0.0079).epsilon(0.01));
    CHECK_THROWS_AS(loss_budget({{"gain", 1.0}}), ValidationError);
}

TEST_CASE("itemized sums and path transmittances") {
    const ItemizedSums s = itemized_sums();
    CHECK(s.pair_total_db == doctest::Approx(-51.0));
    CHECK(s.link_db == doctest::Approx(-15.25));
    CHECK(s.chip_a_pair_db == doctest::Approx(-35.75));
    const PathTransmittances t = path_transmittances();
    CHECK(10 * std::log10(t.arm) == doctest::Approx(-11.875));
    CHECK(t.link == doctest::Approx(std::pow(10.0, -1.525)));
}

TEST_CASE("chip-to-chip rate prediction") {
    const double expected[] = {14.9, 19.4, 23.9};
    int i = 0;
    for (double observed : {500.0, 650.0, 800.0}) {
        const RatePrediction p = predict_chip_to_chip_rate(observed);
        CHECK(p.chip_to_chip_hz == doctest::Approx(expected[i++]).epsilon(0.01));
        CHECK(p.chip_to_chip_hz >= 4.0);
        CHECK(p.chip_to_chip_hz <= 24.0);
    }
    CHECK_THROWS_AS(predict_chip_to_chip_rate(0.0), ValidationError);
}
