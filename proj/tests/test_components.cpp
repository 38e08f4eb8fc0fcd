#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qpic/components.hpp"
#include "qpic/scenarios.hpp"
#include "qpic/tomography.hpp"

using namespace qpic;

namespace {

constexpr double kPi = std::numbers::pi;

ExperimentConfig ideal_config() {
    ExperimentConfig cfg;
    cfg.ppc_out = {};
    cfg.ppc_in = {};
    cfg.noise_visibility = 1.0;
    return cfg;
}

// i(|00> - e^{2i theta}|11>)/sqrt2 as a density matrix.
Eigen::Matrix4cd expected_link_state(double theta) {
    Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
    psi[0] = 1.0;
    psi[3] = -std::polar(1.0, 2.0 * theta);
    psi /= std::sqrt(2.0);
    return psi * psi.adjoint();
}

}  // namespace

TEST_CASE("link post-selection succeeds a quarter of the time") {
    const auto cfg = ideal_config();
    for (double theta : {0.0, kPi / 3, kPi / 2, kPi}) {
        const Interconnect c =
            build_interconnect(interconnect_settings(cfg, theta, kIdentityAnalyzer, kIdentityAnalyzer));
        PostSelectionPattern p;
        p.exactly({c.signal_rails.zero, c.signal_rails.one}, 1).exactly({c.idler_rails.zero, c.idler_rails.one}, 1);
        CHECK(post_select(propagate(c), p).probability == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("link state follows the source phase") {
    const auto cfg = ideal_config();
    for (double theta : {0.0, 0.3, kPi / 2, 2.0, kPi}) {
        const Eigen::Matrix4cd rho =
            link_two_qubit_state(interconnect_settings(cfg, theta, kIdentityAnalyzer, kIdentityAnalyzer));
        CHECK((rho - expected_link_state(theta)).norm() < 1e-12);
    }
}

TEST_CASE("reciprocal grating couplers cancel across the link") {
    auto cfg = ideal_config();
    cfg.ppc_out.extinction_db = 18.0;
    cfg.ppc_in.extinction_db = 18.0;
    const Eigen::Matrix4cd rho =
        link_two_qubit_state(interconnect_settings(cfg, kPi / 2, kIdentityAnalyzer, kIdentityAnalyzer));
    CHECK((rho - expected_link_state(kPi / 2)).norm() < 1e-12);
}

TEST_CASE("compensated fibre rotation leaves the state untouched") {
    auto cfg = ideal_config();
    cfg.fibre.rotation = su2_rotation(Eigen::Vector3d(0.2, -0.7, 0.4), 1.1);
    const Eigen::Matrix4cd rho =
        link_two_qubit_state(interconnect_settings(cfg, kPi, kIdentityAnalyzer, kIdentityAnalyzer));
    CHECK((rho - expected_link_state(kPi)).norm() < 1e-12);
}

TEST_CASE("analyzer rail-1 probability is the projector overlap") {
    for (double ty : {0.0, 0.4, kPi / 2, 2.5, kPi})
        for (double tz : {0.0, 0.7, kPi}) {
            const Eigen::Matrix2cd u = analyzer_transfer({tz, ty, AnalyzerSide::a});
            CHECK(is_unitary(u));
            const Eigen::Vector2cd proj = analyzer_projector(ty, tz);
            for (Basis b : kAllBases) {
                const Eigen::Vector2cd ket = basis_ket(b);
                const double via_circuit = std::norm((u * ket)[1]);
                CHECK(via_circuit == doctest::Approx(std::norm(proj.dot(ket))).epsilon(1e-12));
            }
            // |0> gives the cos^2 law in theta_y.
            CHECK(std::norm((u * basis_ket(Basis::zero))[1]) ==
                  doctest::Approx(std::pow(std::cos(ty / 2), 2)).epsilon(1e-12));
        }
}

TEST_CASE("cardinal settings project on the cardinal states") {
    for (Basis b : kAllBases) {
        const AnalyzerAngles a = analyzer_angles_for(b);
        CHECK(std::norm(analyzer_projector(a.theta_y, a.theta_z).dot(basis_ket(b))) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("grating coupler crosstalk at 18 dB") {
    PpcModel m;
    m.extinction_db = 18.0;
    CHECK(m.crosstalk() == doctest::Approx(0.1259).epsilon(1e-3));
    CHECK(is_unitary(ppc_element(m, PpcDirection::path_to_pol).transfer()));
}

TEST_CASE("single grating coupler process fidelity regression") {
    PpcModel m;
    m.extinction_db = 18.0;
    std::vector<QubitDensityMatrix> outs;
    for (Basis b : {Basis::zero, Basis::one, Basis::plus, Basis::plus_i})
        outs.emplace_back(ppc_output_state(m, basis_ket(b)));
    const ProcessMatrix chi = process_tomography(outs[0], outs[1], outs[2], outs[3]);
    const ProcessMatrix ideal(unitary_chi(Eigen::Matrix2cd::Identity()));
    CHECK(process_fidelity(chi, ideal) == doctest::Approx(0.98415).epsilon(1e-4));
}

TEST_CASE("source emits a normalized two-photon state") {
    SourceSettings s;
    s.theta_ss = 0.77;
    const PhotonicState st = sfwm_two_source_state(s);
    CHECK(st.norm_squared() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(st.photon_number() == 2);
}

TEST_CASE("settings validation") {
    SourceSettings s;
    s.pair_amplitude = 0.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    WavelengthPlan w;
    w.idler_nm = 1562.0;
    CHECK_THROWS_AS(w.validate(), ValidationError);
    PpcModel p;
    p.extinction_db = -1.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
}
