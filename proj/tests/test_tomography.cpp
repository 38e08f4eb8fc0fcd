#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "qpic/scenarios.hpp"
#include "qpic/tomography.hpp"

using namespace qpic;

namespace {

QubitDensityMatrix random_state(Rng& rng) {
    Eigen::Vector3d r(rng.normal(), rng.normal(), rng.normal());
    r = r.normalized() * std::cbrt(rng.uniform());
    return QubitDensityMatrix::from_bloch(r);
}

// chi of a unitary from its Pauli expansion U = sum c_m sigma_m.
Eigen::Matrix4cd chi_by_expansion(const Eigen::Matrix2cd& u) {
    Eigen::Vector4cd c;
    for (int m = 0; m < 4; ++m) c[m] = (pauli_basis()[m].adjoint() * u).trace() / 2.0;
    return c * c.adjoint();
}

}  // namespace

TEST_CASE("exact counts reconstruct random states") {
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        const QubitDensityMatrix rho = random_state(rng);
        const TomographyCounts counts = exact_tomography_counts(rho.matrix(), 1e4);
        const LinearInversion li = linear_inversion(counts);
        CHECK((li.rho - rho.matrix()).norm() < 1e-10);
        CHECK(state_fidelity(rho, mle_reconstruct(counts).rho) >= 1.0 - 1e-6);
    }
}

TEST_CASE("pure-state reconstruction") {
    for (Basis b : kAllBases) {
        const auto rho = QubitDensityMatrix::pure(basis_ket(b));
        const MleResult m = mle_reconstruct(exact_tomography_counts(rho.matrix(), 1e4));
        CHECK(state_fidelity(rho, m.rho) >= 1.0 - 1e-6);
    }
}

TEST_CASE("property: MLE is physical and no worse than the projected start") {
    Rng rng(12);
    for (int i = 0; i < 40; ++i) {
        const QubitDensityMatrix rho = random_state(rng);
        const TomographyCounts counts = sample_tomography_counts(rho.matrix(), 200, rng);
        const MleResult m = mle_reconstruct(counts);
        CHECK(is_physical(m.rho.matrix()));
        CHECK(m.log_likelihood >= m.initial_log_likelihood - 1e-9);
        CHECK(state_fidelity(rho, m.rho) <= 1.0 + 1e-12);
    }
}

TEST_CASE("fidelity is symmetric and bounded") {
    Rng rng(21);
    for (int i = 0; i < 50; ++i) {
        const auto a = random_state(rng), b = random_state(rng);
        const double fab = state_fidelity(a, b), fba = state_fidelity(b, a);
        CHECK(fab == doctest::Approx(fba).epsilon(1e-9));
        CHECK(fab >= -1e-12);
        CHECK(fab <= 1.0 + 1e-12);
    }
}

TEST_CASE("projection fixes an unphysical estimate") {
    Eigen::Matrix2cd bad;
    bad << 1.2, 0.0, 0.0, -0.2;
    CHECK_FALSE(is_physical(bad));
    CHECK(is_physical(project_to_physical(bad)));
    CHECK_THROWS(QubitDensityMatrix(bad));
}

TEST_CASE("missing basis is an input error") {
    TomographyCounts c;
    c.bases[Basis::zero] = {3, 10};
    CHECK_THROWS_AS(linear_inversion(c), InputError);
}

TEST_CASE("process tomography recovers unitary channels") {
    Rng rng(31);
    for (int i = 0; i < 30; ++i) {
        const Eigen::Matrix2cd u = oracle::random_unitary(2, rng);
        CHECK((unitary_chi(u) - chi_by_expansion(u)).norm() < 1e-12);
        auto out = [&](Basis b) { return QubitDensityMatrix::pure(u * basis_ket(b)); };
        const ProcessMatrix chi = process_tomography(out(Basis::zero), out(Basis::one), out(Basis::plus), out(Basis::plus_i));
        CHECK((chi.matrix() - chi_by_expansion(u)).norm() < 1e-9);
        // The channel reproduces the outputs on a fresh input.
        const QubitDensityMatrix probe = random_state(rng);
        CHECK((apply_process(chi.matrix(), probe.matrix()) - u * probe.matrix() * u.adjoint()).norm() < 1e-9);
    }
}

TEST_CASE("identity process") {
    auto out = [](Basis b) { return QubitDensityMatrix::pure(basis_ket(b)); };
    const ProcessMatrix chi = process_tomography(out(Basis::zero), out(Basis::one), out(Basis::plus), out(Basis::plus_i));
    CHECK(std::abs(chi.matrix()(0, 0) - 1.0) < 1e-10);
    const ProcessMatrix ideal(unitary_chi(Eigen::Matrix2cd::Identity()));
    CHECK(process_fidelity(chi, ideal) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("property: depolarizing channel chi is trace one and positive") {
    const double p = 0.2;
    auto out = [&](Basis b) {
        const Eigen::Matrix2cd r = QubitDensityMatrix::pure(basis_ket(b)).matrix();
        return QubitDensityMatrix((1 - p) * r + p * Eigen::Matrix2cd::Identity() / 2.0);
    };
    const ProcessMatrix chi = process_tomography(out(Basis::zero), out(Basis::one), out(Basis::plus), out(Basis::plus_i));
    CHECK(std::abs(chi.matrix().trace() - 1.0) < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(chi.matrix());
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    CHECK(chi.matrix()(0, 0).real() == doctest::Approx(1 - 3 * p / 4).epsilon(1e-10));
}

TEST_CASE("six cardinal states through one grating coupler") {
    PpcModel m;
    m.extinction_db = 18.0;
    Rng rng(77);
    double sum = 0;
    for (Basis b : kAllBases) {
        TomographyCounts c;
        for (const auto& [basis, p] : ppc_projector_probabilities(m, basis_ket(b)))
            c.bases[basis] = {static_cast<double>(rng.binomial(10000, p)), 10000.0};
        sum += state_fidelity(QubitDensityMatrix::pure(basis_ket(b)), mle_reconstruct(c).rho);
    }
    CHECK(sum / 6 >= 0.98);
    CHECK(sum / 6 <= 0.995);
}
