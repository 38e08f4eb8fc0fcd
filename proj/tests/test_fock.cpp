#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracle.hpp"
#include "qpic/fock.hpp"

using namespace qpic;

namespace {

Eigen::MatrixXcd balanced() {
    Eigen::MatrixXcd u(2, 2);
    const double s = 1.0 / std::sqrt(2.0);
    u << s, cplx(0, s), cplx(0, s), s;
    return u;
}

}  // namespace

TEST_CASE("permanent matches the permutation sum") {
    Rng rng(11);
    for (int n = 1; n <= 6; ++n) {
        Eigen::MatrixXcd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = cplx(rng.normal(), rng.normal());
        CHECK(std::abs(permanent(m) - oracle::naive_permanent(m)) < 1e-10);
    }
    Eigen::MatrixXcd ones = Eigen::MatrixXcd::Ones(4, 4);
    CHECK(std::abs(permanent(ones) - 24.0) < 1e-12);
}

TEST_CASE("Hong-Ou-Mandel dip on a balanced coupler") {
    const ModeRegistry reg({"a", "b"});
    const std::vector<std::string> ab = {"a", "b"};
    const PhotonicState in = PhotonicState::from_creations(reg, ab);
    const PhotonicState out = apply_element(in, CircuitElement("bs", balanced()), ab);
    CHECK(std::abs(out.amplitude({1, 1})) < 1e-14);
    CHECK(std::norm(out.amplitude({2, 0})) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::norm(out.amplitude({0, 2})) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("apply_element agrees with creation-operator expansion") {
    Rng rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        const auto c = oracle::random_circuit(rng);
        const PhotonicState got = apply_element(c.input, CircuitElement("u", c.unitary), c.subset);
        const auto want = oracle::brute_force_evolve(c.input, oracle::embed(c.unitary, c.input.modes(), c.subset));
        CHECK(oracle::max_amplitude_error(got, want) < 1e-12);
    }
}

TEST_CASE("property: unitary evolution keeps norm and photon number") {
    Rng rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const auto c = oracle::random_circuit(rng);
        const PhotonicState out = apply_element(c.input, CircuitElement("u", c.unitary), c.subset);
        CHECK(out.norm_squared() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(out.photon_number() == c.input.photon_number());
    }
}

TEST_CASE("lossy element moves the missing amplitude into loss modes") {
    const ModeRegistry reg({"a", "b"});
    const std::vector<std::string> ab = {"a", "b"};
    const std::vector<std::string> a_only = {"a"};
    const PhotonicState in = PhotonicState::from_creations(reg, a_only);
    Eigen::MatrixXcd t = Eigen::MatrixXcd::Identity(2, 2) * std::sqrt(0.3);
    const PhotonicState out = apply_element(in, CircuitElement("att", t, true), ab);
    CHECK(out.modes().size() > 2);
    CHECK(out.norm_squared() == doctest::Approx(1.0).epsilon(1e-12));
    PostSelectionPattern kept;
    kept.exactly({"a", "b"}, 1);
    CHECK(post_select(out, kept).probability == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("lossless flag rejects a non-unitary transfer") {
    Eigen::MatrixXcd t = Eigen::MatrixXcd::Identity(2, 2) * 0.5;
    CHECK_THROWS_AS(CircuitElement("bad", t), ValidationError);
}

TEST_CASE("post-selection renormalizes and reports its probability") {
    const ModeRegistry reg({"a", "b"});
    const std::vector<std::string> ab = {"a", "b"};
    const PhotonicState out = apply_element(PhotonicState::from_creations(reg, ab), CircuitElement("bs", balanced()), ab);
    PostSelectionPattern p;
    p.exactly({"a"}, 2);
    const PostSelected ps = post_select(out, p);
    CHECK(ps.probability == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(ps.state.norm_squared() == doctest::Approx(1.0).epsilon(1e-12));

    PostSelectionPattern none;
    none.exactly({"a"}, 1);
    CHECK_THROWS_AS(post_select(out, none), EmptyPostSelection);
}

TEST_CASE("registry rejects duplicates and unknown labels") {
    CHECK_THROWS_AS(ModeRegistry({"a", "a"}), ConfigurationError);
    const ModeRegistry reg({"a", "b"});
    CHECK_THROWS_AS(reg.index("c"), ConfigurationError);
}

TEST_CASE("two-qubit reduction of a dual-rail product state") {
    const ModeRegistry reg({"s0", "s1", "i0", "i1"});
    const PhotonicState st(reg, {{{1, 0, 1, 0}, 1.0}, {{0, 1, 0, 1}, 1.0}});
    const Eigen::Matrix4cd rho = reduce_to_two_qubits(st.normalized(), {"s0", "s1"}, {"i0", "i1"});
    CHECK(std::abs(rho(0, 0) - 0.5) < 1e-12);
    CHECK(std::abs(rho(0, 3) - 0.5) < 1e-12);
    CHECK(std::abs(rho(1, 1)) < 1e-12);
}

TEST_CASE("unconstrained pattern keeps everything") {
    const ModeRegistry reg({"a", "b"});
    const std::vector<std::string> ab = {"a", "b"};
    const PhotonicState out = apply_element(PhotonicState::from_creations(reg, ab), CircuitElement("bs", balanced()), ab);
    PostSelectionPattern all;
    all.unconstrained({"a", "b"});
    const PostSelected ps = post_select(out, all);
    CHECK(ps.probability == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(ps.state.inner(out) - 1.0) < 1e-12);
    CHECK_THROWS_AS(post_select(out, PostSelectionPattern()), ConfigurationError);
}
