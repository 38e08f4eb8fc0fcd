#pragma once

// Independent reference implementations used by the tests and the
// acceptance runner. Nothing here calls into the library's evolution code.

#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qpic/fock.hpp"
#include "qpic/random.hpp"

namespace oracle {

using cplx = std::complex<double>;

inline double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

// Haar-ish random unitary from the QR of a complex Gaussian matrix.
inline Eigen::MatrixXcd random_unitary(int n, qpic::Rng& rng) {
    Eigen::MatrixXcd g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = cplx(rng.normal(), rng.normal());
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd q = qr.householderQ();
    const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i) q.col(i) *= std::polar(1.0, std::arg(r(i, i)));
    return q;
}

// Naive permanent, sum over all permutations.
inline cplx naive_permanent(const Eigen::MatrixXcd& m) {
    const int n = static_cast<int>(m.rows());
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    cplx total = 0.0;
    do {
        cplx term = 1.0;
        for (int i = 0; i < n; ++i) term *= m(i, p[i]);
        total += term;
    } while (std::next_permutation(p.begin(), p.end()));
    return total;
}

// Expands every creation operator a_j^dag -> sum_k U(k, j) a_k^dag term by
// term. `full` acts on the whole register.
inline std::map<qpic::Occupation, cplx> brute_force_evolve(const qpic::PhotonicState& state,
                                                           const Eigen::MatrixXcd& full) {
    const int modes = static_cast<int>(state.modes().size());
    std::map<qpic::Occupation, cplx> out;
    for (const auto& [occ, amp] : state.amplitudes()) {
        std::vector<int> photons;
        double norm_in = 1.0;
        for (int j = 0; j < modes; ++j) {
            for (int c = 0; c < occ[j]; ++c) photons.push_back(j);
            norm_in *= factorial(occ[j]);
        }
        // Unnormalized monomial coefficients.
        std::map<qpic::Occupation, cplx> mono{{qpic::Occupation(modes, 0), amp / std::sqrt(norm_in)}};
        for (int j : photons) {
            std::map<qpic::Occupation, cplx> next;
            for (const auto& [m, c] : mono)
                for (int k = 0; k < modes; ++k) {
                    if (full(k, j) == cplx(0.0)) continue;
                    qpic::Occupation m2 = m;
                    ++m2[k];
                    next[m2] += c * full(k, j);
                }
            mono = std::move(next);
        }
        for (const auto& [m, c] : mono) {
            double f = 1.0;
            for (int x : m) f *= factorial(x);
            out[m] += c * std::sqrt(f);
        }
    }
    return out;
}

// Embeds `u`, acting on `subset`, into the identity on the full register.
inline Eigen::MatrixXcd embed(const Eigen::MatrixXcd& u, const qpic::ModeRegistry& reg,
                              const std::vector<std::string>& subset) {
    Eigen::MatrixXcd full = Eigen::MatrixXcd::Identity(reg.size(), reg.size());
    for (std::size_t a = 0; a < subset.size(); ++a)
        for (std::size_t b = 0; b < subset.size(); ++b)
            full(reg.index(subset[a]), reg.index(subset[b])) = u(a, b);
    return full;
}

// Largest amplitude difference between the library result and the oracle.
inline double max_amplitude_error(const qpic::PhotonicState& got, const std::map<qpic::Occupation, cplx>& want) {
    double worst = 0.0;
    for (const auto& [occ, amp] : want) worst = std::max(worst, std::abs(got.amplitude(occ) - amp));
    for (const auto& [occ, amp] : got.amplitudes()) {
        auto it = want.find(occ);
        worst = std::max(worst, std::abs(amp - (it == want.end() ? cplx(0.0) : it->second)));
    }
    return worst;
}

struct RandomCircuitCase {
    qpic::PhotonicState input;
    Eigen::MatrixXcd unitary;
    std::vector<std::string> subset;
};

// Up to `max_photons` photons in up to `max_modes` modes, superposed over a
// few occupation patterns, with a random unitary on a random mode subset.
inline RandomCircuitCase random_circuit(qpic::Rng& rng, int max_photons = 4, int max_modes = 8) {
    const int modes = 2 + static_cast<int>(rng.next() % (max_modes - 1));
    std::vector<std::string> labels;
    for (int i = 0; i < modes; ++i) labels.push_back("m" + std::to_string(i));
    const qpic::ModeRegistry reg(labels);
    const int photons = 1 + static_cast<int>(rng.next() % max_photons);
    const int terms = 1 + static_cast<int>(rng.next() % 3);
    qpic::PhotonicState::Amplitudes amps;
    for (int t = 0; t < terms; ++t) {
        qpic::Occupation occ(modes, 0);
        for (int p = 0; p < photons; ++p) ++occ[rng.next() % modes];
        amps[occ] += cplx(rng.normal(), rng.normal());
    }
    qpic::PhotonicState input = qpic::PhotonicState(reg, amps).normalized();

    std::vector<std::string> shuffled = labels;
    for (int i = modes - 1; i > 0; --i) std::swap(shuffled[i], shuffled[rng.next() % (i + 1)]);
    const int width = 1 + static_cast<int>(rng.next() % modes);
    std::vector<std::string> subset(shuffled.begin(), shuffled.begin() + width);
    return {input, random_unitary(width, rng), subset};
}

}  // namespace oracle
