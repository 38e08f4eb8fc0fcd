#pragma once

// Few-photon Fock-state representation and linear-optical evolution.
//
// A PhotonicState is a sparse map from occupation vectors to complex
// amplitudes over an ordered set of labelled modes. Linear-optical elements
// act on creation operators, a_j^dag -> sum_k T_kj a_k^dag, which for a
// number state gives amplitudes proportional to permanents of sub-matrices
// of T.

#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qpic/error.hpp"

namespace qpic {

using cplx = std::complex<double>;
using Occupation = std::vector<int>;

// Amplitudes with modulus below this are dropped after every element.
inline constexpr double kPruneThreshold = 1e-14;

class ModeRegistry {
public:
    ModeRegistry() = default;
    explicit ModeRegistry(std::vector<std::string> labels);

    std::size_t size() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& label(std::size_t i) const { return labels_.at(i); }

    // Throws ConfigurationError for an unknown label.
    std::size_t index(std::string_view label) const;
    bool contains(std::string_view label) const;

    // New registry with `extra` appended after the existing labels.
    ModeRegistry extended(std::span<const std::string> extra) const;

    bool operator==(const ModeRegistry& other) const { return labels_ == other.labels_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, std::size_t> lookup_;
};

class PhotonicState {
public:
    using Amplitudes = std::map<Occupation, cplx>;

    PhotonicState() = default;
    // Every occupation vector must have length modes.size() and non-negative
    // entries. Amplitudes are stored as given (no normalization).
    PhotonicState(ModeRegistry modes, Amplitudes amplitudes);

    static PhotonicState vacuum(ModeRegistry modes);
    // prod_k a^dag_{labels[k]} |vac>, normalized.
    static PhotonicState from_creations(ModeRegistry modes, std::span<const std::string> labels);

    const ModeRegistry& modes() const { return modes_; }
    const Amplitudes& amplitudes() const { return amplitudes_; }
    std::size_t term_count() const { return amplitudes_.size(); }

    cplx amplitude(const Occupation& occupation) const;
    double norm_squared() const;

    // Total photon number if every stored term has the same total.
    std::optional<int> photon_number() const;

    PhotonicState normalized() const;

    // <this|other>. Registries must agree.
    cplx inner(const PhotonicState& other) const;

private:
    ModeRegistry modes_;
    Amplitudes amplitudes_;
};

// An n x n transfer matrix acting on the creation operators of n modes.
// Non-lossy elements are unitary; lossy ones are contractions (all singular
// values <= 1) and are applied through a unitary dilation into loss modes.
class CircuitElement {
public:
    // Throws ValidationError if a non-lossy transfer is not unitary to 1e-10
    // or a lossy one has a singular value above 1 + 1e-10.
    CircuitElement(std::string name, Eigen::MatrixXcd transfer, bool lossy = false);

    const std::string& name() const { return name_; }
    const Eigen::MatrixXcd& transfer() const { return transfer_; }
    bool lossy() const { return lossy_; }
    Eigen::Index dimension() const { return transfer_.cols(); }

private:
    std::string name_;
    Eigen::MatrixXcd transfer_;
    bool lossy_;
};

bool is_unitary(const Eigen::MatrixXcd& m, double tol = 1e-10);

// Permanent of a square matrix (Ryser's formula).
cplx permanent(const Eigen::MatrixXcd& m);

// Applies `element` to the modes named by `mode_subset` (in transfer-matrix
// order). For a lossy element the returned state lives on an extended
// registry carrying one extra "loss.<name>.<k>" mode per transfer column.
PhotonicState apply_element(const PhotonicState& state, const CircuitElement& element,
                            std::span<const std::string> mode_subset);

class PostSelectionPattern {
public:
    enum class Kind { exactly, at_least, unconstrained };

    struct Constraint {
        std::vector<std::string> modes;  // the photon count is summed over these
        Kind kind = Kind::unconstrained;
        int count = 0;
    };

    PostSelectionPattern() = default;
    explicit PostSelectionPattern(std::vector<Constraint> constraints);

    PostSelectionPattern& exactly(std::vector<std::string> modes, int count);
    PostSelectionPattern& at_least(std::vector<std::string> modes, int count);
    PostSelectionPattern& unconstrained(std::vector<std::string> modes);

    const std::vector<Constraint>& constraints() const { return constraints_; }
    std::string describe() const;

private:
    std::vector<Constraint> constraints_;
};

class EmptyPostSelection : public Error {
public:
    explicit EmptyPostSelection(PostSelectionPattern pattern);
    const PostSelectionPattern& pattern() const { return pattern_; }

private:
    PostSelectionPattern pattern_;
};

struct PostSelected {
    PhotonicState state;  // renormalized over the surviving terms
    double probability = 0.0;
};

// Throws ConfigurationError for an empty pattern or unknown labels and
// EmptyPostSelection when no amplitude survives.
PostSelected post_select(const PhotonicState& state, const PostSelectionPattern& pattern);

using RailPair = std::pair<std::string, std::string>;

// Two-qubit density matrix of a state holding exactly one photon in each rail
// pair. Basis index is 2*s + i where s (i) = 1 means the photon sits in the
// second signal (idler) rail. Any remaining modes are traced out. Terms with
// photons outside the dual-rail encoding carrying more than 1e-9 probability
// raise ContractViolation.
Eigen::Matrix4cd reduce_to_two_qubits(const PhotonicState& state, const RailPair& signal_rails,
                                      const RailPair& idler_rails);

}  // namespace qpic
