#pragma once

// Six-basis single-qubit state tomography, single-qubit process tomography
// and fidelity measures.

#include <array>
#include <cstdint>
#include <map>

#include <Eigen/Dense>
#include <json.hpp>

#include "qpic/components.hpp"
#include "qpic/error.hpp"
#include "qpic/random.hpp"

namespace qpic {

// Pauli operator basis in the order I, X, Y, Z.
const std::array<Eigen::Matrix2cd, 4>& pauli_basis();

class QubitDensityMatrix {
public:
    // Throws ValidationError unless Hermitian and unit trace within 1e-10 with
    // eigenvalues >= -1e-9.
    explicit QubitDensityMatrix(const Eigen::Matrix2cd& rho);
    static QubitDensityMatrix pure(const Eigen::Vector2cd& ket);
    static QubitDensityMatrix from_bloch(const Eigen::Vector3d& r);

    const Eigen::Matrix2cd& matrix() const { return rho_; }
    double purity() const;

private:
    Eigen::Matrix2cd rho_;
};

bool is_physical(const Eigen::Matrix2cd& rho, double tol = 1e-10);

struct BasisCounts {
    double count = 0.0;  // clicks on the projector
    double total = 0.0;  // trials for this setting
};

// Counts may be fractional, so exact Born probabilities can be fed directly.
struct TomographyCounts {
    std::map<Basis, BasisCounts> bases;
    double frequency(Basis b) const;  // throws InputError if missing
};

TomographyCounts exact_tomography_counts(const Eigen::Matrix2cd& rho, double total = 1.0);
TomographyCounts sample_tomography_counts(const Eigen::Matrix2cd& rho, std::int64_t shots, Rng& rng);

struct LinearInversion {
    Eigen::Matrix2cd rho;
    Eigen::Vector3d bloch;
    bool unphysical = false;  // |r| > 1
};

LinearInversion linear_inversion(const TomographyCounts& counts);

// Nearest physical state in Bloch terms (r scaled back onto the sphere).
Eigen::Matrix2cd project_to_physical(const Eigen::Matrix2cd& rho);

struct MleResult {
    QubitDensityMatrix rho;
    double log_likelihood;
    double initial_log_likelihood;  // of the projected linear-inversion estimate
    int evaluations;
};

// Binomial log-likelihood of rho given counts.
double tomography_log_likelihood(const Eigen::Matrix2cd& rho, const TomographyCounts& counts);

// Maximum-likelihood estimate, rho = T^dag T / Tr with lower-triangular T.
// Needs all six bases with totals > 0. Throws ConvergenceError when the
// optimizer runs out of evaluations.
MleResult mle_reconstruct(const TomographyCounts& counts);

double state_fidelity(const QubitDensityMatrix& a, const QubitDensityMatrix& b);
Eigen::Vector3d bloch_vector(const QubitDensityMatrix& rho);

class ProcessMatrix {
public:
    // Throws ValidationError if not Hermitian within 1e-10, not PSD within
    // -1e-9, or not trace preserving within `trace_tolerance`.
    explicit ProcessMatrix(const Eigen::Matrix4cd& chi, double trace_tolerance = 1e-8);
    const Eigen::Matrix4cd& matrix() const { return chi_; }

    // Trace-norm distance removed by the physicality projection, and whether
    // it exceeded 0.05. Zero for matrices built directly.
    double projection_distance = 0.0;
    bool projection_warning = false;
    // max |sum chi_mn E_n^dag E_m - I|
    double trace_preservation_error = 0.0;

private:
    Eigen::Matrix4cd chi_;
};

// chi of the unitary channel rho -> U rho U^dag.
Eigen::Matrix4cd unitary_chi(const Eigen::Matrix2cd& u);
Eigen::Matrix2cd apply_process(const Eigen::Matrix4cd& chi, const Eigen::Matrix2cd& rho);

// The four input states are |0>, |1>, |+>, |+i>.
ProcessMatrix process_tomography(const QubitDensityMatrix& out_0, const QubitDensityMatrix& out_1,
                                 const QubitDensityMatrix& out_plus, const QubitDensityMatrix& out_plus_i);

// Re Tr[chi_ideal chi].
double process_fidelity(const ProcessMatrix& chi, const ProcessMatrix& chi_ideal);

nlohmann::json to_json(const Eigen::MatrixXcd& m);
nlohmann::json to_json(const QubitDensityMatrix& rho);
nlohmann::json to_json(const ProcessMatrix& chi);

}  // namespace qpic
