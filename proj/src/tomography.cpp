#include "qpic/tomography.hpp"

#include <algorithm>
#include <cmath>

#include "qpic/numerics.hpp"

namespace qpic {

namespace {

const cplx I{0.0, 1.0};

Eigen::Matrix2cd sqrt_psd(const Eigen::Matrix2cd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(0.5 * (m + m.adjoint()));
    Eigen::Vector2d ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::Matrix2cd rho_from_t(const Eigen::VectorXd& t) {
    Eigen::Matrix2cd tm;
    tm << t[0], 0.0, cplx{t[2], t[3]}, t[1];
    Eigen::Matrix2cd r = tm.adjoint() * tm;
    const double tr = r.trace().real();
    if (!(tr > 0.0)) return Eigen::Matrix2cd::Identity() * 0.5;
    return r / tr;
}

Eigen::VectorXd t_from_rho(const Eigen::Matrix2cd& rho) {
    Eigen::VectorXd t(4);
    const double r00 = rho(0, 0).real(), r11 = rho(1, 1).real();
    if (r11 > 1e-12) {
        const double t2 = std::sqrt(r11);
        const cplx c = rho(1, 0) / t2;
        const double det = std::max(0.0, (r00 * r11 - std::norm(rho(1, 0))));
        t << std::sqrt(det / r11), t2, c.real(), c.imag();
    } else {
        t << std::sqrt(std::max(r00, 0.0)), 0.0, 0.0, 0.0;
    }
    return t;
}

}  // namespace

const std::array<Eigen::Matrix2cd, 4>& pauli_basis() {
    static const std::array<Eigen::Matrix2cd, 4> b = [] {
        std::array<Eigen::Matrix2cd, 4> p;
        p[0] = Eigen::Matrix2cd::Identity();
        p[1] << 0, 1, 1, 0;
        p[2] << 0, -I, I, 0;
        p[3] << 1, 0, 0, -1;
        return p;
    }();
    return b;
}

bool is_physical(const Eigen::Matrix2cd& rho, double tol) {
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(rho.trace() - cplx{1.0, 0.0}) > tol) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -1e-9;
}

QubitDensityMatrix::QubitDensityMatrix(const Eigen::Matrix2cd& rho) : rho_(rho) {
    if (!rho.allFinite() || !is_physical(rho)) throw ValidationError("not a physical qubit density matrix");
}

QubitDensityMatrix QubitDensityMatrix::pure(const Eigen::Vector2cd& ket) {
    const Eigen::Vector2cd k = ket.normalized();
    return QubitDensityMatrix(k * k.adjoint());
}

QubitDensityMatrix QubitDensityMatrix::from_bloch(const Eigen::Vector3d& r) {
    const auto& p = pauli_basis();
    return QubitDensityMatrix(0.5 * (p[0] + r[0] * p[1] + r[1] * p[2] + r[2] * p[3]));
}

double QubitDensityMatrix::purity() const {
    return (rho_ * rho_).trace().real();
}

double TomographyCounts::frequency(Basis b) const {
    auto it = bases.find(b);
    if (it == bases.end()) throw InputError("tomography basis '" + to_string(b) + "' is missing");
    if (!(it->second.total > 0.0)) throw InputError("tomography basis '" + to_string(b) + "' has no trials");
    if (it->second.count < 0.0 || it->second.count > it->second.total)
        throw InputError("tomography basis '" + to_string(b) + "' has count outside [0, total]");
    return it->second.count / it->second.total;
}

TomographyCounts exact_tomography_counts(const Eigen::Matrix2cd& rho, double total) {
    TomographyCounts c;
    for (Basis b : kAllBases) {
        const Eigen::Vector2cd k = basis_ket(b);
        const double p = std::clamp((k.adjoint() * rho * k)(0, 0).real(), 0.0, 1.0);
        c.bases[b] = {p * total, total};
    }
    return c;
}

TomographyCounts sample_tomography_counts(const Eigen::Matrix2cd& rho, std::int64_t shots, Rng& rng) {
    TomographyCounts c;
    for (Basis b : kAllBases) {
        const Eigen::Vector2cd k = basis_ket(b);
        const double p = std::clamp((k.adjoint() * rho * k)(0, 0).real(), 0.0, 1.0);
        c.bases[b] = {static_cast<double>(rng.binomial(shots, p)), static_cast<double>(shots)};
    }
    return c;
}

LinearInversion linear_inversion(const TomographyCounts& counts) {
    LinearInversion li;
    li.bloch = {counts.frequency(Basis::plus) - counts.frequency(Basis::minus),
                counts.frequency(Basis::plus_i) - counts.frequency(Basis::minus_i),
                counts.frequency(Basis::zero) - counts.frequency(Basis::one)};
    const auto& p = pauli_basis();
    li.rho = 0.5 * (p[0] + li.bloch[0] * p[1] + li.bloch[1] * p[2] + li.bloch[2] * p[3]);
    li.unphysical = li.bloch.norm() > 1.0;
    return li;
}

Eigen::Matrix2cd project_to_physical(const Eigen::Matrix2cd& rho) {
    const Eigen::Matrix2cd h = 0.5 * (rho + rho.adjoint());
    const auto& p = pauli_basis();
    Eigen::Vector3d r;
    for (int k = 0; k < 3; ++k) r[k] = (h * p[k + 1]).trace().real() / h.trace().real();
    if (r.norm() > 1.0) r /= r.norm();
    return 0.5 * (p[0] + r[0] * p[1] + r[1] * p[2] + r[2] * p[3]);
}

double tomography_log_likelihood(const Eigen::Matrix2cd& rho, const TomographyCounts& counts) {
    double ll = 0.0;
    for (const auto& [b, c] : counts.bases) {
        const Eigen::Vector2cd k = basis_ket(b);
        const double p = std::clamp((k.adjoint() * rho * k)(0, 0).real(), 1e-300, 1.0);
        const double q = std::max(1.0 - p, 1e-300);
        if (c.count > 0.0) ll += c.count * std::log(p);
        if (c.total - c.count > 0.0) ll += (c.total - c.count) * std::log(q);
    }
    return ll;
}

MleResult mle_reconstruct(const TomographyCounts& counts) {
    double scale = 0.0;
    for (Basis b : kAllBases) {
        counts.frequency(b);
        scale += counts.bases.at(b).total;
    }
    const Eigen::Matrix2cd start = project_to_physical(linear_inversion(counts).rho);
    const double ll0 = tomography_log_likelihood(start, counts);

    // Normalizing by the trial count keeps the stopping rule independent of N.
    auto f = [&](const Eigen::VectorXd& t) { return -tomography_log_likelihood(rho_from_t(t), counts) / scale; };
    NelderMeadOptions opt;
    opt.initial_step = 0.05;
    MinimizeResult r = nelder_mead(f, t_from_rho(start), opt);
    int evals = r.evaluations;
    // One restart around the optimum guards against a collapsed simplex.
    opt.initial_step = 0.01;
    opt.max_evaluations = std::max(1000, opt.max_evaluations - evals);
    MinimizeResult r2 = nelder_mead(f, r.x, opt);
    evals += r2.evaluations;
    if (r2.value < r.value) r = r2;

    Eigen::Matrix2cd rho = rho_from_t(r.x);
    double ll = -r.value * scale;
    if (ll < ll0) {
        rho = start;
        ll = ll0;
    }
    rho = 0.5 * (rho + rho.adjoint());
    rho /= rho.trace().real();
    return {QubitDensityMatrix(rho), ll, ll0, evals};
}

double state_fidelity(const QubitDensityMatrix& a, const QubitDensityMatrix& b) {
    const Eigen::Matrix2cd& ra = a.matrix();
    const Eigen::Matrix2cd& rb = b.matrix();
    constexpr double pure_tol = 1e-12;
    if (a.purity() > 1.0 - pure_tol || b.purity() > 1.0 - pure_tol) {
        // For a pure state F = <psi|rho|psi> = Tr(rho_a rho_b).
        return std::clamp((ra * rb).trace().real(), 0.0, 1.0);
    }
    const Eigen::Matrix2cd s = sqrt_psd(ra);
    const Eigen::Matrix2cd inner = sqrt_psd(s * rb * s);
    const double f = inner.trace().real();
    return std::clamp(f * f, 0.0, 1.0);
}

Eigen::Vector3d bloch_vector(const QubitDensityMatrix& rho) {
    const auto& p = pauli_basis();
    Eigen::Vector3d r;
    for (int k = 0; k < 3; ++k) r[k] = (rho.matrix() * p[k + 1]).trace().real();
    return r;
}

ProcessMatrix::ProcessMatrix(const Eigen::Matrix4cd& chi, double trace_tolerance) : chi_(chi) {
    if (!chi.allFinite()) throw ValidationError("process matrix has non-finite entries");
    if ((chi - chi.adjoint()).cwiseAbs().maxCoeff() > 1e-10) throw ValidationError("process matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(0.5 * (chi + chi.adjoint()), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9) throw ValidationError("process matrix is not positive semidefinite");
    const auto& p = pauli_basis();
    Eigen::Matrix2cd sum = Eigen::Matrix2cd::Zero();
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) sum += chi(m, n) * p[n].adjoint() * p[m];
    trace_preservation_error = (sum - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
    if (trace_preservation_error > trace_tolerance)
        throw ValidationError("process matrix is not trace preserving");
}

Eigen::Matrix4cd unitary_chi(const Eigen::Matrix2cd& u) {
    const auto& p = pauli_basis();
    Eigen::Vector4cd c;
    for (int m = 0; m < 4; ++m) c[m] = (p[m].adjoint() * u).trace() / 2.0;
    return c * c.adjoint();
}

Eigen::Matrix2cd apply_process(const Eigen::Matrix4cd& chi, const Eigen::Matrix2cd& rho) {
    const auto& p = pauli_basis();
    Eigen::Matrix2cd out = Eigen::Matrix2cd::Zero();
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) out += chi(m, n) * p[m] * rho * p[n].adjoint();
    return out;
}

ProcessMatrix process_tomography(const QubitDensityMatrix& out_0, const QubitDensityMatrix& out_1,
                                 const QubitDensityMatrix& out_plus, const QubitDensityMatrix& out_plus_i) {
    const Eigen::Matrix2cd r1 = out_0.matrix();
    const Eigen::Matrix2cd r4 = out_1.matrix();
    const Eigen::Matrix2cd sum = r1 + r4;
    const Eigen::Matrix2cd r2 = out_plus.matrix() + I * out_plus_i.matrix() - (1.0 + I) * sum / 2.0;
    const Eigen::Matrix2cd r3 = out_plus.matrix() - I * out_plus_i.matrix() - (1.0 - I) * sum / 2.0;

    Eigen::Matrix4cd omega;
    omega << r1, r2, r3, r4;
    const auto& p = pauli_basis();
    Eigen::Matrix4cd lambda;
    lambda << p[0], p[1], p[1], -p[0];
    lambda *= 0.5;
    const Eigen::Matrix4cd chi_tilde = lambda * omega * lambda;

    // chi_tilde is expressed in (I, X, -iY, Z).
    const Eigen::Vector4cd d(1.0, 1.0, -I, 1.0);
    Eigen::Matrix4cd chi;
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) chi(m, n) = d[m] * chi_tilde(m, n) * std::conj(d[n]);

    const Eigen::Matrix4cd herm = 0.5 * (chi + chi.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(herm);
    Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
    const double total = ev.sum();
    if (!(total > 0.0)) throw ValidationError("process matrix has no positive weight");
    ev /= total;
    Eigen::Matrix4cd projected = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    projected = 0.5 * (projected + projected.adjoint());

    const double distance = Eigen::JacobiSVD<Eigen::Matrix4cd>(projected - chi).singularValues().sum();

    // Clipping can move the map off trace preservation by at most the
    // projection distance; that is surfaced rather than hidden.
    ProcessMatrix result(projected, 1e-8 + 2.0 * distance);
    result.projection_distance = distance;
    result.projection_warning = distance > 0.05;
    return result;
}

double process_fidelity(const ProcessMatrix& chi, const ProcessMatrix& chi_ideal) {
    const cplx f = (chi_ideal.matrix() * chi.matrix()).trace();
    return f.real();
}

nlohmann::json to_json(const Eigen::MatrixXcd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json to_json(const QubitDensityMatrix& rho) {
    const Eigen::Vector3d r = bloch_vector(rho);
    return {{"basis", {"0", "1"}},
            {"matrix", to_json(Eigen::MatrixXcd(rho.matrix()))},
            {"bloch", {r[0], r[1], r[2]}},
            {"purity", rho.purity()}};
}

nlohmann::json to_json(const ProcessMatrix& chi) {
    return {{"basis", {"I", "X", "Y", "Z"}},
            {"matrix", to_json(Eigen::MatrixXcd(chi.matrix()))},
            {"projection_distance", chi.projection_distance},
            {"projection_warning", chi.projection_warning}};
}

}  // namespace qpic
