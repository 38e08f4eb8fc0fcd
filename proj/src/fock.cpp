#include "qpic/fock.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

namespace qpic {

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

// All occupation vectors of `modes` modes holding `photons` photons, in
// lexicographic order.
void compositions(int modes, int photons, Occupation& current, std::vector<Occupation>& out) {
    const auto pos = current.size();
    if (static_cast<int>(pos) == modes - 1) {
        current.push_back(photons);
        out.push_back(current);
        current.pop_back();
        return;
    }
    for (int k = photons; k >= 0; --k) {
        current.push_back(k);
        compositions(modes, photons - k, current, out);
        current.pop_back();
    }
}

const std::vector<Occupation>& cached_compositions(int modes, int photons) {
    thread_local std::map<std::pair<int, int>, std::vector<Occupation>> cache;
    auto [it, inserted] = cache.try_emplace({modes, photons});
    if (inserted) {
        Occupation scratch;
        compositions(modes, photons, scratch, it->second);
    }
    return it->second;
}

std::vector<std::size_t> resolve(const ModeRegistry& modes, std::span<const std::string> labels) {
    std::vector<std::size_t> idx;
    idx.reserve(labels.size());
    for (const auto& l : labels) idx.push_back(modes.index(l));
    auto sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ConfigurationError("mode subset names the same mode twice");
    return idx;
}

// (I - A)^{1/2} for Hermitian PSD-ish I - A, eigenvalues clipped at zero.
Eigen::MatrixXcd defect_root(const Eigen::MatrixXcd& a) {
    const auto n = a.rows();
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Identity(n, n) - a;
    d = 0.5 * (d + d.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(d);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

std::string unique_label(const ModeRegistry& modes, const std::string& base) {
    if (!modes.contains(base)) return base;
    for (int k = 1;; ++k) {
        auto candidate = base + "#" + std::to_string(k);
        if (!modes.contains(candidate)) return candidate;
    }
}

PhotonicState apply_unitary(const PhotonicState& state, const Eigen::MatrixXcd& t,
                            const std::vector<std::size_t>& subset) {
    const int k = static_cast<int>(subset.size());
    PhotonicState::Amplitudes out;

    for (const auto& [occ, amp] : state.amplitudes()) {
        Occupation in_sub(k);
        int photons = 0;
        for (int j = 0; j < k; ++j) {
            in_sub[j] = occ[subset[j]];
            photons += in_sub[j];
        }
        if (photons == 0) {
            out[occ] += amp;
            continue;
        }

        // Column index list: input mode j repeated n_j times.
        std::vector<int> cols;
        double in_norm = 1.0;
        for (int j = 0; j < k; ++j) {
            for (int r = 0; r < in_sub[j]; ++r) cols.push_back(j);
            in_norm *= factorial(in_sub[j]);
        }

        Eigen::MatrixXcd sub(photons, photons);
        for (const auto& m : cached_compositions(k, photons)) {
            int row = 0;
            double out_norm = 1.0;
            for (int o = 0; o < k; ++o) {
                for (int r = 0; r < m[o]; ++r, ++row)
                    for (int c = 0; c < photons; ++c) sub(row, c) = t(o, cols[c]);
                out_norm *= factorial(m[o]);
            }
            const cplx a = amp * permanent(sub) / std::sqrt(in_norm * out_norm);
            if (a == cplx{}) continue;
            Occupation next = occ;
            for (int o = 0; o < k; ++o) next[subset[o]] = m[o];
            out[next] += a;
        }
    }

    std::erase_if(out, [](const auto& kv) { return std::abs(kv.second) < kPruneThreshold; });
    return PhotonicState(state.modes(), std::move(out));
}

}  // namespace

// ---------------------------------------------------------------------------
// ModeRegistry

ModeRegistry::ModeRegistry(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) throw ConfigurationError("mode registry needs at least one mode");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i].empty()) throw ConfigurationError("empty mode label");
        if (!lookup_.emplace(labels_[i], i).second)
            throw ConfigurationError("duplicate mode label '" + labels_[i] + "'");
    }
}

std::size_t ModeRegistry::index(std::string_view label) const {
    auto it = lookup_.find(std::string(label));
    if (it == lookup_.end()) throw ConfigurationError("unknown mode label '" + std::string(label) + "'");
    return it->second;
}

bool ModeRegistry::contains(std::string_view label) const {
    return lookup_.contains(std::string(label));
}

ModeRegistry ModeRegistry::extended(std::span<const std::string> extra) const {
    auto all = labels_;
    all.insert(all.end(), extra.begin(), extra.end());
    return ModeRegistry(std::move(all));
}

// ---------------------------------------------------------------------------
// PhotonicState

PhotonicState::PhotonicState(ModeRegistry modes, Amplitudes amplitudes)
    : modes_(std::move(modes)), amplitudes_(std::move(amplitudes)) {
    for (const auto& [occ, amp] : amplitudes_) {
        if (occ.size() != modes_.size())
            throw ConfigurationError("occupation vector length does not match the mode registry");
        if (std::any_of(occ.begin(), occ.end(), [](int n) { return n < 0; }))
            throw ValidationError("negative occupation number");
    }
}

PhotonicState PhotonicState::vacuum(ModeRegistry modes) {
    Occupation occ(modes.size(), 0);
    return PhotonicState(std::move(modes), {{occ, cplx{1.0, 0.0}}});
}

PhotonicState PhotonicState::from_creations(ModeRegistry modes, std::span<const std::string> labels) {
    Occupation occ(modes.size(), 0);
    for (const auto& l : labels) ++occ[modes.index(l)];
    return PhotonicState(std::move(modes), {{occ, cplx{1.0, 0.0}}});
}

cplx PhotonicState::amplitude(const Occupation& occupation) const {
    auto it = amplitudes_.find(occupation);
    return it == amplitudes_.end() ? cplx{} : it->second;
}

double PhotonicState::norm_squared() const {
    double s = 0.0;
    for (const auto& kv : amplitudes_) s += std::norm(kv.second);
    return s;
}

std::optional<int> PhotonicState::photon_number() const {
    std::optional<int> n;
    for (const auto& kv : amplitudes_) {
        const int total = std::accumulate(kv.first.begin(), kv.first.end(), 0);
        if (n && *n != total) return std::nullopt;
        n = total;
    }
    return n;
}

PhotonicState PhotonicState::normalized() const {
    const double norm = std::sqrt(norm_squared());
    if (norm == 0.0) throw ValidationError("cannot normalize a zero state");
    Amplitudes scaled = amplitudes_;
    for (auto& kv : scaled) kv.second /= norm;
    return PhotonicState(modes_, std::move(scaled));
}

cplx PhotonicState::inner(const PhotonicState& other) const {
    if (!(modes_ == other.modes_)) throw ConfigurationError("inner product across different mode registries");
    cplx s{};
    for (const auto& [occ, amp] : amplitudes_) s += std::conj(amp) * other.amplitude(occ);
    return s;
}

// ---------------------------------------------------------------------------
// CircuitElement

bool is_unitary(const Eigen::MatrixXcd& m, double tol) {
    if (m.rows() != m.cols()) return false;
    const Eigen::MatrixXcd d = m.adjoint() * m - Eigen::MatrixXcd::Identity(m.rows(), m.cols());
    return d.cwiseAbs().maxCoeff() < tol;
}

CircuitElement::CircuitElement(std::string name, Eigen::MatrixXcd transfer, bool lossy)
    : name_(std::move(name)), transfer_(std::move(transfer)), lossy_(lossy) {
    if (transfer_.rows() == 0 || transfer_.rows() != transfer_.cols())
        throw ConfigurationError("element '" + name_ + "' needs a square, non-empty transfer matrix");
    if (!lossy_) {
        if (!is_unitary(transfer_))
            throw ValidationError("element '" + name_ + "' is flagged lossless but is not unitary");
    } else {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(transfer_);
        if (svd.singularValues().maxCoeff() > 1.0 + 1e-10)
            throw ValidationError("lossy element '" + name_ + "' has a singular value above 1");
    }
}

cplx permanent(const Eigen::MatrixXcd& m) {
    const auto n = m.rows();
    if (n != m.cols()) throw ConfigurationError("permanent of a non-square matrix");
    if (n == 0) return {1.0, 0.0};
    if (n == 1) return m(0, 0);
    if (n == 2) return m(0, 0) * m(1, 1) + m(0, 1) * m(1, 0);

    // Ryser with Gray-code subset enumeration.
    Eigen::VectorXcd row_sums = Eigen::VectorXcd::Zero(n);
    cplx total{};
    const std::uint64_t subsets = std::uint64_t{1} << n;
    std::uint64_t gray_prev = 0;
    for (std::uint64_t k = 1; k < subsets; ++k) {
        const std::uint64_t gray = k ^ (k >> 1);
        const std::uint64_t changed = gray ^ gray_prev;
        const int col = std::countr_zero(changed);
        if (gray & changed)
            row_sums += m.col(col);
        else
            row_sums -= m.col(col);
        gray_prev = gray;
        cplx prod{1.0, 0.0};
        for (Eigen::Index r = 0; r < n; ++r) prod *= row_sums(r);
        const int size = std::popcount(gray);
        total += ((n - size) % 2 == 0) ? prod : -prod;
    }
    return total;
}

PhotonicState apply_element(const PhotonicState& state, const CircuitElement& element,
                            std::span<const std::string> mode_subset) {
    if (static_cast<Eigen::Index>(mode_subset.size()) != element.dimension())
        throw ConfigurationError("element '" + element.name() + "' has dimension " +
                                 std::to_string(element.dimension()) + " but was given " +
                                 std::to_string(mode_subset.size()) + " modes");
    auto subset = resolve(state.modes(), mode_subset);

    if (!element.lossy()) return apply_unitary(state, element.transfer(), subset);

    // Unitary dilation [[T, (I-TT^dag)^1/2], [(I-T^dag T)^1/2, -T^dag]] with the
    // extra inputs in vacuum.
    const auto& t = element.transfer();
    const auto n = t.rows();
    Eigen::MatrixXcd u(2 * n, 2 * n);
    u.topLeftCorner(n, n) = t;
    u.topRightCorner(n, n) = defect_root(t * t.adjoint());
    u.bottomLeftCorner(n, n) = defect_root(t.adjoint() * t);
    u.bottomRightCorner(n, n) = -t.adjoint();

    std::vector<std::string> loss_labels;
    ModeRegistry grown = state.modes();
    for (Eigen::Index k = 0; k < n; ++k) {
        auto label = unique_label(grown, "loss." + element.name() + "." + std::to_string(k));
        grown = grown.extended(std::span<const std::string>(&label, 1));
        loss_labels.push_back(label);
    }
    PhotonicState::Amplitudes padded;
    for (const auto& [occ, amp] : state.amplitudes()) {
        Occupation o = occ;
        o.resize(grown.size(), 0);
        padded.emplace(std::move(o), amp);
    }
    PhotonicState extended(grown, std::move(padded));
    for (const auto& l : loss_labels) subset.push_back(grown.index(l));
    return apply_unitary(extended, u, subset);
}

// ---------------------------------------------------------------------------
// Post-selection

PostSelectionPattern::PostSelectionPattern(std::vector<Constraint> constraints)
    : constraints_(std::move(constraints)) {}

PostSelectionPattern& PostSelectionPattern::exactly(std::vector<std::string> modes, int count) {
    constraints_.push_back({std::move(modes), Kind::exactly, count});
    return *this;
}

PostSelectionPattern& PostSelectionPattern::at_least(std::vector<std::string> modes, int count) {
    constraints_.push_back({std::move(modes), Kind::at_least, count});
    return *this;
}

PostSelectionPattern& PostSelectionPattern::unconstrained(std::vector<std::string> modes) {
    constraints_.push_back({std::move(modes), Kind::unconstrained, 0});
    return *this;
}

std::string PostSelectionPattern::describe() const {
    std::ostringstream os;
    for (std::size_t c = 0; c < constraints_.size(); ++c) {
        const auto& con = constraints_[c];
        if (c) os << " AND ";
        os << '{';
        for (std::size_t i = 0; i < con.modes.size(); ++i) os << (i ? "," : "") << con.modes[i];
        os << '}';
        switch (con.kind) {
            case Kind::exactly: os << "==" << con.count; break;
            case Kind::at_least: os << ">=" << con.count; break;
            case Kind::unconstrained: os << ":any"; break;
        }
    }
    return os.str();
}

EmptyPostSelection::EmptyPostSelection(PostSelectionPattern pattern)
    : Error("post-selection " + pattern.describe() + " has zero probability"), pattern_(std::move(pattern)) {}

PostSelected post_select(const PhotonicState& state, const PostSelectionPattern& pattern) {
    if (pattern.constraints().empty()) throw ConfigurationError("post-selection pattern names no modes");

    struct Resolved {
        std::vector<std::size_t> idx;
        PostSelectionPattern::Kind kind;
        int count;
    };
    std::vector<Resolved> resolved;
    for (const auto& c : pattern.constraints()) {
        if (c.modes.empty()) throw ConfigurationError("post-selection constraint names no modes");
        resolved.push_back({resolve(state.modes(), c.modes), c.kind, c.count});
    }

    const double total = state.norm_squared();
    PhotonicState::Amplitudes kept;
    double kept_norm = 0.0;
    for (const auto& [occ, amp] : state.amplitudes()) {
        bool ok = true;
        for (const auto& r : resolved) {
            int n = 0;
            for (auto i : r.idx) n += occ[i];
            if (r.kind == PostSelectionPattern::Kind::exactly && n != r.count) ok = false;
            if (r.kind == PostSelectionPattern::Kind::at_least && n < r.count) ok = false;
            if (!ok) break;
        }
        if (ok) {
            kept.emplace(occ, amp);
            kept_norm += std::norm(amp);
        }
    }
    if (kept.empty() || kept_norm <= 0.0) throw EmptyPostSelection(pattern);

    const double scale = 1.0 / std::sqrt(kept_norm);
    for (auto& kv : kept) kv.second *= scale;
    return {PhotonicState(state.modes(), std::move(kept)), kept_norm / total};
}

Eigen::Matrix4cd reduce_to_two_qubits(const PhotonicState& state, const RailPair& signal_rails,
                                      const RailPair& idler_rails) {
    const auto& modes = state.modes();
    const std::size_t s0 = modes.index(signal_rails.first), s1 = modes.index(signal_rails.second);
    const std::size_t i0 = modes.index(idler_rails.first), i1 = modes.index(idler_rails.second);
    if (s0 == s1 || i0 == i1 || s0 == i0 || s0 == i1 || s1 == i0 || s1 == i1)
        throw ConfigurationError("rail pairs must name four distinct modes");

    // Group by the occupation of every other mode; each group is a pure
    // two-qubit ket and the reduced state is their incoherent sum.
    std::map<Occupation, Eigen::Vector4cd> env;
    double leaked = 0.0;
    for (const auto& [occ, amp] : state.amplitudes()) {
        const bool sig_ok = occ[s0] + occ[s1] == 1;
        const bool idl_ok = occ[i0] + occ[i1] == 1;
        if (!sig_ok || !idl_ok) {
            leaked += std::norm(amp);
            continue;
        }
        Occupation rest = occ;
        rest[s0] = rest[s1] = rest[i0] = rest[i1] = 0;
        auto [it, inserted] = env.try_emplace(rest, Eigen::Vector4cd::Zero());
        const int s = occ[s1] == 1 ? 1 : 0;
        const int i = occ[i1] == 1 ? 1 : 0;
        it->second(2 * s + i) += amp;
    }
    if (leaked > 1e-9)
        throw ContractViolation("photon-number leakage outside the dual-rail encoding: " + std::to_string(leaked));

    Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
    for (const auto& kv : env) rho += kv.second * kv.second.adjoint();
    const double tr = rho.trace().real();
    if (tr <= 0.0) throw ContractViolation("no amplitude inside the dual-rail encoding");
    rho /= tr;
    return 0.5 * (rho + rho.adjoint());
}

}  // namespace qpic
