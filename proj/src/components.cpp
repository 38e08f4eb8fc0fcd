#include "qpic/components.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace qpic {

namespace {

using std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

const std::array<std::string, 4> kRails = {"tt", "tb", "bt", "bb"};

}  // namespace

void SourceSettings::validate() const {
    if (!std::isfinite(theta_ss)) throw ValidationError("theta_ss must be finite");
    if (!(pair_amplitude > 0.0 && pair_amplitude <= 1.0))
        throw ValidationError("pair_amplitude must lie in (0, 1]");
}

void AnalyzerSettings::validate() const {
    if (!std::isfinite(theta_z) || !std::isfinite(theta_y)) throw ValidationError("analyzer angles must be finite");
}

double PpcModel::crosstalk() const {
    if (std::isinf(extinction_db)) return 0.0;
    return std::pow(10.0, -extinction_db / 20.0);
}

void PpcModel::validate() const {
    if (std::isnan(extinction_db) || extinction_db < 0.0) throw ValidationError("PPC extinction_db must be >= 0");
    if (!std::isfinite(insertion_loss_db) || insertion_loss_db < 0.0)
        throw ValidationError("PPC insertion_loss_db must be >= 0");
}

void FibreChannel::validate() const {
    if (!is_unitary(rotation)) throw ValidationError("fibre rotation is not unitary");
    if (!std::isfinite(compensation_residual) || compensation_residual < 0.0)
        throw ValidationError("compensation_residual must be >= 0");
}

void WavelengthPlan::validate() const {
    const double mismatch = (pump_nm - signal_nm) - (idler_nm - pump_nm);
    if (std::abs(mismatch) > 0.2)
        throw ValidationError("wavelength plan violates SFWM energy conservation by " + std::to_string(mismatch) +
                              " nm");
}

std::string to_string(Basis b) {
    switch (b) {
        case Basis::zero: return "0";
        case Basis::one: return "1";
        case Basis::plus: return "+";
        case Basis::minus: return "-";
        case Basis::plus_i: return "+i";
        case Basis::minus_i: return "-i";
    }
    return "?";
}

Basis basis_from_string(const std::string& label) {
    for (auto b : kAllBases)
        if (to_string(b) == label) return b;
    throw InputError("unknown basis label '" + label + "'");
}

Eigen::Vector2cd basis_ket(Basis b) {
    const double s = 1.0 / std::sqrt(2.0);
    switch (b) {
        case Basis::zero: return {1.0, 0.0};
        case Basis::one: return {0.0, 1.0};
        case Basis::plus: return {s, s};
        case Basis::minus: return {s, -s};
        case Basis::plus_i: return {s, kI * s};
        case Basis::minus_i: return {s, -kI * s};
    }
    return {};
}

Eigen::Matrix2cd su2_rotation(const Eigen::Vector3d& axis, double angle) {
    const double n = axis.norm();
    if (n == 0.0) {
        if (angle == 0.0) return Eigen::Matrix2cd::Identity();
        throw ValidationError("rotation axis must be non-zero");
    }
    const Eigen::Vector3d u = axis / n;
    const double c = std::cos(angle / 2.0), s = std::sin(angle / 2.0);
    Eigen::Matrix2cd r;
    r << cplx{c, -s * u.z()}, cplx{-s * u.y(), -s * u.x()},
         cplx{s * u.y(), -s * u.x()}, cplx{c, s * u.z()};
    return r;
}

Eigen::Matrix2cd mmi_transfer(double reflectivity) {
    if (!(reflectivity >= 0.0 && reflectivity <= 1.0)) throw ValidationError("MMI reflectivity must lie in [0, 1]");
    const double t = std::sqrt(1.0 - reflectivity), r = std::sqrt(reflectivity);
    Eigen::Matrix2cd m;
    m << t, kI * r, kI * r, t;
    return m;
}

Eigen::Matrix2cd phase_transfer(double phase) {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
    m(1, 1) = std::polar(1.0, phase);
    return m;
}

PhotonicState sfwm_two_source_state(const SourceSettings& settings) {
    settings.validate();
    ModeRegistry modes({"top.s", "top.i", "bottom.s", "bottom.i"});
    const double h = 1.0 / std::sqrt(2.0);
    PhotonicState::Amplitudes amps;
    amps[{1, 1, 0, 0}] = h;
    amps[{0, 0, 1, 1}] = -h * std::polar(1.0, 2.0 * settings.theta_ss);
    return PhotonicState(std::move(modes), std::move(amps));
}

std::vector<CircuitElement> analyzer_elements(const AnalyzerSettings& settings) {
    settings.validate();
    const std::string tag = settings.which == AnalyzerSide::a ? "A" : "B";
    return {
        CircuitElement(tag + ".theta_z", phase_transfer(settings.theta_z)),
        CircuitElement(tag + ".mmi1", mmi_transfer()),
        CircuitElement(tag + ".theta_y", phase_transfer(settings.theta_y)),
        CircuitElement(tag + ".mmi2", mmi_transfer()),
    };
}

Eigen::Matrix2cd analyzer_transfer(const AnalyzerSettings& settings) {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
    for (const auto& e : analyzer_elements(settings)) m = e.transfer() * m;
    return m;
}

Eigen::Vector2cd analyzer_projector(double theta_y, double theta_z) {
    return {cplx{std::cos(theta_y / 2.0), 0.0}, std::polar(std::sin(theta_y / 2.0), -theta_z)};
}

Eigen::Vector3d projector_bloch(double theta_y, double theta_z) {
    const double s = std::sin(theta_y);
    return {s * std::cos(theta_z), -s * std::sin(theta_z), std::cos(theta_y)};
}

AnalyzerAngles analyzer_angles_for(Basis b) {
    switch (b) {
        case Basis::zero: return {0.0, 0.0};
        case Basis::one: return {pi, 0.0};
        case Basis::plus: return {pi / 2.0, 0.0};
        case Basis::minus: return {pi / 2.0, pi};
        case Basis::plus_i: return {pi / 2.0, 3.0 * pi / 2.0};
        case Basis::minus_i: return {pi / 2.0, pi / 2.0};
    }
    return {0.0, 0.0};
}

CircuitElement ppc_element(const PpcModel& model, PpcDirection direction) {
    model.validate();
    const double e = model.crosstalk();
    const double c = std::sqrt(1.0 - e * e);
    Eigen::Matrix2cd m;
    m << c, e, -e, c;  // e^{i pi} on the lower cross term
    if (direction == PpcDirection::pol_to_path) m.transposeInPlace();
    const double loss = std::pow(10.0, -model.insertion_loss_db / 20.0);
    const bool lossy = model.insertion_loss_db > 0.0;
    const std::string name = direction == PpcDirection::path_to_pol ? "ppc.path_to_pol" : "ppc.pol_to_path";
    return CircuitElement(name, loss * m, lossy);
}

Eigen::Vector3d residual_axis(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    // 53-bit uniforms straight from the engine keep this platform independent.
    auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    const double z = 2.0 * uniform() - 1.0;
    const double phi = 2.0 * pi * uniform();
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
}

std::string mode_label(const std::string& rail, char wavelength) {
    return rail + "." + wavelength;
}

ModeRegistry interconnect_modes() {
    std::vector<std::string> labels;
    for (const auto& r : kRails)
        for (char w : {'s', 'i'}) labels.push_back(mode_label(r, w));
    return ModeRegistry(std::move(labels));
}

Interconnect build_interconnect(const InterconnectSettings& settings) {
    settings.source.validate();
    settings.ppc_out.validate();
    settings.ppc_in.validate();
    settings.fibre.validate();
    if (settings.analyzer_a.which != AnalyzerSide::a || settings.analyzer_b.which != AnalyzerSide::b)
        throw ConfigurationError("analyzer settings are attached to the wrong chip");

    Interconnect c;
    c.modes = interconnect_modes();
    c.signal_rails = {mode_label("tt", 's'), mode_label("tb", 's')};
    c.idler_rails = {mode_label("bt", 'i'), mode_label("bb", 'i')};

    // theta_ss = 0 pair state; the heater is an explicit element below.
    {
        const double h = 1.0 / std::sqrt(2.0);
        Occupation top(c.modes.size(), 0), bottom(c.modes.size(), 0);
        top[c.modes.index("tb.s")] = top[c.modes.index("tb.i")] = 1;
        bottom[c.modes.index("bb.s")] = bottom[c.modes.index("bb.i")] = 1;
        c.source = PhotonicState(c.modes, {{top, cplx{h, 0.0}}, {bottom, cplx{-h, 0.0}}});
    }

    auto place = [&](const CircuitElement& e, const std::string& r0, const std::string& r1) {
        for (char w : {'s', 'i'}) c.elements.push_back({e, {mode_label(r0, w), mode_label(r1, w)}});
    };

    // theta_ss acts on the bottom waveguide, before demultiplexing: one factor
    // e^{i theta_ss} per photon.
    place(CircuitElement("theta_ss", phase_transfer(settings.source.theta_ss)), "tb", "bb");
    const CircuitElement demux("demux", mmi_transfer(settings.demux_reflectivity));
    place(demux, "tt", "tb");
    place(demux, "bt", "bb");
    Eigen::Matrix2cd swap;
    swap << 0, 1, 1, 0;
    place(CircuitElement("crossing", swap), "tb", "bt");

    for (const auto& e : analyzer_elements(settings.analyzer_a)) place(e, "tt", "tb");

    place(ppc_element(settings.ppc_out, PpcDirection::path_to_pol), "bt", "bb");
    place(CircuitElement("fibre", settings.fibre.rotation), "bt", "bb");
    const Eigen::Matrix2cd residual =
        su2_rotation(residual_axis(settings.fibre.residual_seed), settings.fibre.compensation_residual);
    place(CircuitElement("compensation", residual * settings.fibre.rotation.adjoint()), "bt", "bb");
    place(ppc_element(settings.ppc_in, PpcDirection::pol_to_path), "bt", "bb");

    for (const auto& e : analyzer_elements(settings.analyzer_b)) place(e, "bt", "bb");

    for (const auto& pe : c.elements)
        for (const auto& m : pe.modes)
            if (!c.modes.contains(m)) throw ConfigurationError("element '" + pe.element.name() + "' names unknown mode " + m);
    return c;
}

PhotonicState propagate(const Interconnect& circuit, const PhotonicState& input) {
    if (!(input.modes() == circuit.modes)) throw ConfigurationError("input state is not on the interconnect registry");
    PhotonicState s = input;
    for (const auto& pe : circuit.elements) s = apply_element(s, pe.element, pe.modes);
    return s;
}

PhotonicState propagate(const Interconnect& circuit) {
    return propagate(circuit, circuit.source);
}

PhotonicState classical_probe(const Interconnect& circuit) {
    const double h = 1.0 / std::sqrt(2.0);
    Occupation top(circuit.modes.size(), 0), bottom(circuit.modes.size(), 0);
    top[circuit.modes.index("tb.s")] = 1;
    bottom[circuit.modes.index("bb.s")] = 1;
    return PhotonicState(circuit.modes, {{top, cplx{h, 0.0}}, {bottom, cplx{h, 0.0}}});
}

}  // namespace qpic
