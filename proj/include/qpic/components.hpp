#pragma once

// Physical building blocks of the chip-fibre-chip link and the assembly of
// the full circuit.
//
// Mode layout of the interconnect (eight modes, signal "s" and idler "i" on
// four rails). The top source feeds its demultiplexing MMI on the port whose
// bar output is "tb"; the bottom source likewise on "bb". After the waveguide
// crossing (tb <-> bt) the rails are used as
//
//     analyzer A (signal qubit):  tt = |0>, tb = |1>
//     PPC / fibre / analyzer B:   bt = |0>, bb = |1>
//
// Between the two PPCs the bt/bb slots carry the H/V fibre polarisations.

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qpic/fock.hpp"

namespace qpic {

struct SourceSettings {
    double theta_ss = 0.0;        // radians
    double pair_amplitude = 1.0;  // phenomenological SFWM strength, (0, 1]
    void validate() const;
};

enum class AnalyzerSide { a, b };

struct AnalyzerSettings {
    double theta_z = 0.0;  // radians
    double theta_y = 0.0;  // radians
    AnalyzerSide which = AnalyzerSide::a;
    void validate() const;
};

struct PpcModel {
    double extinction_db = std::numeric_limits<double>::infinity();
    double insertion_loss_db = 0.0;

    // 10^(-extinction/20); zero for an ideal converter.
    double crosstalk() const;
    void validate() const;
};

enum class PpcDirection { path_to_pol, pol_to_path };

struct FibreChannel {
    Eigen::Matrix2cd rotation = Eigen::Matrix2cd::Identity();
    double compensation_residual = 0.0;  // radians
    std::uint64_t residual_seed = 0;     // picks the residual rotation axis
    void validate() const;
};

struct WavelengthPlan {
    double pump_nm = 1555.5;
    double signal_nm = 1550.7;
    double idler_nm = 1560.3;
    void validate() const;  // |(pump - signal) - (idler - pump)| <= 0.2 nm
};

// The six analyzer projectors used for tomography and calibration.
enum class Basis { zero, one, plus, minus, plus_i, minus_i };

inline constexpr std::array<Basis, 6> kAllBases = {Basis::zero,  Basis::one,    Basis::plus,
                                                   Basis::minus, Basis::plus_i, Basis::minus_i};

std::string to_string(Basis b);
Basis basis_from_string(const std::string& label);
Eigen::Vector2cd basis_ket(Basis b);

// 2x2 SU(2) rotation exp(-i angle/2 n.sigma) about a (normalized) axis.
Eigen::Matrix2cd su2_rotation(const Eigen::Vector3d& axis, double angle);

// Balanced MMI (1/sqrt2)[[1, i], [i, 1]]; `reflectivity` r gives
// [[sqrt(1-r), i sqrt(r)], [i sqrt(r), sqrt(1-r)]].
Eigen::Matrix2cd mmi_transfer(double reflectivity = 0.5);
// diag(1, e^{i phase}): the heater sits on rail 1.
Eigen::Matrix2cd phase_transfer(double phase);

// (|1s 1i>_top |0 0>_bottom - e^{2 i theta_ss} |0 0>_top |1s 1i>_bottom)/sqrt2 on the
// four modes top.s, top.i, bottom.s, bottom.i.
PhotonicState sfwm_two_source_state(const SourceSettings& settings);

// [phase theta_z on rail 1, MMI, phase theta_y on rail 1, MMI].
std::vector<CircuitElement> analyzer_elements(const AnalyzerSettings& settings);
// Product of analyzer_elements, output rail x input rail.
Eigen::Matrix2cd analyzer_transfer(const AnalyzerSettings& settings);

// Qubit state detected at output rail 1 of the analyzer:
// cos(theta_y/2)|0> + e^{-i theta_z} sin(theta_y/2)|1>. Rail 0 detects the
// orthogonal state. theta_z = 0, theta_y = pi/2 therefore acts as X.H up to
// rail phases; theta_y = 0 routes |0> to rail 1 (the MZI swap).
Eigen::Vector2cd analyzer_projector(double theta_y, double theta_z);
Eigen::Vector3d projector_bloch(double theta_y, double theta_z);

struct AnalyzerAngles {
    double theta_y;
    double theta_z;
};
// Settings whose rail-1 projector is the given basis state, with theta_y in
// [0, pi] and theta_z in [0, 2 pi).
AnalyzerAngles analyzer_angles_for(Basis b);

// Crosstalk matrix [[c, e], [-e, c]] (c = sqrt(1-e^2)) scaled by the
// insertion-loss amplitude. The reverse (pol -> path) direction is its
// transpose, as for any reciprocal passive coupler.
CircuitElement ppc_element(const PpcModel& model, PpcDirection direction);

// Unit axis for the residual compensation error, drawn from `seed`.
Eigen::Vector3d residual_axis(std::uint64_t seed);

struct PlacedElement {
    CircuitElement element;
    std::vector<std::string> modes;
};

struct RailModes {
    std::string zero;
    std::string one;
};

struct Interconnect {
    ModeRegistry modes;
    PhotonicState source;                  // theta_ss = 0 pair state on the source slots
    std::vector<PlacedElement> elements;   // in propagation order
    RailModes signal_rails;                // analyzer A, signal wavelength
    RailModes idler_rails;                 // analyzer B, idler wavelength
};

struct InterconnectSettings {
    SourceSettings source;
    AnalyzerSettings analyzer_a{0.0, 0.0, AnalyzerSide::a};
    AnalyzerSettings analyzer_b{0.0, 0.0, AnalyzerSide::b};
    PpcModel ppc_out;
    FibreChannel fibre;
    PpcModel ppc_in;
    double demux_reflectivity = 0.5;
};

ModeRegistry interconnect_modes();
std::string mode_label(const std::string& rail, char wavelength);

Interconnect build_interconnect(const InterconnectSettings& settings);

// Propagates `input` (on the interconnect registry) through every element.
PhotonicState propagate(const Interconnect& circuit, const PhotonicState& input);
// Propagates the built-in pair source.
PhotonicState propagate(const Interconnect& circuit);

// Single photon split evenly over the two source waveguides, used as the
// bright-light probe for the classical fringe.
PhotonicState classical_probe(const Interconnect& circuit);

}  // namespace qpic
