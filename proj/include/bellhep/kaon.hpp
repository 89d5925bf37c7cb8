#pragma once

#include <string>

#include "bellhep/common.hpp"

namespace bellhep::kaon {

/// Physical parameter record for the neutral-kaon system. Units are
/// natural (hbar = 1); the bundled presets measure time in units of the
/// short-lived lifetime, i.e. gamma_S = 1. Only the mass difference
/// m_L - m_S is observable.
struct KaonConstants {
    double gamma_S = 0.0;
    double gamma_L = 0.0;
    double m_S     = 0.0;
    double m_L     = 0.0;
    Complex epsilon{0.0, 0.0};

    double delta_m() const { return m_L - m_S; }

    /// gamma_S >= gamma_L >= 0 and finite; the no-decay configuration
    /// (both widths zero) is admitted for oscillation-only diagnostics.
    void validate() const;

    /// Standard particle-data values in units of 1/tau_S (external
    /// input, not derived here): width ratio ~571, delta_m/gamma_S ~0.47,
    /// |epsilon| ~2.2e-3 at ~43.5 degrees.
    static KaonConstants physical();
    /// Same widths and mass splitting with epsilon = 0.
    static KaonConstants cp_conserving();
    /// Pure oscillation: gamma_S = gamma_L = 0.
    static KaonConstants no_decay();

    /// Reads {gamma_S, gamma_L, delta_m, epsilon_re, epsilon_im}.
    static KaonConstants from_json_file(const std::string& path);
    std::string to_json() const;
};

/// Strangeness eigenstates; K0 carries S = +1, K0bar S = -1.
enum class Flavor { K0, K0bar };

Flavor opposite(Flavor f);
std::string to_string(Flavor f);
Flavor flavor_from_string(const std::string& name);

/// Coefficients of |K_S>, |K_L> for a single evolved kaon.
struct SingleKaonAmplitude {
    Complex a_S{0.0, 0.0};
    Complex a_L{0.0, 0.0};
    double time = 0.0;

    double squared_norm() const { return std::norm(a_S) + std::norm(a_L); }
};

/// Two-kaon amplitude grid over (mass basis left) x (mass basis right);
/// row index is the left-side eigenstate (0 = S, 1 = L).
struct KaonPairState {
    Eigen::Matrix2cd amplitudes = Eigen::Matrix2cd::Zero();
    double t_left  = 0.0;
    double t_right = 0.0;

    double squared_norm() const { return amplitudes.cwiseAbs2().sum(); }
};

/// "Are you, at this time, in the target flavor state or not?" The "no"
/// answer deliberately aggregates the opposite flavor and decay before
/// the measurement time; pairs are never post-selected on survival.
struct ActiveQuestion {
    Flavor target = Flavor::K0bar;
    double time   = 0.0;
};

struct OscillationProbabilities {
    double p_K0      = 0.0;
    double p_K0bar   = 0.0;
    double p_decayed = 0.0;
};

/// Joint probabilities over {yes, no} x {yes, no}; sums to 1.
struct ActiveJointTable {
    double yes_yes = 0.0;
    double yes_no  = 0.0;
    double no_yes  = 0.0;
    double no_no   = 0.0;

    double sum() const { return yes_yes + yes_no + no_yes + no_no; }
};

/// Diagnostic three-outcome split per side: target flavor seen, the
/// other flavor seen, or decayed before the question time.
enum class Outcome { TargetFlavor = 0, OtherFlavor = 1, Decayed = 2 };

struct ThreeOutcomeJoint {
    double p[3][3] = {};
    double at(Outcome left, Outcome right) const {
        return p[static_cast<int>(left)][static_cast<int>(right)];
    }
};

/// Mass-basis evolution of a flavor eigenstate: for K0 the coefficients
/// are e^{-gamma t/2} e^{-i m t}/sqrt(2) for each eigenstate; for K0bar
/// the K_S coefficient carries the minus sign.
SingleKaonAmplitude evolve_single(Flavor initial, double t, const KaonConstants& c);

/// Probabilities of finding the evolved kaon in each flavor (or decayed)
/// at time t. CP violation enters through the flavor projections of the
/// mass eigenstates; the three entries sum to 1 exactly.
OscillationProbabilities oscillation_probabilities(Flavor initial, double t,
                                                   const KaonConstants& c);

/// <K_S|K_L> = 2 Re(eps) / (1 + |eps|^2).
double mass_eigenstate_overlap(Complex epsilon);

/// Rate asymmetry between l+ and l- semileptonic channels; the standard
/// identification 2 Re(eps)/(1 + |eps|^2), adopted here as a definition.
double semileptonic_asymmetry(Complex epsilon);

/// Antisymmetric pair evolved to (t_left, t_right), each side by the
/// single-kaon law in the mass basis.
KaonPairState evolve_pair(double t_left, double t_right, const KaonConstants& c);

/// Joint yes/no table for two active strangeness questions on the pair.
/// Question times must equal the pair's evolution times.
ActiveJointTable active_strangeness_joint(const KaonPairState& pair,
                                          const ActiveQuestion& left,
                                          const ActiveQuestion& right,
                                          const KaonConstants& c);

/// Three-outcome diagnostic variant of the joint table.
ThreeOutcomeJoint active_strangeness_joint_detailed(const KaonPairState& pair,
                                                    const ActiveQuestion& left,
                                                    const ActiveQuestion& right,
                                                    const KaonConstants& c);

/// Single-kaon evolution operator in the (orthonormal) flavor basis,
/// row/column order {K0, K0bar}. Non-unitary: norm loss is decay.
Eigen::Matrix2cd flavor_evolution_matrix(double t, const KaonConstants& c);

/// POVM element for "survived to the question time and found in the
/// target flavor": U(t)^dag |f><f| U(t). Bounded by the identity.
Eigen::Matrix2cd yes_povm(const ActiveQuestion& q, const KaonConstants& c);

} // namespace bellhep::kaon
