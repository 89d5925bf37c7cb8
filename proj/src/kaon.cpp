#include "bellhep/kaon.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bellhep/quantum.hpp"

namespace bellhep::kaon {

namespace {

void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

/// Decay-and-phase factor g_X(t) = e^{-Gamma_X t/2} e^{-i m_X t}.
Complex mode_factor(double gamma, double m, double t) {
    return std::exp(Complex(-0.5 * gamma * t, -m * t));
}

/// Flavor content of the mass eigenstates with CP violation:
///   |K_S> = [(1+eps)|K0> - (1-eps)|K0bar>] / sqrt(2(1+|eps|^2))
///   |K_L> = [(1+eps)|K0> + (1-eps)|K0bar>] / sqrt(2(1+|eps|^2))
/// which reproduces <K_S|K_L> = 2 Re(eps)/(1+|eps|^2) and reduces to the
/// usual superpositions at eps = 0 (minus sign on K_S in K0bar).
struct FlavorProjections {
    Complex u; // <K0|K_S> = <K0|K_L>
    Complex v; // <K0bar|K_L> = -<K0bar|K_S>
};

FlavorProjections projections(Complex eps) {
    const double norm = std::sqrt(2.0 * (1.0 + std::norm(eps)));
    return {(1.0 + eps) / norm, (1.0 - eps) / norm};
}

Eigen::Matrix2cd flavor_projector(Flavor f) {
    Eigen::Matrix2cd p = Eigen::Matrix2cd::Zero();
    p(f == Flavor::K0 ? 0 : 1, f == Flavor::K0 ? 0 : 1) = 1.0;
    return p;
}

} // namespace

void KaonConstants::validate() const {
    require(std::isfinite(gamma_S) && std::isfinite(gamma_L) && std::isfinite(m_S) &&
                std::isfinite(m_L) && std::isfinite(epsilon.real()) &&
                std::isfinite(epsilon.imag()),
            "KaonConstants: values must be finite");
    require(gamma_S >= gamma_L && gamma_L >= 0.0,
            "KaonConstants: requires gamma_S >= gamma_L >= 0");
    require(std::abs(epsilon) < 1.0, "KaonConstants: |epsilon| must be < 1");
}

KaonConstants KaonConstants::physical() {
    KaonConstants c;
    c.gamma_S = 1.0;
    c.gamma_L = 1.7502e-3;
    c.m_S     = 0.0;
    c.m_L     = 0.4739;
    c.epsilon = Complex(1.6159e-3, 1.5339e-3);
    return c;
}

KaonConstants KaonConstants::cp_conserving() {
    KaonConstants c = physical();
    c.epsilon = Complex(0.0, 0.0);
    return c;
}

KaonConstants KaonConstants::no_decay() {
    KaonConstants c = cp_conserving();
    c.gamma_S = 0.0;
    c.gamma_L = 0.0;
    return c;
}

KaonConstants KaonConstants::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open constants file: " + path);
    nlohmann::json j;
    in >> j;
    KaonConstants c;
    c.gamma_S = j.at("gamma_S").get<double>();
    c.gamma_L = j.at("gamma_L").get<double>();
    c.m_S     = 0.0;
    c.m_L     = j.at("delta_m").get<double>();
    c.epsilon = Complex(j.at("epsilon_re").get<double>(), j.at("epsilon_im").get<double>());
    c.validate();
    return c;
}

std::string KaonConstants::to_json() const {
    nlohmann::json j;
    j["gamma_S"]    = gamma_S;
    j["gamma_L"]    = gamma_L;
    j["delta_m"]    = delta_m();
    j["epsilon_re"] = epsilon.real();
    j["epsilon_im"] = epsilon.imag();
    return j.dump(2);
}

Flavor opposite(Flavor f) { return f == Flavor::K0 ? Flavor::K0bar : Flavor::K0; }

std::string to_string(Flavor f) { return f == Flavor::K0 ? "K0" : "K0bar"; }

Flavor flavor_from_string(const std::string& name) {
    if (name == "K0") return Flavor::K0;
    if (name == "K0bar") return Flavor::K0bar;
    throw std::invalid_argument("unknown flavor: " + name);
}

SingleKaonAmplitude evolve_single(Flavor initial, double t, const KaonConstants& c) {
    require(t >= 0.0 && std::isfinite(t), "evolve_single: time must be >= 0");
    c.validate();
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    SingleKaonAmplitude amp;
    amp.time = t;
    amp.a_S  = inv_sqrt2 * mode_factor(c.gamma_S, c.m_S, t);
    amp.a_L  = inv_sqrt2 * mode_factor(c.gamma_L, c.m_L, t);
    if (initial == Flavor::K0bar) amp.a_S = -amp.a_S;
    return amp;
}

OscillationProbabilities oscillation_probabilities(Flavor initial, double t,
                                                   const KaonConstants& c) {
    require(t >= 0.0 && std::isfinite(t), "oscillation_probabilities: time must be >= 0");
    c.validate();
    const Complex g_S = mode_factor(c.gamma_S, c.m_S, t);
    const Complex g_L = mode_factor(c.gamma_L, c.m_L, t);
    // Same-flavor amplitude (g_S + g_L)/2 for either initial flavor; the
    // flavor-flip amplitude picks up the CP-violating projection ratio.
    const Complex same = 0.5 * (g_S + g_L);
    const auto [u, v]  = projections(c.epsilon);
    const Complex flip_ratio = initial == Flavor::K0 ? v / u : u / v;
    const Complex flip = flip_ratio * 0.5 * (g_L - g_S);

    OscillationProbabilities p;
    const double p_same = std::norm(same);
    const double p_flip = std::norm(flip);
    if (initial == Flavor::K0) {
        p.p_K0    = p_same;
        p.p_K0bar = p_flip;
    } else {
        p.p_K0bar = p_same;
        p.p_K0    = p_flip;
    }
    p.p_decayed = 1.0 - p_same - p_flip;
    return p;
}

double mass_eigenstate_overlap(Complex epsilon) {
    return 2.0 * epsilon.real() / (1.0 + std::norm(epsilon));
}

double semileptonic_asymmetry(Complex epsilon) {
    return 2.0 * epsilon.real() / (1.0 + std::norm(epsilon));
}

KaonPairState evolve_pair(double t_left, double t_right, const KaonConstants& c) {
    require(t_left >= 0.0 && t_right >= 0.0 && std::isfinite(t_left) && std::isfinite(t_right),
            "evolve_pair: times must be >= 0");
    c.validate();
    // Antisymmetric combination in the mass basis, (|SL> - |LS>)/sqrt(2),
    // each side evolved independently.
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const Complex gS_l = mode_factor(c.gamma_S, c.m_S, t_left);
    const Complex gL_l = mode_factor(c.gamma_L, c.m_L, t_left);
    const Complex gS_r = mode_factor(c.gamma_S, c.m_S, t_right);
    const Complex gL_r = mode_factor(c.gamma_L, c.m_L, t_right);
    KaonPairState pair;
    pair.t_left  = t_left;
    pair.t_right = t_right;
    pair.amplitudes(0, 1) = inv_sqrt2 * gS_l * gL_r;  // |K_S K_L>
    pair.amplitudes(1, 0) = -inv_sqrt2 * gL_l * gS_r; // |K_L K_S>
    return pair;
}

Eigen::Matrix2cd flavor_evolution_matrix(double t, const KaonConstants& c) {
    require(t >= 0.0 && std::isfinite(t), "flavor_evolution_matrix: time must be >= 0");
    const Complex g_S = mode_factor(c.gamma_S, c.m_S, t);
    const Complex g_L = mode_factor(c.gamma_L, c.m_L, t);
    const Complex h_plus  = 0.5 * (g_S + g_L);
    const Complex h_minus = 0.5 * (g_L - g_S);
    const auto [u, v] = projections(c.epsilon);
    Eigen::Matrix2cd m;
    m << h_plus, (u / v) * h_minus, (v / u) * h_minus, h_plus;
    return m;
}

Eigen::Matrix2cd yes_povm(const ActiveQuestion& q, const KaonConstants& c) {
    const Eigen::Matrix2cd u = flavor_evolution_matrix(q.time, c);
    return u.adjoint() * flavor_projector(q.target) * u;
}

namespace {

/// Shared setup for the joint tables: checks consistency and returns the
/// exact flavor-basis singlet together with both per-side POVM families.
struct JointContext {
    qm::DensityOperator rho;
    Eigen::Matrix2cd u_left, u_right;
};

JointContext joint_context(const KaonPairState& pair, const ActiveQuestion& left,
                           const ActiveQuestion& right, const KaonConstants& c) {
    require(left.time == pair.t_left && right.time == pair.t_right,
            "active_strangeness_joint: question times must match the pair evolution times");
    require(left.time >= 0.0 && right.time >= 0.0,
            "active_strangeness_joint: times must be >= 0");
    c.validate();
    return {qm::DensityOperator::from_state(qm::singlet()),
            flavor_evolution_matrix(pair.t_left, c),
            flavor_evolution_matrix(pair.t_right, c)};
}

double pair_expectation(const qm::DensityOperator& rho, const Eigen::Matrix2cd& a,
                        const Eigen::Matrix2cd& b) {
    return qm::expectation(qm::Observable(qm::tensor(Matrix(a), Matrix(b))), rho);
}

} // namespace

ActiveJointTable active_strangeness_joint(const KaonPairState& pair,
                                          const ActiveQuestion& left,
                                          const ActiveQuestion& right,
                                          const KaonConstants& c) {
    const JointContext ctx = joint_context(pair, left, right, c);
    const Eigen::Matrix2cd e_l = ctx.u_left.adjoint() * flavor_projector(left.target) * ctx.u_left;
    const Eigen::Matrix2cd e_r =
        ctx.u_right.adjoint() * flavor_projector(right.target) * ctx.u_right;
    const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();

    ActiveJointTable t;
    t.yes_yes = pair_expectation(ctx.rho, e_l, e_r);
    const double p_left_yes  = pair_expectation(ctx.rho, e_l, id);
    const double p_right_yes = pair_expectation(ctx.rho, id, e_r);
    t.yes_no = p_left_yes - t.yes_yes;
    t.no_yes = p_right_yes - t.yes_yes;
    t.no_no  = 1.0 - p_left_yes - p_right_yes + t.yes_yes;
    return t;
}

ThreeOutcomeJoint active_strangeness_joint_detailed(const KaonPairState& pair,
                                                    const ActiveQuestion& left,
                                                    const ActiveQuestion& right,
                                                    const KaonConstants& c) {
    const JointContext ctx = joint_context(pair, left, right, c);
    const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    auto povm_family = [&](const Eigen::Matrix2cd& u, Flavor target) {
        std::array<Eigen::Matrix2cd, 3> f;
        f[0] = u.adjoint() * flavor_projector(target) * u;
        f[1] = u.adjoint() * flavor_projector(opposite(target)) * u;
        f[2] = id - u.adjoint() * u;
        return f;
    };
    const auto fl = povm_family(ctx.u_left, left.target);
    const auto fr = povm_family(ctx.u_right, right.target);
    ThreeOutcomeJoint out;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) out.p[a][b] = pair_expectation(ctx.rho, fl[a], fr[b]);
    return out;
}

} // namespace bellhep::kaon
