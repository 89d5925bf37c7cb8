#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bellhep/common.hpp"
#include "bellhep/quantum.hpp"

namespace bellhep::hyperon {

/// A weakly decaying spin-s particle acting as its own imperfect
/// Stern-Gerlach apparatus. The decay asymmetry alpha = omega_+ - omega_-
/// is the analyzing power; omega1, omega2 set the two measurement
/// directions omega1 +- omega2 in Bloch space (decay frame).
struct HyperonSpecies {
    double spin  = 0.5;
    double alpha = 0.0;
    Vec3 omega1  = Vec3::Zero();
    Vec3 omega2  = Vec3::UnitZ();

    int dim() const { return static_cast<int>(2.0 * spin + 1.5); }

    /// omega1 . omega2 = 0, |omega1 +- omega2|^2 = s(2s+1), |alpha| <= 1;
    /// at s = 1/2 additionally omega1 = 0.
    void validate() const;

    /// Spin-1/2 species: omega1 = 0, omega2 = unit direction.
    static HyperonSpecies spin_half(double alpha, const Vec3& omega2_direction = Vec3::UnitZ());
};

/// Daughter momentum direction in the decay frame.
struct DecayDirection {
    double theta = 0.0; // [0, pi]
    double phi   = 0.0; // [0, 2 pi)

    Vec3 unit() const;
    static DecayDirection from_unit(const Vec3& n);
};

struct Event {
    DecayDirection n_lambda;
    DecayDirection n_lambdabar;
};

struct EventBatch {
    std::vector<Event> events;
    std::uint64_t seed   = 0;
    double alpha_product = 0.0;
};

struct WitnessReport {
    double witness_value  = 0.0;
    double standard_error = 0.0;
    bool entangled_verdict = false;
    /// Sample estimates of <sigma_i (x) sigma_i> scaled by the alpha
    /// product, i.e. the per-axis means of 9 n_i m_i.
    std::array<double, 3> axis_means{};
};

struct HyperonChshBound {
    double max_s  = 0.0;
    bool violated = false;
};

/// Kraus pair K_+- = sqrt(omega_+-) Pi_{omega1 +- omega2} with
/// omega_+- = (1 +- alpha)/2. The projectors are onto the spin-coherent
/// states along the two directions; at s = 1/2 they reduce to
/// (1 +- omega2.sigma)/2.
qm::KrausChannel kraus_from_species(const HyperonSpecies& h);

/// Solid-angle-normalized momentum density for a single decay,
/// (1/4pi){1 + (omega1 + alpha omega2(n)).s} at s = 1/2, with omega2
/// oriented along the momentum direction n.
double single_angular_pdf(const qm::DensityOperator& rho_spin, const HyperonSpecies& h,
                          const DecayDirection& dir);

/// Joint daughter-momentum density for the singlet-sourced pair,
/// (1/(4pi)^2)(1 - alpha_L alpha_Lbar n_L . n_Lbar).
double joint_angular_pdf(double alpha_L, double alpha_Lbar, const DecayDirection& n_L,
                         const DecayDirection& n_Lbar);

/// Samples the joint distribution: n_L uniform on the sphere, the
/// relative cosine from the closed-form inverse CDF of the linear
/// density, the azimuth about n_L uniform. Event i depends only on
/// (seed, i), so worker partitioning cannot change the batch.
EventBatch sample_events(double alpha_L, double alpha_Lbar, std::uint64_t count,
                         std::uint64_t seed, int workers = 1);

/// Moment estimator of the entanglement witness
/// (1/3)(1 + sum_i 9 <n_i m_i>). No division by the alpha product is
/// performed; a negative value beyond 3 standard errors certifies
/// entanglement, while separable sources stay >= 0.
WitnessReport witness_from_events(const EventBatch& batch);

/// CHSH reach of the imperfect spin measurements: max S = 2 sqrt(2) *
/// alpha_L alpha_Lbar, violated iff the product exceeds 1/sqrt(2).
/// Note the decay chooses its axis spontaneously (a passive measurement),
/// so even a violation here would not be a conclusive Bell test.
HyperonChshBound hyperon_chsh_bound(double alpha_L, double alpha_Lbar);

/// CSV persistence: "# seed=... alpha_product=... count=..." comment,
/// then theta_L,phi_L,theta_Lbar,phi_Lbar rows at 17 significant digits.
void write_events_csv(std::ostream& out, const EventBatch& batch);
EventBatch read_events_csv(std::istream& in);

} // namespace bellhep::hyperon
