#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <variant>
#include <vector>

#include "bellhep/common.hpp"
#include "bellhep/kaon.hpp"
#include "bellhep/quantum.hpp"

namespace bellhep::bell {

/// One measurement alternative: a spin direction (unit 3-vector) or an
/// active strangeness question (flavor + time).
struct MeasurementSetting {
    std::variant<Vec3, kaon::ActiveQuestion> value;

    static MeasurementSetting spin(const Vec3& direction);
    static MeasurementSetting question(kaon::Flavor target, double time);
    bool is_spin() const { return std::holds_alternative<Vec3>(value); }
};

/// Joint outcome probabilities P^{kl} over k,l in {+1,-1}.
struct JointOutcomeTable {
    double p_pp = 0.0;
    double p_pm = 0.0;
    double p_mp = 0.0;
    double p_mm = 0.0;
};

/// The four settings (n, m, n', m') of the S-function; all of one variant.
struct CHSHConfig {
    MeasurementSetting n, m, n_prime, m_prime;

    static CHSHConfig spins(const Vec3& n, const Vec3& m, const Vec3& n_prime,
                            const Vec3& m_prime);
    bool all_spin() const;
};

struct CHSHResult {
    double s_value = 0.0;
    CHSHConfig settings;
    double classical_bound = kChshClassicalBound;
    double quantum_bound   = kChshQuantumBound;
};

/// E = sum_{k,l} (k l) P^{kl}; table entries must be a probability
/// distribution.
double correlation_from_table(const JointOutcomeTable& table);

/// S = E1 - E2 + E3 + E4 with each E in [-1, 1].
double chsh_value(double e1, double e2, double e3, double e4);

/// S values of all 16 deterministic local strategies (one +-1 outcome
/// per setting per side).
std::array<double, 16> lhv_strategy_values(const CHSHConfig& config);

/// Maximum of S over deterministic local strategies: exactly 2.
double lhv_brute_force_bound(const CHSHConfig& config);

/// S for a two-qubit state at spin settings, via the four expectation
/// values Tr((a.sigma (x) b.sigma) rho).
CHSHResult quantum_chsh(const qm::DensityOperator& rho, const CHSHConfig& config);

/// The documented maximal configuration: Alice at 0 and 90 degrees, Bob
/// at 45 and 135 degrees in the x-z plane. Gives S = -2 sqrt(2) on the
/// singlet; callers report |S|.
CHSHConfig optimal_singlet_config();

/// Correlation E for two active strangeness questions on the pair,
/// with the outcome mapping yes -> +1, no -> -1 (decay counts as "no").
double kaon_correlation(const kaon::KaonConstants& c, const kaon::ActiveQuestion& left,
                        const kaon::ActiveQuestion& right);

/// Uniform time grid for the four measurement times.
struct TimeGrid {
    double t_min = 0.0;
    double t_max = 0.0;
    int points   = 40;
};

struct ScanOptions {
    int workers            = 1;
    bool refine            = true;
    int refine_iterations  = 200;
    double refine_tolerance = 1e-10;
    bool keep_table        = false;
    /// Flip one party's outcome labels: every E changes sign, so the scan
    /// explores the S < -2 side of the inequality instead of S > 2.
    bool flip_outcomes = false;
};

struct ScanRow {
    std::array<double, 4> times{};
    double s = 0.0;
};

/// Flavor question per setting, ordered (n, n', m, m').
using FlavorChoice = std::array<kaon::Flavor, 4>;

struct KaonScanResult {
    double max_s = 0.0;
    std::array<double, 4> argmax{}; // times for (n, n', m, m')
    double coarse_max_s = 0.0;
    std::array<double, 4> coarse_argmax{};
    TimeGrid grid;
    std::vector<ScanRow> table; // only filled when keep_table is set
};

/// Grid scan of S over all 4-tuples of question times, followed by a
/// derivative-free simplex refinement around the coarse optimum; reports
/// the largest S found. A violation would be S > 2 under the fixed
/// yes -> +1 mapping; the flipped mapping (flip_outcomes) negates every E
/// and thereby probes the S < -2 side. S touches -2 exactly where both
/// parties' alternatives collapse onto the perfectly anti-correlated
/// equal-time question, so the two sides are scanned separately rather
/// than folded into |S|. The reduction is ordered by grid index, so the
/// reported argmax is identical for any worker count; ties resolve to the
/// lexicographically smallest time tuple.
KaonScanResult kaon_chsh_scan(const kaon::KaonConstants& c, const FlavorChoice& flavors,
                              const TimeGrid& grid, const ScanOptions& options = {});

/// Streams the full scan table as CSV (t1,t2,t3,t4,S), lexicographic in
/// the grid indices, 17 significant digits.
void write_scan_csv(std::ostream& out, const kaon::KaonConstants& c,
                    const FlavorChoice& flavors, const TimeGrid& grid,
                    bool flip_outcomes = false);

struct NelderMeadOptions {
    int max_iterations = 200;
    double f_tolerance = 1e-10;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f          = 0.0;
    int iterations    = 0;
};

/// Deterministic Nelder-Mead maximization with box clamping.
NelderMeadResult nelder_mead_maximize(const std::function<double(const std::vector<double>&)>& f,
                                      const std::vector<double>& start,
                                      const std::vector<double>& step,
                                      const std::vector<double>& lower,
                                      const std::vector<double>& upper,
                                      const NelderMeadOptions& options = {});

} // namespace bellhep::bell
