#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "bellhep/common.hpp"

namespace bellhep::qkd {

struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Intercept-resend attack on the particle flying to Bob: Eve measures
/// along a direction (fixed, or fresh uniform per pair) and forwards the
/// eigenstate of her outcome.
struct EavesdropperModel {
    enum class Kind { None, InterceptResend };
    enum class DirectionStrategy { Fixed, UniformRandom };

    Kind kind = Kind::None;
    DirectionStrategy strategy = DirectionStrategy::UniformRandom;
    Vec3 fixed_direction = Vec3::UnitZ();

    static EavesdropperModel none();
    static EavesdropperModel intercept_fixed(const Vec3& direction);
    static EavesdropperModel intercept_uniform();
};

/// Three observables per party, two of them shared. The default planar
/// choice is Alice {0, 45, 90} and Bob {45, 90, 135} degrees; matched
/// pairs (exact vector equality) become key rounds, the chsh_pairs
/// (n,m), (n,m'), (n',m), (n',m') feed the CHSH estimate.
struct ProtocolConfig {
    std::uint64_t pair_count = 0;
    std::array<Vec3, 3> alice_settings;
    std::array<Vec3, 3> bob_settings;
    std::uint64_t seed = 42;
    EavesdropperModel eve;
    int workers = 1;
    std::array<std::array<int, 2>, 4> chsh_pairs{{{0, 0}, {0, 2}, {2, 0}, {2, 2}}};

    void validate() const;
    std::vector<std::array<int, 2>> matched_pairs() const;

    static ProtocolConfig defaults(std::uint64_t pair_count, std::uint64_t seed = 42,
                                   const EavesdropperModel& eve = EavesdropperModel::none());
};

struct Round {
    std::uint8_t alice_choice = 0;
    std::uint8_t bob_choice   = 0;
    std::int8_t alice_outcome = 0; // +-1
    std::int8_t bob_outcome   = 0; // +-1
};

struct SessionTranscript {
    std::vector<Round> rounds;
};

struct SecurityReport {
    double s_estimate = 0.0;
    double s_stderr   = 0.0;
    double qber       = 0.0;
    std::uint64_t sifted_length = 0;
    bool secure = false;
};

struct SiftResult {
    std::vector<std::uint8_t> alice_key;
    std::vector<std::uint8_t> bob_key;
    std::vector<std::uint64_t> matched_indices;
};

struct SessionResult {
    SessionTranscript transcript;
    std::vector<std::uint8_t> alice_key;
    std::vector<std::uint8_t> bob_key;
    SecurityReport report;
};

/// Runs a full session: independent uniform setting choices per pair,
/// outcomes from the singlet law P(k,l|a,b) = (1 - k l a.b)/4 modified by
/// the eavesdropper, sifting, CHSH estimate, verdict. Round i draws only
/// from substream (seed, i), so transcripts are worker-count independent
/// and bit-exact reproducible.
SessionResult run_session(const ProtocolConfig& config);

/// Sample-mean CHSH estimate from the designated mismatched pairs,
/// reported as |S| with the standard errors combined in quadrature.
/// Throws InsufficientDataError if any designated pair has fewer than
/// two rounds.
std::pair<double, double> estimate_chsh(const SessionTranscript& transcript,
                                        const ProtocolConfig& config);

/// Keeps matched-setting rounds; Alice maps +1 -> 0, Bob's mapping is
/// inverted so that perfect anti-correlation yields identical keys.
SiftResult sift_keys(const SessionTranscript& transcript, const ProtocolConfig& config);

/// What the public channel carries: all setting choices, and outcomes of
/// mismatched rounds only.
struct AnnouncedData {
    std::vector<std::array<std::uint8_t, 2>> choices;
    std::vector<std::int8_t> alice_mismatched_outcomes; // in round order
    std::vector<std::int8_t> bob_mismatched_outcomes;
};

AnnouncedData announce(const SessionTranscript& transcript, const ProtocolConfig& config);

/// Recomputes the security report from the announcement plus each
/// party's private matched-round outcomes (in round order). Matched-round
/// outcomes never travel on the public channel.
SecurityReport audit_security(const AnnouncedData& announced,
                              const std::vector<std::int8_t>& alice_matched_outcomes,
                              const std::vector<std::int8_t>& bob_matched_outcomes,
                              const ProtocolConfig& config);

/// Transcript CSV: round,a_choice,b_choice,a_out,b_out.
void write_transcript_csv(std::ostream& out, const SessionTranscript& transcript);

} // namespace bellhep::qkd
