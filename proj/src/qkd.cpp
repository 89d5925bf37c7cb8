#include "bellhep/qkd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>
#include <thread>

#include "bellhep/rng.hpp"

namespace bellhep::qkd {

namespace {

void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

Vec3 planar_direction(double degrees) {
    const double rad = degrees * kPi / 180.0;
    return {std::sin(rad), 0.0, std::cos(rad)};
}

int sign_draw(rng::SplitMix64& g, double p_plus) {
    return g.next_double() < p_plus ? +1 : -1;
}

Round simulate_round(const ProtocolConfig& cfg, std::uint64_t index) {
    auto g = rng::stream_for(cfg.seed, index);
    Round r;
    r.alice_choice = static_cast<std::uint8_t>(g.next_below(3));
    r.bob_choice   = static_cast<std::uint8_t>(g.next_below(3));
    const Vec3& a = cfg.alice_settings[r.alice_choice];
    const Vec3& b = cfg.bob_settings[r.bob_choice];

    // Alice's marginal is uniform for the singlet regardless of setting.
    const int k = sign_draw(g, 0.5);
    int l;
    if (cfg.eve.kind == EavesdropperModel::Kind::None) {
        l = sign_draw(g, 0.5 * (1.0 - k * a.dot(b)));
    } else {
        const Vec3 e = cfg.eve.strategy == EavesdropperModel::DirectionStrategy::Fixed
                           ? cfg.eve.fixed_direction
                           : rng::uniform_unit_vector(g);
        const int m = sign_draw(g, 0.5 * (1.0 - k * a.dot(e)));
        l = sign_draw(g, 0.5 * (1.0 + m * e.dot(b)));
    }
    r.alice_outcome = static_cast<std::int8_t>(k);
    r.bob_outcome   = static_cast<std::int8_t>(l);
    return r;
}

std::uint8_t alice_bit(std::int8_t outcome) { return outcome > 0 ? 0 : 1; }
std::uint8_t bob_bit(std::int8_t outcome) { return outcome > 0 ? 1 : 0; }

SecurityReport assemble_report(const SessionTranscript& transcript, const ProtocolConfig& cfg,
                               const std::vector<std::uint8_t>& alice_key,
                               const std::vector<std::uint8_t>& bob_key) {
    SecurityReport report;
    report.sifted_length = alice_key.size();
    std::uint64_t disagreements = 0;
    for (std::size_t i = 0; i < alice_key.size(); ++i)
        if (alice_key[i] != bob_key[i]) ++disagreements;
    report.qber = alice_key.empty()
                      ? 0.0
                      : static_cast<double>(disagreements) / static_cast<double>(alice_key.size());
    try {
        std::tie(report.s_estimate, report.s_stderr) = estimate_chsh(transcript, cfg);
        report.secure = report.s_estimate - 3.0 * report.s_stderr > kChshClassicalBound;
    } catch (const InsufficientDataError&) {
        report.s_estimate = 0.0;
        report.s_stderr   = std::numeric_limits<double>::infinity();
        report.secure     = false;
    }
    return report;
}

} // namespace

EavesdropperModel EavesdropperModel::none() { return {}; }

EavesdropperModel EavesdropperModel::intercept_fixed(const Vec3& direction) {
    if (std::abs(direction.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("EavesdropperModel: fixed direction must be a unit vector");
    return {Kind::InterceptResend, DirectionStrategy::Fixed, direction};
}

EavesdropperModel EavesdropperModel::intercept_uniform() {
    return {Kind::InterceptResend, DirectionStrategy::UniformRandom, Vec3::UnitZ()};
}

void ProtocolConfig::validate() const {
    require(pair_count >= 1, "ProtocolConfig: pair_count must be >= 1");
    for (const auto& s : alice_settings)
        require(std::abs(s.norm() - 1.0) < 1e-12, "ProtocolConfig: settings must be unit vectors");
    for (const auto& s : bob_settings)
        require(std::abs(s.norm() - 1.0) < 1e-12, "ProtocolConfig: settings must be unit vectors");
    require(!matched_pairs().empty(),
            "ProtocolConfig: at least one Alice setting must equal one Bob setting");
    for (const auto& [ia, ib] : chsh_pairs) {
        require(ia >= 0 && ia < 3 && ib >= 0 && ib < 3, "ProtocolConfig: chsh pair out of range");
        require(alice_settings[static_cast<std::size_t>(ia)] !=
                    bob_settings[static_cast<std::size_t>(ib)],
                "ProtocolConfig: chsh pairs must be mismatched settings");
    }
    if (eve.kind == EavesdropperModel::Kind::InterceptResend &&
        eve.strategy == EavesdropperModel::DirectionStrategy::Fixed)
        require(std::abs(eve.fixed_direction.norm() - 1.0) < 1e-12,
                "ProtocolConfig: eve direction must be a unit vector");
}

std::vector<std::array<int, 2>> ProtocolConfig::matched_pairs() const {
    std::vector<std::array<int, 2>> matched;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (alice_settings[static_cast<std::size_t>(i)] ==
                bob_settings[static_cast<std::size_t>(j)])
                matched.push_back({i, j});
    return matched;
}

ProtocolConfig ProtocolConfig::defaults(std::uint64_t pair_count, std::uint64_t seed,
                                        const EavesdropperModel& eve) {
    ProtocolConfig cfg;
    cfg.pair_count     = pair_count;
    cfg.alice_settings = {planar_direction(0.0), planar_direction(45.0), planar_direction(90.0)};
    cfg.bob_settings = {planar_direction(45.0), planar_direction(90.0), planar_direction(135.0)};
    cfg.seed           = seed;
    cfg.eve            = eve;
    return cfg;
}

SessionResult run_session(const ProtocolConfig& config) {
    config.validate();
    SessionResult result;
    result.transcript.rounds.resize(config.pair_count);

    const auto n_workers = std::clamp<std::uint64_t>(
        static_cast<std::uint64_t>(std::max(config.workers, 1)), 1, config.pair_count);
    if (n_workers == 1) {
        for (std::uint64_t i = 0; i < config.pair_count; ++i)
            result.transcript.rounds[i] = simulate_round(config, i);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_workers);
        for (std::uint64_t w = 0; w < n_workers; ++w) {
            const std::uint64_t begin = config.pair_count * w / n_workers;
            const std::uint64_t end   = config.pair_count * (w + 1) / n_workers;
            threads.emplace_back([&, begin, end] {
                for (std::uint64_t i = begin; i < end; ++i)
                    result.transcript.rounds[i] = simulate_round(config, i);
            });
        }
        for (auto& t : threads) t.join();
    }

    auto sifted      = sift_keys(result.transcript, config);
    result.alice_key = std::move(sifted.alice_key);
    result.bob_key   = std::move(sifted.bob_key);
    result.report = assemble_report(result.transcript, config, result.alice_key, result.bob_key);
    return result;
}

std::pair<double, double> estimate_chsh(const SessionTranscript& transcript,
                                        const ProtocolConfig& config) {
    std::array<double, 4> sum{};
    std::array<std::uint64_t, 4> n{};
    for (const auto& r : transcript.rounds) {
        for (std::size_t p = 0; p < 4; ++p) {
            if (r.alice_choice == config.chsh_pairs[p][0] &&
                r.bob_choice == config.chsh_pairs[p][1]) {
                sum[p] += static_cast<double>(r.alice_outcome) * r.bob_outcome;
                ++n[p];
            }
        }
    }
    std::array<double, 4> e{};
    double variance = 0.0;
    for (std::size_t p = 0; p < 4; ++p) {
        if (n[p] < 2)
            throw InsufficientDataError("estimate_chsh: fewer than two rounds for a CHSH pair");
        e[p] = sum[p] / static_cast<double>(n[p]);
        variance += (1.0 - e[p] * e[p]) / static_cast<double>(n[p] - 1);
    }
    const double s = e[0] - e[1] + e[2] + e[3];
    return {std::abs(s), std::sqrt(variance)};
}

SiftResult sift_keys(const SessionTranscript& transcript, const ProtocolConfig& config) {
    std::set<std::array<int, 2>> matched;
    for (const auto& pair : config.matched_pairs()) matched.insert(pair);

    SiftResult result;
    for (std::uint64_t i = 0; i < transcript.rounds.size(); ++i) {
        const auto& r = transcript.rounds[i];
        if (!matched.count({r.alice_choice, r.bob_choice})) continue;
        result.alice_key.push_back(alice_bit(r.alice_outcome));
        result.bob_key.push_back(bob_bit(r.bob_outcome));
        result.matched_indices.push_back(i);
    }
    return result;
}

AnnouncedData announce(const SessionTranscript& transcript, const ProtocolConfig& config) {
    std::set<std::array<int, 2>> matched;
    for (const auto& pair : config.matched_pairs()) matched.insert(pair);

    AnnouncedData data;
    data.choices.reserve(transcript.rounds.size());
    for (const auto& r : transcript.rounds) {
        data.choices.push_back({r.alice_choice, r.bob_choice});
        if (!matched.count({r.alice_choice, r.bob_choice})) {
            data.alice_mismatched_outcomes.push_back(r.alice_outcome);
            data.bob_mismatched_outcomes.push_back(r.bob_outcome);
        }
    }
    return data;
}

SecurityReport audit_security(const AnnouncedData& announced,
                              const std::vector<std::int8_t>& alice_matched_outcomes,
                              const std::vector<std::int8_t>& bob_matched_outcomes,
                              const ProtocolConfig& config) {
    std::set<std::array<int, 2>> matched;
    for (const auto& pair : config.matched_pairs()) matched.insert(pair);

    SessionTranscript rebuilt;
    rebuilt.rounds.reserve(announced.choices.size());
    std::size_t next_matched = 0, next_mismatched = 0;
    std::vector<std::uint8_t> alice_key, bob_key;
    for (const auto& [a_choice, b_choice] : announced.choices) {
        Round r;
        r.alice_choice = a_choice;
        r.bob_choice   = b_choice;
        if (matched.count({a_choice, b_choice})) {
            require(next_matched < alice_matched_outcomes.size() &&
                        next_matched < bob_matched_outcomes.size(),
                    "audit_security: missing matched-round outcomes");
            r.alice_outcome = alice_matched_outcomes[next_matched];
            r.bob_outcome   = bob_matched_outcomes[next_matched];
            ++next_matched;
            alice_key.push_back(alice_bit(r.alice_outcome));
            bob_key.push_back(bob_bit(r.bob_outcome));
        } else {
            require(next_mismatched < announced.alice_mismatched_outcomes.size(),
                    "audit_security: missing mismatched-round outcomes");
            r.alice_outcome = announced.alice_mismatched_outcomes[next_mismatched];
            r.bob_outcome   = announced.bob_mismatched_outcomes[next_mismatched];
            ++next_mismatched;
        }
        rebuilt.rounds.push_back(r);
    }
    return assemble_report(rebuilt, config, alice_key, bob_key);
}

void write_transcript_csv(std::ostream& out, const SessionTranscript& transcript) {
    out << "round,a_choice,b_choice,a_out,b_out\n";
    char buf[96];
    for (std::size_t i = 0; i < transcript.rounds.size(); ++i) {
        const auto& r = transcript.rounds[i];
        std::snprintf(buf, sizeof(buf), "%zu,%d,%d,%d,%d\n", i, static_cast<int>(r.alice_choice),
                      static_cast<int>(r.bob_choice), static_cast<int>(r.alice_outcome),
                      static_cast<int>(r.bob_outcome));
        out << buf;
    }
}

} // namespace bellhep::qkd
