#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bellhep/chsh.hpp"
#include "bellhep/hyperon.hpp"
#include "bellhep/io.hpp"
#include "bellhep/kaon.hpp"
#include "bellhep/qkd.hpp"

namespace {

using bellhep::Vec3;
using nlohmann::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

bellhep::kaon::KaonConstants resolve_constants(const std::string& name_or_path) {
    using bellhep::kaon::KaonConstants;
    if (name_or_path == "physical") return KaonConstants::physical();
    if (name_or_path == "cp-conserving") return KaonConstants::cp_conserving();
    if (name_or_path == "no-decay") return KaonConstants::no_decay();
    return KaonConstants::from_json_file(name_or_path);
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
}

std::array<bellhep::kaon::Flavor, 4> parse_flavors(const std::string& spec) {
    using bellhep::kaon::flavor_from_string;
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.size() == 1) {
        const auto f = flavor_from_string(parts[0]);
        return {f, f, f, f};
    }
    if (parts.size() == 4)
        return {flavor_from_string(parts[0]), flavor_from_string(parts[1]),
                flavor_from_string(parts[2]), flavor_from_string(parts[3])};
    throw UsageError("--flavors expects one flavor or four comma-separated flavors");
}

Vec3 parse_direction(const std::string& spec) {
    double x = 0, y = 0, z = 0;
    char c1 = 0, c2 = 0;
    std::stringstream ss(spec);
    ss >> x >> c1 >> y >> c2 >> z;
    if (!ss || c1 != ',' || c2 != ',') throw UsageError("direction must be given as x,y,z");
    Vec3 v(x, y, z);
    if (v.norm() == 0.0) throw UsageError("direction must be nonzero");
    return v.normalized();
}

int cmd_constants(const std::string& constants) {
    const auto c = resolve_constants(constants);
    json j       = json::parse(c.to_json());
    j["hash"]    = bellhep::io::constants_hash(c);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_kaon_oscillate(const std::string& constants, double t_max, int steps,
                       const std::string& initial, double beta_gamma, const std::string& out,
                       const std::string& format) {
    if (t_max <= 0.0) throw UsageError("--t-max must be > 0");
    if (steps < 2) throw UsageError("--steps must be >= 2");
    if (beta_gamma < 0.0) throw UsageError("--beta-gamma must be >= 0");
    const auto c = resolve_constants(constants);
    const auto flavor = bellhep::kaon::flavor_from_string(initial);
    // Proper time maps to lab distance only when the user supplies the
    // boost: distance = beta*gamma * t in units of c/gamma_S.
    const bool with_distance = beta_gamma > 0.0;

    std::ostringstream body;
    if (format == "csv") {
        body << (with_distance ? "t,distance,p_K0,p_K0bar,p_decayed\n"
                               : "t,p_K0,p_K0bar,p_decayed\n");
        for (int i = 0; i < steps; ++i) {
            const double t = t_max * i / (steps - 1);
            const auto p   = bellhep::kaon::oscillation_probabilities(flavor, t, c);
            body << bellhep::io::format_double(t);
            if (with_distance) body << ',' << bellhep::io::format_double(beta_gamma * t);
            body << ',' << bellhep::io::format_double(p.p_K0) << ','
                 << bellhep::io::format_double(p.p_K0bar) << ','
                 << bellhep::io::format_double(p.p_decayed) << '\n';
        }
    } else if (format == "json") {
        json rows = json::array();
        for (int i = 0; i < steps; ++i) {
            const double t = t_max * i / (steps - 1);
            const auto p   = bellhep::kaon::oscillation_probabilities(flavor, t, c);
            if (with_distance)
                rows.push_back({t, beta_gamma * t, p.p_K0, p.p_K0bar, p.p_decayed});
            else
                rows.push_back({t, p.p_K0, p.p_K0bar, p.p_decayed});
        }
        json j;
        j["columns"] = with_distance
                           ? json{"t", "distance", "p_K0", "p_K0bar", "p_decayed"}
                           : json{"t", "p_K0", "p_K0bar", "p_decayed"};
        j["initial"]        = initial;
        j["constants_hash"] = bellhep::io::constants_hash(c);
        j["rows"]           = rows;
        body << j.dump(2) << "\n";
    } else {
        throw UsageError("--format must be csv or json");
    }
    write_output(out, body.str());
    return 0;
}

int cmd_kaon_chsh(const std::string& constants, const std::string& flavors_spec, int grid_points,
                  double t_min, double t_max, bool no_refine, bool flip_outcomes, int workers,
                  const std::string& out, const std::string& scan_csv) {
    const auto c = resolve_constants(constants);
    if (grid_points < 1) throw UsageError("--grid-points must be >= 1");
    if (t_max <= 0.0) {
        if (c.gamma_S <= 0.0)
            throw UsageError("--t-max is required when gamma_S = 0 (no natural time scale)");
        t_max = 4.0 / c.gamma_S;
    }
    if (t_min < 0.0 || t_min >= t_max) throw UsageError("need 0 <= t-min < t-max");
    const auto flavors = parse_flavors(flavors_spec);

    bellhep::bell::TimeGrid grid{t_min, t_max, grid_points};
    bellhep::bell::ScanOptions options;
    options.workers       = workers;
    options.refine        = !no_refine;
    options.flip_outcomes = flip_outcomes;
    const auto result = bellhep::bell::kaon_chsh_scan(c, flavors, grid, options);

    if (!scan_csv.empty()) {
        std::ofstream csv(scan_csv);
        if (!csv) throw std::runtime_error("cannot open scan csv file: " + scan_csv);
        bellhep::bell::write_scan_csv(csv, c, flavors, grid, flip_outcomes);
    }

    json j;
    j["max_S"]            = result.max_s;
    j["argmax"]           = result.argmax;
    j["coarse_max_S"]     = result.coarse_max_s;
    j["flip_outcomes"]    = flip_outcomes;
    j["grid"]             = {{"t_min", grid.t_min}, {"t_max", grid.t_max}, {"points", grid.points}};
    j["flavors"]          = {bellhep::kaon::to_string(flavors[0]), bellhep::kaon::to_string(flavors[1]),
                             bellhep::kaon::to_string(flavors[2]), bellhep::kaon::to_string(flavors[3])};
    j["constants_hash"]   = bellhep::io::constants_hash(c);
    j["classical_bound"]  = bellhep::kChshClassicalBound;
    j["quantum_bound"]    = bellhep::kChshQuantumBound;
    write_output(out, j.dump(2) + "\n");
    return 0;
}

int cmd_hyperon(std::uint64_t count, double alpha_product, std::optional<double> alpha_L,
                std::optional<double> alpha_Lbar, std::uint64_t seed, int workers,
                const std::string& events_out, const std::string& events_in,
                const std::string& out) {
    bellhep::hyperon::EventBatch batch;
    if (!events_in.empty()) {
        std::ifstream in(events_in);
        if (!in) throw std::runtime_error("cannot open events file: " + events_in);
        batch = bellhep::hyperon::read_events_csv(in);
    } else {
        if (count < 1) throw UsageError("--count must be >= 1");
        // The paper-level constant is the product; individual asymmetries
        // default to its square root unless given explicitly.
        double a_l, a_lbar;
        if (alpha_L && alpha_Lbar) {
            a_l    = *alpha_L;
            a_lbar = *alpha_Lbar;
        } else if (!alpha_L && !alpha_Lbar) {
            if (alpha_product < 0.0) throw UsageError("--alpha-product must be >= 0");
            a_l = a_lbar = std::sqrt(alpha_product);
        } else {
            throw UsageError("give both --alpha-L and --alpha-Lbar, or neither");
        }
        batch = bellhep::hyperon::sample_events(a_l, a_lbar, count, seed, workers);
        if (!events_out.empty()) {
            std::ofstream csv(events_out);
            if (!csv) throw std::runtime_error("cannot open events file: " + events_out);
            bellhep::hyperon::write_events_csv(csv, batch);
        }
    }

    const auto report = bellhep::hyperon::witness_from_events(batch);
    const auto bound =
        bellhep::hyperon::hyperon_chsh_bound(std::sqrt(std::abs(batch.alpha_product)),
                                             std::copysign(std::sqrt(std::abs(batch.alpha_product)),
                                                           batch.alpha_product));
    json j;
    j["witness_value"]   = report.witness_value;
    j["standard_error"]  = report.standard_error;
    j["entangled"]       = report.entangled_verdict;
    j["axis_means"]      = report.axis_means;
    j["n_events"]        = batch.events.size();
    j["alpha_product"]   = batch.alpha_product;
    j["seed"]            = batch.seed;
    j["chsh_bound"]      = {{"max_S", bound.max_s}, {"violated", bound.violated}};
    write_output(out, j.dump(2) + "\n");
    return 0;
}

int cmd_qkd(std::uint64_t pairs, const std::string& eve_model, const std::string& eve_direction,
            std::uint64_t seed, int workers, const std::string& out,
            const std::string& transcript_csv) {
    if (pairs < 1) throw UsageError("--pairs must be >= 1");
    bellhep::qkd::EavesdropperModel eve;
    if (eve_model == "none") {
        eve = bellhep::qkd::EavesdropperModel::none();
    } else if (eve_model == "intercept-uniform") {
        eve = bellhep::qkd::EavesdropperModel::intercept_uniform();
    } else if (eve_model == "intercept-fixed") {
        eve = bellhep::qkd::EavesdropperModel::intercept_fixed(parse_direction(eve_direction));
    } else {
        throw UsageError("unknown eve model: " + eve_model);
    }

    auto cfg    = bellhep::qkd::ProtocolConfig::defaults(pairs, seed, eve);
    cfg.workers = workers;
    const auto session = bellhep::qkd::run_session(cfg);

    if (!transcript_csv.empty()) {
        std::ofstream csv(transcript_csv);
        if (!csv) throw std::runtime_error("cannot open transcript file: " + transcript_csv);
        bellhep::qkd::write_transcript_csv(csv, session.transcript);
    }

    auto settings_json = [](const std::array<Vec3, 3>& settings) {
        json arr = json::array();
        for (const auto& s : settings) arr.push_back({s.x(), s.y(), s.z()});
        return arr;
    };
    json j;
    j["n_pairs"]       = pairs;
    j["seed"]          = seed;
    j["settings"]      = {{"alice", settings_json(cfg.alice_settings)},
                          {"bob", settings_json(cfg.bob_settings)}};
    j["eve_model"]     = eve_model;
    j["s_estimate"]    = session.report.s_estimate;
    j["s_stderr"]      = std::isfinite(session.report.s_stderr)
                             ? json(session.report.s_stderr)
                             : json("inf");
    j["qber"]          = session.report.qber;
    j["sifted_length"] = session.report.sifted_length;
    j["secure"]        = session.report.secure;
    write_output(out, j.dump(2) + "\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bell-test simulations for decaying particle systems"};
    app.require_subcommand(1);

    std::string constants = "physical";
    std::string out;
    std::string format = "csv";
    std::uint64_t seed = 42;
    int workers        = 1;

    auto* sc_constants = app.add_subcommand("constants", "print the active constants preset");
    sc_constants->add_option("--constants", constants, "preset name or JSON path");

    auto* sc_osc = app.add_subcommand("kaon-oscillate", "strangeness oscillation table");
    double t_max = 0.0;
    int steps    = 200;
    std::string initial = "K0";
    double beta_gamma   = 0.0;
    sc_osc->add_option("--constants", constants, "preset name or JSON path");
    sc_osc->add_option("--t-max", t_max, "largest time on the grid")->required();
    sc_osc->add_option("--steps", steps, "number of grid rows");
    sc_osc->add_option("--initial", initial, "initial flavor (K0 or K0bar)");
    sc_osc->add_option("--beta-gamma", beta_gamma,
                       "boost beta*gamma; adds a lab-distance column (units c/gamma_S)");
    sc_osc->add_option("--out", out, "output path (stdout if omitted)");
    sc_osc->add_option("--format", format, "csv or json");

    auto* sc_chsh = app.add_subcommand("kaon-chsh", "CHSH scan over measurement times");
    std::string flavors = "K0bar";
    int grid_points     = 40;
    double t_min        = 0.0;
    double chsh_t_max   = 0.0;
    bool no_refine      = false;
    bool flip_outcomes  = false;
    std::string scan_csv;
    sc_chsh->add_option("--constants", constants, "preset name or JSON path");
    sc_chsh->add_option("--flavors", flavors, "question flavor, or 4 comma-separated (n,n',m,m')");
    sc_chsh->add_option("--grid-points", grid_points, "grid points per time axis");
    sc_chsh->add_option("--t-min", t_min, "smallest time on the grid");
    sc_chsh->add_option("--t-max", chsh_t_max, "largest time (default 4/gamma_S)");
    sc_chsh->add_flag("--no-refine", no_refine, "skip the simplex refinement");
    sc_chsh->add_flag("--flip-outcomes", flip_outcomes,
                      "flip one party's outcome labels (negates every E)");
    sc_chsh->add_option("--workers", workers, "scan worker threads");
    sc_chsh->add_option("--out", out, "summary JSON path (stdout if omitted)");
    sc_chsh->add_option("--scan-csv", scan_csv, "also write the full scan table CSV");

    auto* sc_hyp = app.add_subcommand("hyperon", "decay event generation and witness estimate");
    std::uint64_t count  = 1000000;
    double alpha_product = 0.46;
    std::optional<double> alpha_L, alpha_Lbar;
    std::string events_out, events_in;
    sc_hyp->add_option("--count", count, "number of events");
    sc_hyp->add_option("--alpha-product", alpha_product, "decay asymmetry product");
    sc_hyp->add_option("--alpha-L", alpha_L, "left asymmetry (overrides --alpha-product)");
    sc_hyp->add_option("--alpha-Lbar", alpha_Lbar, "right asymmetry");
    sc_hyp->add_option("--seed", seed, "random seed");
    sc_hyp->add_option("--workers", workers, "sampling worker threads");
    sc_hyp->add_option("--events-out", events_out, "persist sampled events as CSV");
    sc_hyp->add_option("--events-in", events_in, "recompute the witness from persisted events");
    sc_hyp->add_option("--out", out, "witness JSON path (stdout if omitted)");

    auto* sc_qkd = app.add_subcommand("qkd", "entanglement-based key distribution session");
    std::uint64_t pairs = 100000;
    std::string eve_model = "none";
    std::string eve_direction = "0,0,1";
    std::string transcript_csv;
    sc_qkd->add_option("--pairs", pairs, "number of entangled pairs");
    sc_qkd->add_option("--eve", eve_model, "none | intercept-uniform | intercept-fixed");
    sc_qkd->add_option("--eve-direction", eve_direction, "fixed interception direction x,y,z");
    sc_qkd->add_option("--seed", seed, "random seed");
    sc_qkd->add_option("--workers", workers, "round worker threads");
    sc_qkd->add_option("--out", out, "report JSON path (stdout if omitted)");
    sc_qkd->add_option("--transcript-csv", transcript_csv, "dump the session transcript");

    try {
        app.parse(argc, argv);
        if (sc_constants->parsed()) return cmd_constants(constants);
        if (sc_osc->parsed())
            return cmd_kaon_oscillate(constants, t_max, steps, initial, beta_gamma, out, format);
        if (sc_chsh->parsed())
            return cmd_kaon_chsh(constants, flavors, grid_points, t_min, chsh_t_max, no_refine,
                                 flip_outcomes, workers, out, scan_csv);
        if (sc_hyp->parsed())
            return cmd_hyperon(count, alpha_product, alpha_L, alpha_Lbar, seed, workers,
                               events_out, events_in, out);
        if (sc_qkd->parsed())
            return cmd_qkd(pairs, eve_model, eve_direction, seed, workers, out, transcript_csv);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
