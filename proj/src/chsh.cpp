#include "bellhep/chsh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace bellhep::bell {

namespace {

void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

Vec3 checked_unit(const Vec3& v) {
    if (std::abs(v.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("spin setting must be a unit vector");
    return v;
}

/// <psi^-| A (x) B |psi^-> for 2x2 operators, without building the 4x4
/// product.
double singlet_expectation(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    const Complex val =
        0.5 * (a(0, 0) * b(1, 1) + a(1, 1) * b(0, 0) - a(0, 1) * b(1, 0) - a(1, 0) * b(0, 1));
    return val.real();
}

/// Dichotomic decay-inclusive observable for an active question:
/// 2 U^dag Pi U - 1 (yes -> +1, "no" covers both the opposite flavor and
/// decay, so no post-selection happens).
Eigen::Matrix2cd question_observable(const kaon::ActiveQuestion& q,
                                     const kaon::KaonConstants& c) {
    return 2.0 * kaon::yes_povm(q, c) - Eigen::Matrix2cd::Identity();
}

} // namespace

MeasurementSetting MeasurementSetting::spin(const Vec3& direction) {
    return {checked_unit(direction)};
}

MeasurementSetting MeasurementSetting::question(kaon::Flavor target, double time) {
    if (!(time >= 0.0) || !std::isfinite(time))
        throw std::invalid_argument("question time must be finite and >= 0");
    return {kaon::ActiveQuestion{target, time}};
}

CHSHConfig CHSHConfig::spins(const Vec3& n, const Vec3& m, const Vec3& n_prime,
                             const Vec3& m_prime) {
    return {MeasurementSetting::spin(n), MeasurementSetting::spin(m),
            MeasurementSetting::spin(n_prime), MeasurementSetting::spin(m_prime)};
}

bool CHSHConfig::all_spin() const {
    return n.is_spin() && m.is_spin() && n_prime.is_spin() && m_prime.is_spin();
}

double correlation_from_table(const JointOutcomeTable& table) {
    const double entries[] = {table.p_pp, table.p_pm, table.p_mp, table.p_mm};
    double sum = 0.0;
    for (double p : entries) {
        require(std::isfinite(p) && p >= -tolerances().structural,
                "correlation_from_table: negative probability");
        sum += p;
    }
    require(std::abs(sum - 1.0) < 1e-12, "correlation_from_table: probabilities must sum to 1");
    return table.p_pp - table.p_pm - table.p_mp + table.p_mm;
}

double chsh_value(double e1, double e2, double e3, double e4) {
    for (double e : {e1, e2, e3, e4})
        require(std::isfinite(e) && std::abs(e) <= 1.0 + 1e-12,
                "chsh_value: correlations must lie in [-1, 1]");
    return e1 - e2 + e3 + e4;
}

std::array<double, 16> lhv_strategy_values(const CHSHConfig&) {
    // Outcomes a(n), a(n'), b(m), b(m') are independent signs; the settings
    // themselves do not enter a deterministic assignment.
    std::array<double, 16> values{};
    int idx = 0;
    for (int bits = 0; bits < 16; ++bits) {
        const double a1 = (bits & 1) ? 1.0 : -1.0;
        const double a2 = (bits & 2) ? 1.0 : -1.0;
        const double b1 = (bits & 4) ? 1.0 : -1.0;
        const double b2 = (bits & 8) ? 1.0 : -1.0;
        values[idx++] = a1 * b1 - a1 * b2 + a2 * b1 + a2 * b2;
    }
    return values;
}

double lhv_brute_force_bound(const CHSHConfig& config) {
    const auto values = lhv_strategy_values(config);
    return *std::max_element(values.begin(), values.end());
}

CHSHResult quantum_chsh(const qm::DensityOperator& rho, const CHSHConfig& config) {
    require(config.all_spin(), "quantum_chsh: settings must be spin directions");
    require(rho.dim() == 4, "quantum_chsh: state must be two qubits");
    auto dir = [](const MeasurementSetting& s) { return std::get<Vec3>(s.value); };
    auto corr = [&](const Vec3& a, const Vec3& b) {
        return qm::expectation(qm::tensor(qm::spin_along(a), qm::spin_along(b)), rho);
    };
    const double e_nm   = corr(dir(config.n), dir(config.m));
    const double e_nmp  = corr(dir(config.n), dir(config.m_prime));
    const double e_npm  = corr(dir(config.n_prime), dir(config.m));
    const double e_npmp = corr(dir(config.n_prime), dir(config.m_prime));
    CHSHResult result;
    result.s_value  = chsh_value(e_nm, e_nmp, e_npm, e_npmp);
    result.settings = config;
    return result;
}

CHSHConfig optimal_singlet_config() {
    auto dir = [](double deg) {
        const double rad = deg * kPi / 180.0;
        return Vec3(std::sin(rad), 0.0, std::cos(rad));
    };
    return CHSHConfig::spins(dir(0.0), dir(45.0), dir(90.0), dir(135.0));
}

double kaon_correlation(const kaon::KaonConstants& c, const kaon::ActiveQuestion& left,
                        const kaon::ActiveQuestion& right) {
    return singlet_expectation(question_observable(left, c), question_observable(right, c));
}

namespace {

struct ScanTables {
    std::vector<double> times;
    // e[slot_a][slot_b] is a points x points correlation table for the
    // (alice slot, bob slot) flavor pair; slots are (n, n') and (m, m').
    std::array<std::array<std::vector<double>, 2>, 2> e;
    int points = 0;

    double at(int slot_a, int slot_b, int i, int j) const {
        return e[slot_a][slot_b][static_cast<std::size_t>(i) * points + j];
    }
};

ScanTables build_tables(const kaon::KaonConstants& c, const FlavorChoice& flavors,
                        const TimeGrid& grid, bool flip_outcomes) {
    require(grid.points >= 1, "kaon_chsh_scan: grid must have at least one point");
    require(grid.t_min >= 0.0 && std::isfinite(grid.t_min) && std::isfinite(grid.t_max),
            "kaon_chsh_scan: grid bounds must be finite and non-negative");
    require(grid.t_max >= grid.t_min, "kaon_chsh_scan: t_max must be >= t_min");
    require(grid.points == 1 || grid.t_max > grid.t_min,
            "kaon_chsh_scan: degenerate bounds need a single-point grid");
    c.validate();

    ScanTables tables;
    tables.points = grid.points;
    tables.times.resize(static_cast<std::size_t>(grid.points));
    for (int i = 0; i < grid.points; ++i)
        tables.times[static_cast<std::size_t>(i)] =
            grid.points == 1 ? grid.t_min
                             : grid.t_min + (grid.t_max - grid.t_min) * i / (grid.points - 1);

    // Observables per flavor actually used, per grid time.
    std::map<kaon::Flavor, std::vector<Eigen::Matrix2cd>> observables;
    for (kaon::Flavor f : flavors) {
        if (observables.count(f)) continue;
        auto& list = observables[f];
        list.reserve(tables.times.size());
        for (double t : tables.times)
            list.push_back(question_observable(kaon::ActiveQuestion{f, t}, c));
    }

    const double sign = flip_outcomes ? -1.0 : 1.0;
    const kaon::Flavor alice[2] = {flavors[0], flavors[1]};
    const kaon::Flavor bob[2]   = {flavors[2], flavors[3]};
    for (int sa = 0; sa < 2; ++sa) {
        for (int sb = 0; sb < 2; ++sb) {
            auto& table = tables.e[sa][sb];
            table.resize(static_cast<std::size_t>(grid.points) * grid.points);
            const auto& da = observables[alice[sa]];
            const auto& db = observables[bob[sb]];
            for (int i = 0; i < grid.points; ++i)
                for (int j = 0; j < grid.points; ++j)
                    table[static_cast<std::size_t>(i) * grid.points + j] =
                        sign * singlet_expectation(da[static_cast<std::size_t>(i)],
                                                   db[static_cast<std::size_t>(j)]);
        }
    }
    return tables;
}

double scan_s(const ScanTables& t, int i, int j, int k, int l) {
    return t.at(0, 0, i, k) - t.at(0, 1, i, l) + t.at(1, 0, j, k) + t.at(1, 1, j, l);
}

struct BestPoint {
    double s = -5.0; // below the algebraic minimum -4
    std::uint64_t flat = 0;
};

/// Scans rows [i_begin, i_end) of the outer index; tie-breaks on the flat
/// lexicographic index so any partition merges to the serial answer.
BestPoint scan_range(const ScanTables& t, int i_begin, int i_end) {
    BestPoint best;
    const int p = t.points;
    for (int i = i_begin; i < i_end; ++i)
        for (int j = 0; j < p; ++j)
            for (int k = 0; k < p; ++k)
                for (int l = 0; l < p; ++l) {
                    const double s = scan_s(t, i, j, k, l);
                    if (s > best.s) {
                        best.s    = s;
                        best.flat = ((static_cast<std::uint64_t>(i) * p + j) * p + k) * p + l;
                    }
                }
    return best;
}

} // namespace

KaonScanResult kaon_chsh_scan(const kaon::KaonConstants& c, const FlavorChoice& flavors,
                              const TimeGrid& grid, const ScanOptions& options) {
    const ScanTables tables = build_tables(c, flavors, grid, options.flip_outcomes);
    const int p = grid.points;

    const int workers = std::clamp(options.workers, 1, p);
    BestPoint best;
    if (workers == 1) {
        best = scan_range(tables, 0, p);
    } else {
        std::vector<BestPoint> partial(static_cast<std::size_t>(workers));
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            const int begin = p * w / workers;
            const int end   = p * (w + 1) / workers;
            threads.emplace_back([&, w, begin, end] {
                partial[static_cast<std::size_t>(w)] = scan_range(tables, begin, end);
            });
        }
        for (auto& th : threads) th.join();
        best = partial[0];
        for (int w = 1; w < workers; ++w) {
            const auto& cand = partial[static_cast<std::size_t>(w)];
            if (cand.s > best.s || (cand.s == best.s && cand.flat < best.flat)) best = cand;
        }
    }

    KaonScanResult result;
    result.grid = grid;
    auto tuple_from_flat = [&](std::uint64_t flat) {
        std::array<double, 4> times{};
        for (int axis = 3; axis >= 0; --axis) {
            times[static_cast<std::size_t>(axis)] =
                tables.times[static_cast<std::size_t>(flat % p)];
            flat /= p;
        }
        return times;
    };
    result.coarse_max_s  = best.s;
    result.coarse_argmax = tuple_from_flat(best.flat);
    result.max_s         = best.s;
    result.argmax        = result.coarse_argmax;

    if (options.refine && grid.t_max > grid.t_min) {
        const double spacing = p > 1 ? (grid.t_max - grid.t_min) / (p - 1)
                                     : 0.25 * (grid.t_max - grid.t_min);
        const double sign = options.flip_outcomes ? -1.0 : 1.0;
        auto objective = [&](const std::vector<double>& x) {
            return sign *
                   (kaon_correlation(c, {flavors[0], x[0]}, {flavors[2], x[2]}) -
                    kaon_correlation(c, {flavors[0], x[0]}, {flavors[3], x[3]}) +
                    kaon_correlation(c, {flavors[1], x[1]}, {flavors[2], x[2]}) +
                    kaon_correlation(c, {flavors[1], x[1]}, {flavors[3], x[3]}));
        };
        NelderMeadOptions nm;
        nm.max_iterations = options.refine_iterations;
        nm.f_tolerance    = options.refine_tolerance;
        const std::vector<double> start(result.coarse_argmax.begin(), result.coarse_argmax.end());
        const auto refined = nelder_mead_maximize(
            objective, start, std::vector<double>(4, spacing), std::vector<double>(4, grid.t_min),
            std::vector<double>(4, grid.t_max), nm);
        if (refined.f > result.max_s) {
            result.max_s = refined.f;
            std::copy(refined.x.begin(), refined.x.end(), result.argmax.begin());
        }
    }

    if (options.keep_table) {
        result.table.reserve(static_cast<std::size_t>(p) * p * p * p);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j)
                for (int k = 0; k < p; ++k)
                    for (int l = 0; l < p; ++l) {
                        ScanRow row;
                        row.times = {tables.times[static_cast<std::size_t>(i)],
                                     tables.times[static_cast<std::size_t>(j)],
                                     tables.times[static_cast<std::size_t>(k)],
                                     tables.times[static_cast<std::size_t>(l)]};
                        row.s = scan_s(tables, i, j, k, l);
                        result.table.push_back(row);
                    }
    }
    return result;
}

void write_scan_csv(std::ostream& out, const kaon::KaonConstants& c,
                    const FlavorChoice& flavors, const TimeGrid& grid, bool flip_outcomes) {
    const ScanTables tables = build_tables(c, flavors, grid, flip_outcomes);
    const int p = grid.points;
    out << "t1,t2,t3,t4,S\n";
    char buf[160];
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            for (int k = 0; k < p; ++k)
                for (int l = 0; l < p; ++l) {
                    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                                  tables.times[static_cast<std::size_t>(i)],
                                  tables.times[static_cast<std::size_t>(j)],
                                  tables.times[static_cast<std::size_t>(k)],
                                  tables.times[static_cast<std::size_t>(l)],
                                  scan_s(tables, i, j, k, l));
                    out << buf;
                }
}

NelderMeadResult nelder_mead_maximize(const std::function<double(const std::vector<double>&)>& f,
                                      const std::vector<double>& start,
                                      const std::vector<double>& step,
                                      const std::vector<double>& lower,
                                      const std::vector<double>& upper,
                                      const NelderMeadOptions& options) {
    const std::size_t n = start.size();
    require(n > 0 && step.size() == n && lower.size() == n && upper.size() == n,
            "nelder_mead_maximize: inconsistent dimensions");

    auto clamp_point = [&](std::vector<double> x) {
        for (std::size_t d = 0; d < n; ++d) x[d] = std::clamp(x[d], lower[d], upper[d]);
        return x;
    };

    struct Vertex {
        std::vector<double> x;
        double f;
    };
    std::vector<Vertex> simplex;
    simplex.reserve(n + 1);
    simplex.push_back({clamp_point(start), 0.0});
    for (std::size_t d = 0; d < n; ++d) {
        auto x = start;
        x[d] += step[d] != 0.0 ? step[d] : 1.0;
        simplex.push_back({clamp_point(std::move(x)), 0.0});
    }
    for (auto& v : simplex) v.f = f(v.x);

    int iterations = 0;
    for (; iterations < options.max_iterations; ++iterations) {
        std::stable_sort(simplex.begin(), simplex.end(),
                         [](const Vertex& a, const Vertex& b) { return a.f > b.f; });
        if (simplex.front().f - simplex.back().f < options.f_tolerance) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[v].x[d] / n;
        const Vertex& worst = simplex.back();

        auto along = [&](double coeff) {
            std::vector<double> x(n);
            for (std::size_t d = 0; d < n; ++d)
                x[d] = centroid[d] + coeff * (centroid[d] - worst.x[d]);
            return clamp_point(std::move(x));
        };

        Vertex reflected{along(1.0), 0.0};
        reflected.f = f(reflected.x);
        if (reflected.f > simplex.front().f) {
            Vertex expanded{along(2.0), 0.0};
            expanded.f = f(expanded.x);
            simplex.back() = expanded.f > reflected.f ? std::move(expanded) : std::move(reflected);
            continue;
        }
        if (reflected.f > simplex[n - 1].f) {
            simplex.back() = std::move(reflected);
            continue;
        }
        const bool outside = reflected.f > worst.f;
        Vertex contracted{along(outside ? 0.5 : -0.5), 0.0};
        contracted.f = f(contracted.x);
        if (contracted.f > (outside ? reflected.f : worst.f)) {
            simplex.back() = std::move(contracted);
            continue;
        }
        // Shrink toward the best vertex.
        for (std::size_t v = 1; v <= n; ++v) {
            for (std::size_t d = 0; d < n; ++d)
                simplex[v].x[d] = simplex[0].x[d] + 0.5 * (simplex[v].x[d] - simplex[0].x[d]);
            simplex[v].x = clamp_point(std::move(simplex[v].x));
            simplex[v].f = f(simplex[v].x);
        }
    }

    std::stable_sort(simplex.begin(), simplex.end(),
                     [](const Vertex& a, const Vertex& b) { return a.f > b.f; });
    return {simplex.front().x, simplex.front().f, iterations};
}

} // namespace bellhep::bell
