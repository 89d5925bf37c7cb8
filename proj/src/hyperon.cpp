#include "bellhep/hyperon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "bellhep/rng.hpp"

namespace bellhep::hyperon {

namespace {

void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

double binomial(int n, int k) {
    double result = 1.0;
    for (int i = 1; i <= k; ++i) result *= static_cast<double>(n - k + i) / i;
    return result;
}

/// Projector onto the spin-coherent state |s, m = s> rotated to point
/// along (theta, phi); for s = 1/2 this is (1 + n.sigma)/2.
Matrix coherent_projector(double spin, double theta, double phi) {
    const int d = static_cast<int>(2.0 * spin + 1.5);
    const int two_s = d - 1;
    Vector amps(d);
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    for (int k = 0; k < d; ++k) {
        // Basis ordered m = s, s-1, ..., -s; k = s - m.
        const double mag = std::sqrt(binomial(two_s, k)) * std::pow(c, two_s - k) * std::pow(s, k);
        amps[k] = mag * std::exp(Complex(0.0, k * phi));
    }
    return amps * amps.adjoint();
}

} // namespace

void HyperonSpecies::validate() const {
    require(std::isfinite(alpha) && std::abs(alpha) <= 1.0,
            "HyperonSpecies: |alpha| must be <= 1");
    const double two_s = 2.0 * spin;
    require(spin >= 0.5 && std::abs(two_s - std::round(two_s)) < 1e-9,
            "HyperonSpecies: spin must be a positive half-integer");
    require(std::abs(omega1.dot(omega2)) < 1e-12,
            "HyperonSpecies: omega1 and omega2 must be orthogonal");
    const double expected = spin * (2.0 * spin + 1.0);
    require(std::abs(omega1.squaredNorm() + omega2.squaredNorm() - expected) < 1e-10,
            "HyperonSpecies: |omega1 +- omega2|^2 must equal s(2s+1)");
    if (std::abs(spin - 0.5) < 1e-12)
        require(omega1.norm() < 1e-12, "HyperonSpecies: omega1 must vanish at s = 1/2");
}

HyperonSpecies HyperonSpecies::spin_half(double alpha, const Vec3& omega2_direction) {
    HyperonSpecies h;
    h.spin   = 0.5;
    h.alpha  = alpha;
    h.omega1 = Vec3::Zero();
    h.omega2 = omega2_direction.normalized();
    h.validate();
    return h;
}

Vec3 DecayDirection::unit() const {
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

DecayDirection DecayDirection::from_unit(const Vec3& n) {
    require(std::abs(n.norm() - 1.0) < 1e-12, "DecayDirection: vector must be unit length");
    DecayDirection d;
    d.theta = std::acos(std::clamp(n.z(), -1.0, 1.0));
    d.phi   = std::atan2(n.y(), n.x());
    if (d.phi < 0.0) d.phi += 2.0 * kPi;
    return d;
}

qm::KrausChannel kraus_from_species(const HyperonSpecies& h) {
    h.validate();
    const double omega_plus  = 0.5 * (1.0 + h.alpha);
    const double omega_minus = 0.5 * (1.0 - h.alpha);
    std::vector<Matrix> ops;
    for (int sign : {+1, -1}) {
        const Vec3 axis = h.omega1 + sign * h.omega2;
        const DecayDirection dir = DecayDirection::from_unit(axis.normalized());
        const double weight = sign > 0 ? omega_plus : omega_minus;
        ops.push_back(std::sqrt(weight) * coherent_projector(h.spin, dir.theta, dir.phi));
    }
    return qm::KrausChannel(h.dim(), h.dim(), std::move(ops));
}

double single_angular_pdf(const qm::DensityOperator& rho_spin, const HyperonSpecies& h,
                          const DecayDirection& dir) {
    h.validate();
    require(h.dim() == 2, "single_angular_pdf: only spin 1/2 is supported");
    require(rho_spin.dim() == 2, "single_angular_pdf: spin state dimension mismatch");
    require(std::abs(rho_spin.trace() - 1.0) < tolerances().structural,
            "single_angular_pdf: spin state must be normalized");
    const auto bloch = qm::bloch_from_density(rho_spin);
    const Vec3 s_vec(bloch.coefficients[0], bloch.coefficients[1], bloch.coefficients[2]);
    const Vec3 measurement = h.omega1 + h.alpha * h.omega2.norm() * dir.unit();
    return (1.0 + measurement.dot(s_vec)) / (4.0 * kPi);
}

double joint_angular_pdf(double alpha_L, double alpha_Lbar, const DecayDirection& n_L,
                         const DecayDirection& n_Lbar) {
    require(std::abs(alpha_L) <= 1.0 && std::abs(alpha_Lbar) <= 1.0,
            "joint_angular_pdf: |alpha| must be <= 1");
    const double geometric = n_L.unit().dot(n_Lbar.unit());
    const double norm = 16.0 * kPi * kPi;
    return (1.0 - alpha_L * alpha_Lbar * geometric) / norm;
}

namespace {

/// Inverse CDF of the normalized linear density (1 - a x)/2 on [-1, 1].
double sample_relative_cosine(double a, double u) {
    if (std::abs(a) < 1e-12) return 2.0 * u - 1.0;
    const double disc = 1.0 - a * (4.0 * u - 2.0 - a);
    const double chi  = (1.0 - std::sqrt(std::max(0.0, disc))) / a;
    return std::clamp(chi, -1.0, 1.0);
}

/// Deterministic orthonormal frame completing n.
void frame_for(const Vec3& n, Vec3& e1, Vec3& e2) {
    const Vec3 axis = std::abs(n.x()) <= std::abs(n.y())
                          ? (std::abs(n.x()) <= std::abs(n.z()) ? Vec3::UnitX() : Vec3::UnitZ())
                          : (std::abs(n.y()) <= std::abs(n.z()) ? Vec3::UnitY() : Vec3::UnitZ());
    e1 = axis.cross(n).normalized();
    e2 = n.cross(e1);
}

Event sample_one(double alpha_product, std::uint64_t seed, std::uint64_t index) {
    auto g = rng::stream_for(seed, index);
    const Vec3 n = rng::uniform_unit_vector(g);
    const double chi = sample_relative_cosine(alpha_product, g.next_double());
    const double psi = 2.0 * kPi * g.next_double();
    Vec3 e1, e2;
    frame_for(n, e1, e2);
    const double sin_part = std::sqrt(std::max(0.0, 1.0 - chi * chi));
    const Vec3 m = (chi * n + sin_part * (std::cos(psi) * e1 + std::sin(psi) * e2)).normalized();
    return {DecayDirection::from_unit(n), DecayDirection::from_unit(m)};
}

} // namespace

EventBatch sample_events(double alpha_L, double alpha_Lbar, std::uint64_t count,
                         std::uint64_t seed, int workers) {
    require(count >= 1, "sample_events: count must be >= 1");
    require(std::abs(alpha_L) <= 1.0 && std::abs(alpha_Lbar) <= 1.0,
            "sample_events: |alpha| must be <= 1");
    EventBatch batch;
    batch.seed          = seed;
    batch.alpha_product = alpha_L * alpha_Lbar;
    batch.events.resize(count);

    const int n_workers =
        std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::max(workers, 1)), 1, count);
    if (n_workers == 1) {
        for (std::uint64_t i = 0; i < count; ++i)
            batch.events[i] = sample_one(batch.alpha_product, seed, i);
        return batch;
    }
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) {
        const std::uint64_t begin = count * static_cast<std::uint64_t>(w) / n_workers;
        const std::uint64_t end   = count * (static_cast<std::uint64_t>(w) + 1) / n_workers;
        threads.emplace_back([&, begin, end] {
            for (std::uint64_t i = begin; i < end; ++i)
                batch.events[i] = sample_one(batch.alpha_product, seed, i);
        });
    }
    for (auto& t : threads) t.join();
    return batch;
}

WitnessReport witness_from_events(const EventBatch& batch) {
    require(!batch.events.empty(), "witness_from_events: batch must be nonempty");
    const double n = static_cast<double>(batch.events.size());
    std::array<double, 3> sum{};
    std::array<double, 3> sum_sq{};
    for (const auto& ev : batch.events) {
        const Vec3 a = ev.n_lambda.unit();
        const Vec3 b = ev.n_lambdabar.unit();
        for (int i = 0; i < 3; ++i) {
            const double x = 9.0 * a[i] * b[i];
            sum[static_cast<std::size_t>(i)] += x;
            sum_sq[static_cast<std::size_t>(i)] += x * x;
        }
    }
    WitnessReport report;
    double mean_total = 0.0;
    double var_total  = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double mean = sum[static_cast<std::size_t>(i)] / n;
        report.axis_means[static_cast<std::size_t>(i)] = mean;
        mean_total += mean;
        if (batch.events.size() > 1) {
            const double var =
                (sum_sq[static_cast<std::size_t>(i)] - n * mean * mean) / (n - 1.0);
            var_total += var / n;
        }
    }
    report.witness_value  = (1.0 + mean_total) / 3.0;
    report.standard_error = std::sqrt(var_total) / 3.0;
    report.entangled_verdict =
        report.witness_value + 3.0 * report.standard_error < 0.0;
    return report;
}

HyperonChshBound hyperon_chsh_bound(double alpha_L, double alpha_Lbar) {
    require(std::abs(alpha_L) <= 1.0 && std::abs(alpha_Lbar) <= 1.0,
            "hyperon_chsh_bound: |alpha| must be <= 1");
    const double product = alpha_L * alpha_Lbar;
    return {kChshQuantumBound * product, product > 1.0 / std::sqrt(2.0)};
}

void write_events_csv(std::ostream& out, const EventBatch& batch) {
    char buf[200];
    std::snprintf(buf, sizeof(buf), "# seed=%llu alpha_product=%.17g count=%zu\n",
                  static_cast<unsigned long long>(batch.seed), batch.alpha_product,
                  batch.events.size());
    out << buf << "theta_L,phi_L,theta_Lbar,phi_Lbar\n";
    for (const auto& ev : batch.events) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", ev.n_lambda.theta,
                      ev.n_lambda.phi, ev.n_lambdabar.theta, ev.n_lambdabar.phi);
        out << buf;
    }
}

EventBatch read_events_csv(std::istream& in) {
    EventBatch batch;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# seed=", 0) != 0)
        throw std::runtime_error("events csv: missing metadata header");
    unsigned long long seed = 0;
    double alpha_product    = 0.0;
    unsigned long long count = 0;
    if (std::sscanf(line.c_str(), "# seed=%llu alpha_product=%lg count=%llu", &seed,
                    &alpha_product, &count) != 3)
        throw std::runtime_error("events csv: malformed metadata header");
    batch.seed          = seed;
    batch.alpha_product = alpha_product;
    if (!std::getline(in, line) || line != "theta_L,phi_L,theta_Lbar,phi_Lbar")
        throw std::runtime_error("events csv: missing column header");
    batch.events.reserve(count);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Event ev;
        char* end = nullptr;
        const char* p   = line.c_str();
        ev.n_lambda.theta    = std::strtod(p, &end);
        require(*end == ',', "events csv: malformed row");
        ev.n_lambda.phi      = std::strtod(end + 1, &end);
        require(*end == ',', "events csv: malformed row");
        ev.n_lambdabar.theta = std::strtod(end + 1, &end);
        require(*end == ',', "events csv: malformed row");
        ev.n_lambdabar.phi   = std::strtod(end + 1, &end);
        batch.events.push_back(ev);
    }
    if (batch.events.size() != count)
        throw std::runtime_error("events csv: row count disagrees with header");
    return batch;
}

} // namespace bellhep::hyperon
