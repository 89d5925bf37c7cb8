#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bellhep/hyperon.hpp"
#include "bellhep/quantum.hpp"
#include "test_util.hpp"

using namespace bellhep;
using namespace bellhep::hyperon;

namespace {

/// Spherical product rule: Gauss-Legendre in cos(theta), uniform in phi.
/// Exact for the low-order trigonometric integrands used here.
template <typename F>
double sphere_integral(const F& f, const testutil::Quadrature& q, int n_phi) {
    double total = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        const double theta = std::acos(q.nodes[i]);
        for (int j = 0; j < n_phi; ++j) {
            const double phi = 2.0 * kPi * (j + 0.5) / n_phi;
            total += q.weights[i] * (2.0 * kPi / n_phi) * f(theta, phi);
        }
    }
    return total;
}

/// Separable-but-classically-correlated toy source: a shared random axis
/// u per event, each side drawn from its own single-particle density
/// (1 +- alpha u.n)/(4 pi). Maximal classical correlation this channel
/// can carry, with no entanglement anywhere.
EventBatch separable_toy_batch(double alpha_L, double alpha_Lbar, std::size_t count,
                               std::uint64_t seed) {
    EventBatch batch;
    batch.seed          = seed;
    batch.alpha_product = alpha_L * alpha_Lbar;
    batch.events.reserve(count);
    auto sample_about = [](const Vec3& axis, double correlation, testutil::SplitMix64& g) {
        // Inverse CDF of (1 + correlation * c)/2 on [-1, 1].
        const double u = g.next_double();
        double c;
        if (std::abs(correlation) < 1e-12) {
            c = 2.0 * u - 1.0;
        } else {
            const double a = -correlation;
            c = (1.0 - std::sqrt(std::max(0.0, 1.0 - a * (4.0 * u - 2.0 - a)))) / a;
        }
        c = std::clamp(c, -1.0, 1.0);
        const double psi = 2.0 * kPi * g.next_double();
        Vec3 e1 = axis.unitOrthogonal();
        Vec3 e2 = axis.cross(e1);
        const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
        return Vec3(c * axis + s * (std::cos(psi) * e1 + std::sin(psi) * e2));
    };
    for (std::size_t i = 0; i < count; ++i) {
        auto g = bellhep::rng::stream_for(seed, i);
        const Vec3 axis = bellhep::rng::uniform_unit_vector(g);
        const Vec3 n = sample_about(axis, alpha_L, g);
        const Vec3 m = sample_about(axis, -alpha_Lbar, g);
        batch.events.push_back(
            {DecayDirection::from_unit(n.normalized()), DecayDirection::from_unit(m.normalized())});
    }
    return batch;
}

} // namespace

TEST_CASE("species: validation rules") {
    CHECK_NOTHROW(HyperonSpecies::spin_half(0.642));
    CHECK_THROWS_AS(HyperonSpecies::spin_half(1.2), std::invalid_argument);

    HyperonSpecies bad = HyperonSpecies::spin_half(0.5);
    bad.omega1 = Vec3(0.1, 0.0, 0.0); // breaks both omega1=0 and the length rule
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    HyperonSpecies not_orthogonal;
    not_orthogonal.spin   = 1.0;
    not_orthogonal.alpha  = 0.3;
    not_orthogonal.omega1 = Vec3(1.0, 0.0, 0.0);
    not_orthogonal.omega2 = Vec3(1.0, 1.0, 0.0);
    CHECK_THROWS_AS(not_orthogonal.validate(), std::invalid_argument);

    // Valid spin-1 species: |omega1|^2 + |omega2|^2 = s(2s+1) = 3.
    HyperonSpecies spin1;
    spin1.spin   = 1.0;
    spin1.alpha  = 0.3;
    spin1.omega1 = Vec3(0.0, 0.0, 0.0);
    spin1.omega2 = std::sqrt(3.0) * Vec3::UnitZ();
    CHECK_NOTHROW(spin1.validate());
}

TEST_CASE("kraus_from_species: spin-1/2 projectors along +-omega2") {
    const auto h  = HyperonSpecies::spin_half(0.642, Vec3::UnitZ());
    const auto ch = kraus_from_species(h);
    REQUIRE(ch.operators().size() == 2);
    const double w_plus  = 0.5 * (1.0 + h.alpha);
    const double w_minus = 0.5 * (1.0 - h.alpha);
    Matrix k_plus(2, 2), k_minus(2, 2);
    k_plus << std::sqrt(w_plus), 0, 0, 0;
    k_minus << 0, 0, 0, std::sqrt(w_minus);
    CHECK((ch.operators()[0] - k_plus).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((ch.operators()[1] - k_minus).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("kraus_from_species: alpha = 0 gives the symmetric switch") {
    const auto ch = kraus_from_species(HyperonSpecies::spin_half(0.0, Vec3::UnitX()));
    for (const auto& k : ch.operators())
        CHECK((k.adjoint() * k).trace().real() == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("kraus_from_species: coherent projector reduces to the Pauli form at s = 1/2") {
    testutil::SplitMix64 g(311);
    for (int rep = 0; rep < 200; ++rep) {
        const Vec3 n = testutil::random_unit_vector(g);
        const auto ch = kraus_from_species(HyperonSpecies::spin_half(0.3, n));
        // K_+ / sqrt(w_+) must equal (1 + n.sigma)/2.
        const Matrix pi_plus = ch.operators()[0] / std::sqrt(0.5 * (1.0 + 0.3));
        const Matrix pauli_form =
            0.5 * (Matrix::Identity(2, 2) + n.x() * qm::pauli(0) + n.y() * qm::pauli(1) +
                   n.z() * qm::pauli(2));
        CHECK((pi_plus - pauli_form).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("kraus_from_species: channel action matches direct 2x2 arithmetic") {
    testutil::SplitMix64 g(313);
    for (int rep = 0; rep < 200; ++rep) {
        const Vec3 n    = testutil::random_unit_vector(g);
        const double a  = 2.0 * g.next_double() - 1.0;
        const auto h    = HyperonSpecies::spin_half(a, n);
        const auto ch   = kraus_from_species(h);
        const qm::DensityOperator rho{testutil::random_density_matrix(2, g)};
        const auto out = qm::apply_channel(ch, rho);

        // Oracle: rho' = sum_pm w_pm <pm|rho|pm> |pm><pm| for rank-1
        // projectors, built from explicit Pauli algebra.
        Matrix expected = Matrix::Zero(2, 2);
        for (int sign : {+1, -1}) {
            const Vec3 axis = sign * n;
            const Matrix proj =
                0.5 * (Matrix::Identity(2, 2) + axis.x() * qm::pauli(0) +
                       axis.y() * qm::pauli(1) + axis.z() * qm::pauli(2));
            const double weight = 0.5 * (1.0 + sign * a);
            expected += weight * (proj * rho.matrix() * proj);
        }
        CHECK((out.matrix() - expected).cwiseAbs().maxCoeff() < 1e-13);
        // The map is trace-decreasing: the output trace is Tr(sum K^dag K rho),
        // not Tr(rho), because the weighted projector pair resolves identity
        // only at alpha = 0.
        Matrix contraction = Matrix::Zero(2, 2);
        for (const auto& k : ch.operators()) contraction += k.adjoint() * k;
        CHECK(out.trace() ==
              doctest::Approx((contraction * rho.matrix()).trace().real()).epsilon(1e-12));
    }
}

TEST_CASE("kraus_from_species: contraction bound for 1e3 random species") {
    testutil::SplitMix64 g(317);
    for (int rep = 0; rep < 1000; ++rep) {
        const auto h  = HyperonSpecies::spin_half(2.0 * g.next_double() - 1.0,
                                                  testutil::random_unit_vector(g));
        const auto ch = kraus_from_species(h); // constructor enforces sum K^dag K <= 1
        Matrix sum = Matrix::Zero(2, 2);
        for (const auto& k : ch.operators()) sum += k.adjoint() * k;
        Eigen::SelfAdjointEigenSolver<Matrix> solver(sum, Eigen::EigenvaluesOnly);
        CHECK(solver.eigenvalues().maxCoeff() <= 1.0 + 1e-10);
        // sum K^dag K = w+ P+ + w- P-: its spectrum is exactly {w+, w-}.
        CHECK(solver.eigenvalues().maxCoeff() ==
              doctest::Approx(0.5 * (1.0 + std::abs(h.alpha))).epsilon(1e-12));
        CHECK(solver.eigenvalues().minCoeff() ==
              doctest::Approx(0.5 * (1.0 - std::abs(h.alpha))).epsilon(1e-12));
    }
}

TEST_CASE("kraus_from_species: spin-1 species forms a valid channel") {
    HyperonSpecies spin1;
    spin1.spin   = 1.0;
    spin1.alpha  = 0.25;
    spin1.omega1 = Vec3::Zero();
    spin1.omega2 = std::sqrt(3.0) * Vec3::UnitZ();
    const auto ch = kraus_from_species(spin1);
    CHECK(ch.dim_in() == 3);
    // Weighted projectors onto the m = +-1 states along z: on the
    // maximally mixed state the output trace is (w+ + w-)/3 = 1/3.
    const auto out = qm::apply_channel(ch, qm::DensityOperator::maximally_mixed(3));
    CHECK(out.trace() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("single_angular_pdf: isotropy and polarized closed form") {
    const auto h     = HyperonSpecies::spin_half(0.642);
    const auto mixed = qm::DensityOperator::maximally_mixed(2);
    for (double theta : {0.0, 1.0, 2.5}) {
        CHECK(single_angular_pdf(mixed, h, {theta, 0.3}) ==
              doctest::Approx(1.0 / (4.0 * kPi)).epsilon(1e-13));
    }

    const auto spin_up = qm::DensityOperator::from_state(qm::StateVector::basis(2, 0));
    CHECK(single_angular_pdf(spin_up, h, {0.0, 0.0}) ==
          doctest::Approx((1.0 + h.alpha) / (4.0 * kPi)).epsilon(1e-13));
    CHECK(single_angular_pdf(spin_up, h, {kPi, 0.0}) ==
          doctest::Approx((1.0 - h.alpha) / (4.0 * kPi)).epsilon(1e-13));

    // alpha = 0 randomizes the measurement direction completely.
    testutil::SplitMix64 g(331);
    const auto h0 = HyperonSpecies::spin_half(0.0);
    for (int rep = 0; rep < 50; ++rep) {
        const qm::DensityOperator rho{testutil::random_density_matrix(2, g)};
        const auto dir = DecayDirection::from_unit(testutil::random_unit_vector(g));
        CHECK(single_angular_pdf(rho, h0, dir) ==
              doctest::Approx(1.0 / (4.0 * kPi)).epsilon(1e-13));
    }
}

TEST_CASE("single_angular_pdf: normalized and non-negative for random states") {
    testutil::SplitMix64 g(337);
    const auto quad = testutil::gauss_legendre(24);
    for (int rep = 0; rep < 20; ++rep) {
        const auto h = HyperonSpecies::spin_half(2.0 * g.next_double() - 1.0,
                                                 testutil::random_unit_vector(g));
        const qm::DensityOperator rho{testutil::random_density_matrix(2, g)};
        const double total = sphere_integral(
            [&](double theta, double phi) {
                const double p = single_angular_pdf(rho, h, {theta, phi});
                CHECK(p >= 0.0);
                return p;
            },
            quad, 48);
        CHECK(std::abs(total - 1.0) < 1e-6);
    }
}

TEST_CASE("joint_angular_pdf: values, normalization and moments") {
    const DecayDirection z{0.0, 0.0};
    const double uniform = 1.0 / (16.0 * kPi * kPi);
    CHECK(joint_angular_pdf(0.0, 0.5, z, z) == doctest::Approx(uniform));
    // Parallel daughters at the paper's product: the distribution minimum.
    const double a = 0.46;
    CHECK(joint_angular_pdf(std::sqrt(a), std::sqrt(a), z, z) ==
          doctest::Approx(uniform * (1.0 - a)).epsilon(1e-12));

    const auto quad = testutil::gauss_legendre(16);
    const int n_phi = 24;
    double total = 0.0;
    double moment_zz = 0.0, moment_xy = 0.0;
    // Product quadrature over both spheres.
    for (std::size_t i = 0; i < quad.nodes.size(); ++i)
        for (int j = 0; j < n_phi; ++j)
            for (std::size_t k = 0; k < quad.nodes.size(); ++k)
                for (int l = 0; l < n_phi; ++l) {
                    const DecayDirection d1{std::acos(quad.nodes[i]),
                                            2.0 * kPi * (j + 0.5) / n_phi};
                    const DecayDirection d2{std::acos(quad.nodes[k]),
                                            2.0 * kPi * (l + 0.5) / n_phi};
                    const double w = quad.weights[i] * quad.weights[k] *
                                     (2.0 * kPi / n_phi) * (2.0 * kPi / n_phi);
                    const double p = joint_angular_pdf(std::sqrt(a), std::sqrt(a), d1, d2);
                    total += w * p;
                    moment_zz += w * p * d1.unit().z() * d2.unit().z();
                    moment_xy += w * p * d1.unit().x() * d2.unit().y();
                }
    CHECK(std::abs(total - 1.0) < 1e-6);
    // E[n_i m_j] = -(alpha product) delta_ij / 9: the factor-9 estimator rule.
    CHECK(std::abs(moment_zz - (-a / 9.0)) < 1e-9);
    CHECK(std::abs(moment_xy) < 1e-9);
}

TEST_CASE("sample_events: determinism and worker independence") {
    const auto one    = sample_events(0.6, 0.5, 5000, 99);
    const auto two    = sample_events(0.6, 0.5, 5000, 99);
    const auto forked = sample_events(0.6, 0.5, 5000, 99, 3);
    REQUIRE(one.events.size() == 5000);
    for (std::size_t i = 0; i < one.events.size(); ++i) {
        CHECK(one.events[i].n_lambda.theta == two.events[i].n_lambda.theta);
        CHECK(one.events[i].n_lambda.theta == forked.events[i].n_lambda.theta);
        CHECK(one.events[i].n_lambdabar.phi == forked.events[i].n_lambdabar.phi);
    }
    CHECK_THROWS_AS(sample_events(0.6, 0.5, 0, 1), std::invalid_argument);
}

TEST_CASE("sample_events: relative-cosine distribution matches the linear density") {
    const double a = 0.46;
    const auto batch = sample_events(std::sqrt(a), std::sqrt(a), 200000, 7);
    const double n = static_cast<double>(batch.events.size());
    // Mean of chi: E[chi] = -a/3.
    double mean = 0.0, mean_sq = 0.0;
    for (const auto& ev : batch.events) {
        const double chi = ev.n_lambda.unit().dot(ev.n_lambdabar.unit());
        mean += chi;
        mean_sq += chi * chi;
    }
    mean /= n;
    mean_sq /= n;
    const double sigma_mean = std::sqrt((mean_sq - mean * mean) / n);
    CHECK(std::abs(mean - (-a / 3.0)) < 3.0 * sigma_mean);
    // Second moment of the linear density is 1/3 regardless of a.
    CHECK(std::abs(mean_sq - 1.0 / 3.0) < 3.0 * std::sqrt(0.2 / n));

    // CDF check at a few fixed abscissae, 3 sigma binomial bands.
    for (double x : {-0.5, 0.0, 0.5}) {
        const double expected = 0.5 * (x + 1.0) - 0.25 * a * (x * x - 1.0);
        double below = 0.0;
        for (const auto& ev : batch.events)
            if (ev.n_lambda.unit().dot(ev.n_lambdabar.unit()) <= x) below += 1.0;
        below /= n;
        CHECK(std::abs(below - expected) < 3.0 * std::sqrt(expected * (1.0 - expected) / n));
    }

    // Uncorrelated case: mean within 3 sigma of zero.
    const auto flat = sample_events(0.0, 0.9, 100000, 11);
    double mean0 = 0.0;
    for (const auto& ev : flat.events)
        mean0 += ev.n_lambda.unit().dot(ev.n_lambdabar.unit());
    mean0 /= static_cast<double>(flat.events.size());
    CHECK(std::abs(mean0) < 3.0 / std::sqrt(3.0 * static_cast<double>(flat.events.size())));
}

TEST_CASE("witness_from_events: entangled source at the paper's product") {
    const double a = 0.46;
    const auto batch  = sample_events(std::sqrt(a), std::sqrt(a), 1000000, 42);
    const auto report = witness_from_events(batch);
    CHECK(report.standard_error > 0.0);
    CHECK(report.standard_error < 5e-3);
    CHECK(std::abs(report.witness_value - (1.0 / 3.0 - a)) < 3.0 * report.standard_error);
    CHECK(report.entangled_verdict);
    // Per-axis means estimate -(alpha product).
    for (double axis_mean : report.axis_means)
        CHECK(std::abs(axis_mean - (-a)) < 0.02);
}

TEST_CASE("witness_from_events: uncorrelated and boundary products") {
    const auto flat = witness_from_events(sample_events(0.0, 0.7, 200000, 5));
    CHECK(std::abs(flat.witness_value - 1.0 / 3.0) < 3.0 * flat.standard_error);
    CHECK_FALSE(flat.entangled_verdict);

    const double boundary = 1.0 / 3.0;
    const auto edge =
        witness_from_events(sample_events(std::sqrt(boundary), std::sqrt(boundary), 200000, 6));
    CHECK(std::abs(edge.witness_value) < 3.0 * edge.standard_error);

    CHECK_THROWS_AS(witness_from_events(EventBatch{}), std::invalid_argument);
}

TEST_CASE("witness_from_events: separable correlated source never certifies") {
    // The no-renormalization rule: a classically correlated product source
    // reaches witness (1 - alpha product)/3 >= 0; over 100 trials the
    // 3-sigma verdict must never fire.
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        const auto batch  = separable_toy_batch(0.642, 0.71, 2000, 1000 + trial);
        const auto report = witness_from_events(batch);
        CHECK(report.witness_value + 3.0 * report.standard_error >= 0.0);
        CHECK_FALSE(report.entangled_verdict);
    }
}

TEST_CASE("hyperon_chsh_bound: paper product, perfect analyzers, threshold") {
    const auto at_paper = hyperon_chsh_bound(std::sqrt(0.46), std::sqrt(0.46));
    CHECK(at_paper.max_s == doctest::Approx(2.0 * std::sqrt(2.0) * 0.46).epsilon(1e-12));
    CHECK(at_paper.max_s < 2.0);
    CHECK_FALSE(at_paper.violated);

    const auto perfect = hyperon_chsh_bound(1.0, 1.0);
    CHECK(perfect.max_s == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
    CHECK(perfect.violated);

    const double r = 1.0 / std::sqrt(2.0);
    const auto threshold = hyperon_chsh_bound(1.0, r);
    CHECK(std::abs(threshold.max_s - 2.0) < 1e-12);
    CHECK_FALSE(threshold.violated);

    CHECK_THROWS_AS(hyperon_chsh_bound(1.2, 0.5), std::invalid_argument);
}

TEST_CASE("events csv: bit-exact round trip") {
    const auto batch = sample_events(0.6, 0.76, 500, 2024);
    std::ostringstream out;
    write_events_csv(out, batch);
    std::istringstream in(out.str());
    const auto back = read_events_csv(in);
    REQUIRE(back.events.size() == batch.events.size());
    CHECK(back.seed == batch.seed);
    CHECK(back.alpha_product == batch.alpha_product);
    for (std::size_t i = 0; i < batch.events.size(); ++i) {
        CHECK(back.events[i].n_lambda.theta == batch.events[i].n_lambda.theta);
        CHECK(back.events[i].n_lambda.phi == batch.events[i].n_lambda.phi);
        CHECK(back.events[i].n_lambdabar.theta == batch.events[i].n_lambdabar.theta);
        CHECK(back.events[i].n_lambdabar.phi == batch.events[i].n_lambdabar.phi);
    }
    const auto w1 = witness_from_events(batch);
    const auto w2 = witness_from_events(back);
    CHECK(w1.witness_value == w2.witness_value);
    CHECK(w1.standard_error == w2.standard_error);

    std::istringstream bad("nonsense\n");
    CHECK_THROWS(read_events_csv(bad));
}
