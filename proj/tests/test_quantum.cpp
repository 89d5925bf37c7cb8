#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "bellhep/quantum.hpp"
#include "test_util.hpp"

using namespace bellhep;
using namespace bellhep::qm;

TEST_CASE("gellmann basis: d=2 gives the Pauli matrices") {
    const auto basis = gellmann_basis(2);
    REQUIRE(basis.size() == 3);
    Matrix sx(2, 2), sy(2, 2), sz(2, 2);
    sx << 0, 1, 1, 0;
    sy << 0, Complex(0, -1), Complex(0, 1), 0;
    sz << 1, 0, 0, -1;
    CHECK((basis[0] - sx).cwiseAbs().maxCoeff() == 0.0);
    CHECK((basis[1] - sy).cwiseAbs().maxCoeff() == 0.0);
    CHECK((basis[2] - sz).cwiseAbs().maxCoeff() == 0.0);
    for (const auto& m : basis) CHECK(std::abs(m.trace()) == 0.0);
}

TEST_CASE("gellmann basis: orthogonality under the trace inner product") {
    for (int d : {2, 3, 4}) {
        const auto basis = gellmann_basis(d);
        REQUIRE(static_cast<int>(basis.size()) == d * d - 1);
        for (std::size_t i = 0; i < basis.size(); ++i) {
            CHECK((basis[i] - basis[i].adjoint()).cwiseAbs().maxCoeff() < 1e-14);
            CHECK(std::abs(basis[i].trace()) < 1e-14);
            for (std::size_t j = 0; j < basis.size(); ++j) {
                const Complex gram = testutil::trace_product_oracle(basis[i], basis[j]);
                CHECK(std::abs(gram - (i == j ? 2.0 : 0.0)) < 1e-12);
            }
        }
    }
}

TEST_CASE("gellmann basis: invalid dimension") {
    CHECK_THROWS_AS(gellmann_basis(1), std::invalid_argument);
}

TEST_CASE("bloch map: fixed points") {
    BlochExpansion zero{2, Eigen::VectorXd::Zero(3)};
    const auto mixed = density_from_bloch(zero);
    CHECK((mixed.matrix() - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);

    Eigen::VectorXd north(3);
    north << 0, 0, 1;
    const auto up = density_from_bloch({2, north});
    Matrix expected(2, 2);
    expected << 1, 0, 0, 0;
    CHECK((up.matrix() - expected).cwiseAbs().maxCoeff() < 1e-15);
    // North pole is pure: |b| = 1.
    CHECK(bloch_from_density(up).coefficients.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bloch map: round trip within 1e-12 for random states, d in {2,3}") {
    testutil::SplitMix64 g(2024);
    for (int d : {2, 3}) {
        for (int rep = 0; rep < 5000; ++rep) {
            const DensityOperator rho{testutil::random_density_matrix(d, g)};
            const auto b = bloch_from_density(rho);
            const auto back = density_from_bloch(b);
            CHECK((back.matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-12);
            const auto b2 = bloch_from_density(back);
            CHECK((b2.coefficients - b.coefficients).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("bloch map: length mismatch") {
    CHECK_THROWS_AS(density_from_bloch({3, Eigen::VectorXd::Zero(3)}), std::invalid_argument);
}

TEST_CASE("tensor: identities and basis states") {
    const Matrix id2 = Matrix::Identity(2, 2);
    CHECK((tensor(id2, id2) - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);

    const auto up      = StateVector::basis(2, 0);
    const auto down    = StateVector::basis(2, 1);
    const auto updown  = tensor(up, down);
    CHECK(updown.dim() == 4);
    CHECK(std::abs(updown.amplitudes()[1] - 1.0) == 0.0);

    // Oracle: kron by explicit loops on random matrices.
    testutil::SplitMix64 g(7);
    const Matrix a = testutil::random_complex_matrix(2, 3, g);
    const Matrix b = testutil::random_complex_matrix(3, 2, g);
    CHECK((tensor(a, b) - testutil::kron_oracle(a, b)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("tensor: sigma_z x sigma_z on the singlet") {
    // Direct 4-dim oracle evaluation.
    const auto psi = singlet();
    const Matrix op = testutil::kron_oracle(pauli(2), pauli(2));
    const Matrix rho = psi.amplitudes() * psi.amplitudes().adjoint();
    const Complex direct = testutil::trace_product_oracle(op, rho);
    CHECK(std::abs(direct - Complex(-1.0)) < 1e-14);
    CHECK(expectation(Observable(tensor(pauli(2), pauli(2)), true),
                      DensityOperator::from_state(psi)) == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("partial trace: entangled and product states") {
    const auto rho_singlet = DensityOperator::from_state(singlet());
    const auto reduced = partial_trace(rho_singlet, 2, 2, Subsystem::B);
    CHECK((reduced.matrix() - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);

    testutil::SplitMix64 g(11);
    const DensityOperator rho_a{testutil::random_density_matrix(2, g)};
    const DensityOperator rho_b{testutil::random_density_matrix(3, g)};
    const auto back = partial_trace(tensor(rho_a, rho_b), 2, 3, Subsystem::B);
    CHECK((back.matrix() - rho_a.matrix()).cwiseAbs().maxCoeff() < 1e-12);
    const auto back_b = partial_trace(tensor(rho_a, rho_b), 2, 3, Subsystem::A);
    CHECK((back_b.matrix() - rho_b.matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("partial trace: preserves trace, rejects bad factorization") {
    testutil::SplitMix64 g(13);
    for (int rep = 0; rep < 200; ++rep) {
        const DensityOperator rho{testutil::random_density_matrix(4, g, 0.3 + 0.7 * g.next_double())};
        const auto traced = partial_trace(rho, 2, 2, Subsystem::A);
        CHECK(traced.trace() == doctest::Approx(rho.trace()).epsilon(1e-12));
    }
    const DensityOperator rho{testutil::random_density_matrix(4, g)};
    CHECK_THROWS_AS(partial_trace(rho, 3, 2, Subsystem::A), std::invalid_argument);
}

TEST_CASE("apply_channel: identity and dephasing fixed points") {
    const auto mixed = DensityOperator::maximally_mixed(2);
    const KrausChannel identity(2, 2, {Matrix::Identity(2, 2)});
    CHECK((apply_channel(identity, mixed).matrix() - mixed.matrix()).cwiseAbs().maxCoeff() == 0.0);

    Matrix p_up(2, 2), p_down(2, 2);
    p_up << 1, 0, 0, 0;
    p_down << 0, 0, 0, 1;
    const KrausChannel dephase(2, 2, {p_up, p_down});
    CHECK((apply_channel(dephase, mixed).matrix() - mixed.matrix()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("apply_channel: trace never grows, positivity preserved") {
    testutil::SplitMix64 g(17);
    int done = 0;
    while (done < 10000) {
        for (int d : {2, 3, 4}) {
            const auto ops = testutil::random_kraus_set(d, 1 + static_cast<int>(g.next_below(3)), g);
            const KrausChannel channel(d, d, ops);
            const DensityOperator rho{
                testutil::random_density_matrix(d, g, 0.2 + 0.8 * g.next_double())};
            const auto out = apply_channel(channel, rho);
            CHECK(out.trace() <= rho.trace() + 1e-10);
            Eigen::SelfAdjointEigenSolver<Matrix> solver(out.matrix(), Eigen::EigenvaluesOnly);
            CHECK(solver.eigenvalues().minCoeff() > -1e-10);
            ++done;
        }
    }
}

TEST_CASE("apply_channel: dimension mismatch") {
    const KrausChannel identity(2, 2, {Matrix::Identity(2, 2)});
    CHECK_THROWS_AS(apply_channel(identity, DensityOperator::maximally_mixed(3)),
                    std::invalid_argument);
}

TEST_CASE("expectation: identity, mixed state, non-Hermitian rejection") {
    const auto mixed = DensityOperator::maximally_mixed(2);
    CHECK(expectation(Observable(Matrix::Identity(2, 2)), mixed) == doctest::Approx(1.0));
    CHECK(expectation(Observable(pauli(2), true), mixed) == doctest::Approx(0.0));
    Matrix bad(2, 2);
    bad << 0, 1, 0, 0;
    CHECK_THROWS_AS(Observable{bad}, std::invalid_argument);
}

TEST_CASE("expectation: singlet correlation equals -a.b") {
    testutil::SplitMix64 g(19);
    const auto rho = DensityOperator::from_state(singlet());
    for (int rep = 0; rep < 1000; ++rep) {
        const Vec3 a = testutil::random_unit_vector(g);
        const Vec3 b = testutil::random_unit_vector(g);
        const double e = expectation(tensor(spin_along(a), spin_along(b)), rho);
        CHECK(std::abs(e + a.dot(b)) < 1e-12);
    }
}

TEST_CASE("density operator: constructor enforces the structural invariants") {
    Matrix not_hermitian(2, 2);
    not_hermitian << 0.5, Complex(0.1, 0.2), Complex(0.1, -0.1), 0.5;
    CHECK_THROWS_AS(DensityOperator{not_hermitian}, std::invalid_argument);

    Matrix negative(2, 2);
    negative << 0.5, 0.6, 0.6, 0.5;
    CHECK_THROWS_AS(DensityOperator{negative}, std::invalid_argument);

    CHECK_THROWS_AS(DensityOperator{2.0 * Matrix::Identity(2, 2)}, std::invalid_argument);
}

TEST_CASE("state vector: sub-normalized allowed, over-normalized rejected") {
    Vector v(2);
    v << 0.5, 0.5;
    CHECK(StateVector(v).squared_norm() == doctest::Approx(0.5));
    v << 1.0, 1.0;
    CHECK_THROWS_AS(StateVector{v}, std::invalid_argument);
}

TEST_CASE("observable: dichotomic flag checks the spectrum") {
    CHECK_NOTHROW(Observable(pauli(0), true));
    CHECK_THROWS_AS(Observable(0.5 * pauli(0), true), std::invalid_argument);
}
