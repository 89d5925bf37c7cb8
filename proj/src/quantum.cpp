#include "bellhep/quantum.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace bellhep::qm {

namespace {

void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

double hermiticity_residual(const Matrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const Matrix& hermitian) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& hermitian) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().maxCoeff();
}

} // namespace

StateVector::StateVector(Vector amplitudes) : amplitudes_(std::move(amplitudes)) {
    require(amplitudes_.size() > 0, "StateVector: dimension must be positive");
    require(amplitudes_.allFinite(), "StateVector: amplitudes must be finite");
    require(amplitudes_.squaredNorm() <= 1.0 + tolerances().structural,
            "StateVector: squared norm exceeds 1");
}

StateVector StateVector::basis(int dim, int index) {
    require(dim > 0 && index >= 0 && index < dim, "StateVector::basis: bad index");
    Vector v = Vector::Zero(dim);
    v[index] = 1.0;
    return StateVector(std::move(v));
}

DensityOperator::DensityOperator(Matrix matrix) : matrix_(std::move(matrix)) {
    require(matrix_.rows() > 0 && matrix_.rows() == matrix_.cols(),
            "DensityOperator: matrix must be square and non-empty");
    require(matrix_.allFinite(), "DensityOperator: entries must be finite");
    const double tol = tolerances().structural;
    require(hermiticity_residual(matrix_) < tol, "DensityOperator: not Hermitian");
    require(min_eigenvalue(matrix_) > -tol, "DensityOperator: negative eigenvalue");
    const double tr = matrix_.trace().real();
    require(tr >= -tol && tr <= 1.0 + tol, "DensityOperator: trace outside [0, 1]");
}

DensityOperator DensityOperator::from_state(const StateVector& psi) {
    return DensityOperator(psi.amplitudes() * psi.amplitudes().adjoint());
}

DensityOperator DensityOperator::maximally_mixed(int dim) {
    require(dim > 0, "maximally_mixed: dimension must be positive");
    return DensityOperator(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

Observable::Observable(Matrix matrix, bool dichotomic)
    : matrix_(std::move(matrix)), dichotomic_(dichotomic) {
    require(matrix_.rows() > 0 && matrix_.rows() == matrix_.cols(),
            "Observable: matrix must be square and non-empty");
    const double tol = tolerances().structural;
    require(hermiticity_residual(matrix_) < tol, "Observable: not Hermitian");
    if (dichotomic_) {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(matrix_, Eigen::EigenvaluesOnly);
        for (int i = 0; i < solver.eigenvalues().size(); ++i) {
            require(std::abs(std::abs(solver.eigenvalues()[i]) - 1.0) < 1e-9,
                    "Observable: dichotomic flag requires eigenvalues +-1");
        }
    }
}

KrausChannel::KrausChannel(int dim_in, int dim_out, std::vector<Matrix> operators)
    : dim_in_(dim_in), dim_out_(dim_out), operators_(std::move(operators)) {
    require(dim_in_ > 0 && dim_out_ > 0, "KrausChannel: dimensions must be positive");
    require(!operators_.empty(), "KrausChannel: needs at least one operator");
    Matrix sum = Matrix::Zero(dim_in_, dim_in_);
    for (const auto& k : operators_) {
        require(k.rows() == dim_out_ && k.cols() == dim_in_,
                "KrausChannel: operator shape mismatch");
        sum += k.adjoint() * k;
    }
    require(max_eigenvalue(sum) <= 1.0 + tolerances().structural,
            "KrausChannel: sum K^dag K exceeds identity");
}

std::vector<Matrix> gellmann_basis(int d) {
    if (d < 2) throw std::invalid_argument("gellmann_basis: dimension must be >= 2");
    std::vector<Matrix> basis;
    basis.reserve(static_cast<std::size_t>(d) * d - 1);
    const Complex i_unit(0.0, 1.0);
    // Symmetric off-diagonal: E_jk + E_kj.
    for (int j = 0; j < d; ++j) {
        for (int k = j + 1; k < d; ++k) {
            Matrix m = Matrix::Zero(d, d);
            m(j, k) = 1.0;
            m(k, j) = 1.0;
            basis.push_back(std::move(m));
        }
    }
    // Antisymmetric off-diagonal: -i(E_jk - E_kj).
    for (int j = 0; j < d; ++j) {
        for (int k = j + 1; k < d; ++k) {
            Matrix m = Matrix::Zero(d, d);
            m(j, k) = -i_unit;
            m(k, j) = i_unit;
            basis.push_back(std::move(m));
        }
    }
    // Diagonal: sqrt(2/(l(l+1))) (sum_{j<=l} E_jj - l E_{l+1,l+1}).
    for (int l = 1; l < d; ++l) {
        Matrix m = Matrix::Zero(d, d);
        const double scale = std::sqrt(2.0 / (l * (l + 1.0)));
        for (int j = 0; j < l; ++j) m(j, j) = scale;
        m(l, l) = -scale * l;
        basis.push_back(std::move(m));
    }
    return basis;
}

DensityOperator density_from_bloch(const BlochExpansion& b) {
    if (b.dim < 2) throw std::invalid_argument("density_from_bloch: dimension must be >= 2");
    if (b.coefficients.size() != static_cast<Eigen::Index>(b.dim) * b.dim - 1)
        throw std::invalid_argument("density_from_bloch: coefficient length mismatch");
    const auto basis = gellmann_basis(b.dim);
    Matrix m = Matrix::Identity(b.dim, b.dim);
    for (std::size_t i = 0; i < basis.size(); ++i)
        m += b.coefficients[static_cast<Eigen::Index>(i)] * basis[i];
    return DensityOperator(m / static_cast<double>(b.dim));
}

BlochExpansion bloch_from_density(const DensityOperator& rho) {
    const int d = rho.dim();
    const auto basis = gellmann_basis(d);
    BlochExpansion b;
    b.dim = d;
    b.coefficients.resize(static_cast<Eigen::Index>(d) * d - 1);
    // With Tr(G_i G_j) = 2 delta_ij the inverse map is b_i = (d/2) Tr(G_i rho).
    for (std::size_t i = 0; i < basis.size(); ++i)
        b.coefficients[static_cast<Eigen::Index>(i)] =
            0.5 * d * (basis[i] * rho.matrix()).trace().real();
    return b;
}

Matrix tensor(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

StateVector tensor(const StateVector& a, const StateVector& b) {
    Vector out(static_cast<Eigen::Index>(a.dim()) * b.dim());
    for (int i = 0; i < a.dim(); ++i)
        out.segment(static_cast<Eigen::Index>(i) * b.dim(), b.dim()) =
            a.amplitudes()[i] * b.amplitudes();
    return StateVector(std::move(out));
}

DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
    return DensityOperator(tensor(a.matrix(), b.matrix()));
}

Observable tensor(const Observable& a, const Observable& b) {
    return Observable(tensor(a.matrix(), b.matrix()), a.dichotomic() && b.dichotomic());
}

DensityOperator partial_trace(const DensityOperator& rho, int dim_a, int dim_b,
                              Subsystem traced_out) {
    if (dim_a < 1 || dim_b < 1 || dim_a * dim_b != rho.dim())
        throw std::invalid_argument("partial_trace: dimension does not factorize as declared");
    const Matrix& m = rho.matrix();
    if (traced_out == Subsystem::B) {
        Matrix out = Matrix::Zero(dim_a, dim_a);
        for (int i = 0; i < dim_a; ++i)
            for (int j = 0; j < dim_a; ++j)
                for (int k = 0; k < dim_b; ++k)
                    out(i, j) += m(i * dim_b + k, j * dim_b + k);
        return DensityOperator(std::move(out));
    }
    Matrix out = Matrix::Zero(dim_b, dim_b);
    for (int i = 0; i < dim_b; ++i)
        for (int j = 0; j < dim_b; ++j)
            for (int k = 0; k < dim_a; ++k)
                out(i, j) += m(k * dim_b + i, k * dim_b + j);
    return DensityOperator(std::move(out));
}

DensityOperator apply_channel(const KrausChannel& channel, const DensityOperator& rho) {
    if (channel.dim_in() != rho.dim())
        throw std::invalid_argument("apply_channel: dimension mismatch");
    Matrix out = Matrix::Zero(channel.dim_out(), channel.dim_out());
    for (const auto& k : channel.operators()) out += k * rho.matrix() * k.adjoint();
    return DensityOperator(std::move(out));
}

double expectation(const Observable& obs, const DensityOperator& rho) {
    if (obs.dim() != rho.dim())
        throw std::invalid_argument("expectation: dimension mismatch");
    const Complex tr = (obs.matrix() * rho.matrix()).trace();
    if (std::abs(tr.imag()) > tolerances().structural)
        throw std::invalid_argument("expectation: non-real result");
    return tr.real();
}

const Matrix& pauli(int i) {
    static const std::vector<Matrix> sigma = gellmann_basis(2);
    if (i < 0 || i > 2) throw std::invalid_argument("pauli: index must be 0, 1 or 2");
    return sigma[static_cast<std::size_t>(i)];
}

Observable spin_along(const Vec3& n) {
    if (std::abs(n.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("spin_along: direction must be a unit vector");
    return Observable(n.x() * pauli(0) + n.y() * pauli(1) + n.z() * pauli(2), true);
}

StateVector singlet() {
    Vector v = Vector::Zero(4);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    v[1] = inv_sqrt2;  // |01>
    v[2] = -inv_sqrt2; // |10>
    return StateVector(std::move(v));
}

} // namespace bellhep::qm
