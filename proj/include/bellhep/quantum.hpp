#pragma once

#include <vector>

#include "bellhep/common.hpp"

namespace bellhep::qm {

/// Pure (or sub-normalized) state vector. Squared norm up to 1; norm
/// loss is interpreted as accumulated decay probability, so vectors with
/// norm < 1 are first-class values, not errors.
class StateVector {
  public:
    explicit StateVector(Vector amplitudes);

    int dim() const { return static_cast<int>(amplitudes_.size()); }
    const Vector& amplitudes() const { return amplitudes_; }
    double squared_norm() const { return amplitudes_.squaredNorm(); }

    static StateVector basis(int dim, int index);

  private:
    Vector amplitudes_;
};

/// Hermitian positive-semidefinite operator with 0 <= trace <= 1.
/// Sub-normalized density operators encode decay loss.
class DensityOperator {
  public:
    explicit DensityOperator(Matrix matrix);

    int dim() const { return static_cast<int>(matrix_.rows()); }
    const Matrix& matrix() const { return matrix_; }
    double trace() const { return matrix_.trace().real(); }

    static DensityOperator from_state(const StateVector& psi);
    static DensityOperator maximally_mixed(int dim);

  private:
    Matrix matrix_;
};

/// Coefficients b of rho = (1/d){ 1_d + b . Gamma } in the generalized
/// Gell-Mann basis returned by gellmann_basis(d).
struct BlochExpansion {
    int dim = 0;
    Eigen::VectorXd coefficients;
};

/// Hermitian observable; `dichotomic` asserts eigenvalues +-1.
class Observable {
  public:
    explicit Observable(Matrix matrix, bool dichotomic = false);

    int dim() const { return static_cast<int>(matrix_.rows()); }
    const Matrix& matrix() const { return matrix_; }
    bool dichotomic() const { return dichotomic_; }

  private:
    Matrix matrix_;
    bool dichotomic_;
};

/// Completely positive, possibly trace-decreasing map given by operators
/// {K_i} with sum K_i^dag K_i <= identity. Strict inequality models the
/// probability flowing into decay products.
class KrausChannel {
  public:
    KrausChannel(int dim_in, int dim_out, std::vector<Matrix> operators);

    int dim_in() const { return dim_in_; }
    int dim_out() const { return dim_out_; }
    const std::vector<Matrix>& operators() const { return operators_; }

  private:
    int dim_in_;
    int dim_out_;
    std::vector<Matrix> operators_;
};

/// Generalized Hermitian traceless Gell-Mann matrices, normalized to
/// Tr(G_i G_j) = 2 delta_ij. Ordering: symmetric off-diagonal pairs,
/// antisymmetric off-diagonal pairs, then diagonal; for d = 2 this is
/// exactly {sigma_x, sigma_y, sigma_z}.
std::vector<Matrix> gellmann_basis(int d);

DensityOperator density_from_bloch(const BlochExpansion& b);
BlochExpansion bloch_from_density(const DensityOperator& rho);

Matrix tensor(const Matrix& a, const Matrix& b);
StateVector tensor(const StateVector& a, const StateVector& b);
DensityOperator tensor(const DensityOperator& a, const DensityOperator& b);
Observable tensor(const Observable& a, const Observable& b);

enum class Subsystem { A, B };

/// Trace out the named subsystem of a state on A (x) B.
DensityOperator partial_trace(const DensityOperator& rho, int dim_a, int dim_b,
                              Subsystem traced_out);

DensityOperator apply_channel(const KrausChannel& channel, const DensityOperator& rho);

/// Tr(O rho); the imaginary part must vanish within tolerance.
double expectation(const Observable& obs, const DensityOperator& rho);

/// The three Pauli matrices (a view into gellmann_basis(2)).
const Matrix& pauli(int i);

/// Dichotomic spin observable n . sigma for a unit 3-vector n.
Observable spin_along(const Vec3& n);

/// The antisymmetric two-qubit Bell state (|01> - |10>)/sqrt(2).
StateVector singlet();

} // namespace bellhep::qm
