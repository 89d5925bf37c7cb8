#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace bellhep {

using Complex = std::complex<double>;
using Matrix  = Eigen::MatrixXcd;
using Vector  = Eigen::VectorXcd;
using Vec3    = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;

/// Classical and quantum CHSH bounds.
inline constexpr double kChshClassicalBound = 2.0;
inline const double     kChshQuantumBound   = 2.0 * std::numbers::sqrt2;

/// Global numeric tolerances. Structural invariants (Hermiticity,
/// positivity, trace bounds) are checked at `structural`; algebraic
/// round trips at `round_trip`.
struct Tolerances {
    double structural = 1e-10;
    double round_trip = 1e-12;
};

inline Tolerances& tolerances() {
    static Tolerances t;
    return t;
}

} // namespace bellhep
