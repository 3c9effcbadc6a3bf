#pragma once

#include <Eigen/Dense>

namespace romforge {

/// Closure timescale of the memory term: either a scalar tau = w / rho or a
/// positive-definite matrix T = W / rho, where rho is the spectral radius of
/// the projected Jacobian the weight is normalized against.
struct MemoryLength {
    enum class Kind { Scalar, Matrix };

    Kind kind = Kind::Scalar;
    double weight = 0.0;             // w (scalar kind)
    Eigen::MatrixXd weight_matrix;   // W (matrix kind), symmetric positive definite
    double rho = 1.0;

    /// w / rho; scalar kind only.
    double tau() const;

    /// The memory length as an r x r matrix: T = W / rho, or tau * I for the
    /// scalar kind.
    Eigen::MatrixXd tau_matrix(int r) const;

    static MemoryLength scalar(double w, double rho);

    /// Validates symmetry (to 1e-12 relative) and positive definiteness.
    static MemoryLength matrix(const Eigen::MatrixXd& W, double rho);
};

} // namespace romforge
