#include "memory_length.hpp"

#include "error.hpp"

#include <string>

namespace romforge {

double MemoryLength::tau() const {
    if (kind != Kind::Scalar) throw ValidationError("tau() called on a matrix memory length");
    return weight / rho;
}

Eigen::MatrixXd MemoryLength::tau_matrix(int r) const {
    if (kind == Kind::Scalar)
        return (weight / rho) * Eigen::MatrixXd::Identity(r, r);
    if (weight_matrix.rows() != r)
        throw ValidationError("memory length has r = " + std::to_string(weight_matrix.rows()) +
                              ", expected " + std::to_string(r));
    return weight_matrix / rho;
}

MemoryLength MemoryLength::scalar(double w, double rho) {
    if (!(rho > 0)) throw ValidationError("spectral radius must be strictly positive");
    if (w < 0) throw ValidationError("scalar memory weight must be non-negative");
    MemoryLength m;
    m.kind = Kind::Scalar;
    m.weight = w;
    m.rho = rho;
    return m;
}

MemoryLength MemoryLength::matrix(const Eigen::MatrixXd& W, double rho) {
    if (!(rho > 0)) throw ValidationError("spectral radius must be strictly positive");
    if (W.rows() != W.cols()) throw ValidationError("memory weight matrix must be square");
    const double scale = std::max(W.cwiseAbs().maxCoeff(), 1.0);
    if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw ValidationError("memory weight matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(W);
    if (eig.info() != Eigen::Success)
        throw NumericError("eigendecomposition of the memory weight matrix failed");
    if (!(eig.eigenvalues().minCoeff() > 0))
        throw ValidationError("memory weight matrix must be positive definite");
    MemoryLength m;
    m.kind = Kind::Matrix;
    m.weight_matrix = 0.5 * (W + W.transpose());
    m.rho = rho;
    return m;
}

} // namespace romforge
