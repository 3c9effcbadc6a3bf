#pragma once

#include "pod.hpp"

#include <Eigen/Dense>

#include <filesystem>

namespace romforge {

/// Full-space G-ROM coefficient tensors. The quadratic block stores column
/// (i, k) at Kronecker position (i-1)r + k (1-based), matching a (x) a.
struct SpatialGromCoefficients {
    Eigen::MatrixXd quadratic;  // N x r^2
    Eigen::MatrixXd linear;     // N x r
    Eigen::VectorXd constant;   // N
    int r = 0;
};

/// Projected G-ROM system da/dt = Q [a (x) a] + L a + C.
struct GromCoefficients {
    Eigen::MatrixXd quadratic;  // r x r^2
    Eigen::MatrixXd linear;     // r x r
    Eigen::VectorXd constant;   // r
    int r = 0;
    double nu = 0.0;
};

/// Column (i,k) of the quadratic block is -(phi_i . grad) phi_k; the linear
/// block combines both convection couplings with the mean plus diffusion;
/// the constant block is the mean-field right-hand side.
SpatialGromCoefficients assemble_grom_spatial(const CoarseBasis& cb, double nu);

/// Left-multiplies every tensor by Phi_r^T.
GromCoefficients project_grom(const SpatialGromCoefficients& spatial, const CoarseBasis& cb,
                              double nu);

void save_grom(const GromCoefficients& coeffs, int d, const std::string& grid_hash,
               const std::filesystem::path& dir);
GromCoefficients load_grom(const std::filesystem::path& dir);

// Shared helpers for the tensor writers (also used by the eAPG side).
namespace tensor_io {
void write_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path);
Eigen::MatrixXd read_matrix(Eigen::Index rows, Eigen::Index cols,
                            const std::filesystem::path& path);
} // namespace tensor_io

} // namespace romforge
