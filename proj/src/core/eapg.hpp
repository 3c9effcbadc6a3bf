#pragma once

#include "galerkin.hpp"
#include "memory_length.hpp"
#include "pod.hpp"

#include <Eigen/Dense>

#include <filesystem>

namespace romforge {

/// Fine-scale projections of the G-ROM spatial tensors: every column is
/// orthogonal to the retained modes.
struct FineScaleCoefficients {
    Eigen::MatrixXd quadratic;  // N x r^2
    Eigen::MatrixXd linear;     // N x r
    Eigen::VectorXd constant;   // N
    int r = 0;
};

/// Full-space tensors of the memory term. The cubic block stores column
/// (i, j, k) at ((i-1)r + (j-1))r + k (1-based), with i indexing the mode in
/// the Jacobian factor and (j, k) the fine-scale quadratic column.
struct SpatialEapgCoefficients {
    Eigen::MatrixXd cubic;      // N x r^3
    Eigen::MatrixXd quadratic;  // N x r^2
    Eigen::MatrixXd linear;     // N x r
    Eigen::VectorXd constant;   // N
    int r = 0;
};

/// Projected cubic system da/dt = K [a (x) a (x) a] + Q [a (x) a] + L a + C,
/// with the memory length already folded into the tensors.
struct EapgCoefficients {
    Eigen::MatrixXd cubic;      // r x r^3
    Eigen::MatrixXd quadratic;  // r x r^2
    Eigen::MatrixXd linear;     // r x r
    Eigen::VectorXd constant;   // r
    int r = 0;
    double nu = 0.0;
    MemoryLength memory;
};

/// Memory-length-independent projected tensors. Folding in a candidate
/// memory length is then r-space work only, which is what the weight
/// optimizer iterates on.
struct EapgTensorParts {
    Eigen::MatrixXd grom_quadratic;  // r x r^2  (Phi^T Q^N)
    Eigen::MatrixXd grom_linear;     // r x r
    Eigen::VectorXd grom_constant;   // r
    Eigen::MatrixXd mem_cubic;       // r x r^3  (Phi^T of the memory tensors)
    Eigen::MatrixXd mem_quadratic;   // r x r^2
    Eigen::MatrixXd mem_linear;      // r x r
    Eigen::VectorXd mem_constant;    // r
    int r = 0;
    double nu = 0.0;

    EapgCoefficients with_memory(const MemoryLength& mem) const;
    GromCoefficients grom() const;
};

/// Removes the coarse-scale component of every column via the two-projection
/// split c - Phi (Phi^T c); the N x N projector is never formed.
FineScaleCoefficients assemble_fine_scale(const SpatialGromCoefficients& spatial,
                                          const CoarseBasis& cb);

/// Applies the linearized right-hand side operator to each fine-scale column
/// and regroups by polynomial order (materializes the N x r^3 cubic block;
/// prefer build_eapg_parts on large grids).
SpatialEapgCoefficients assemble_eapg_spatial(const FineScaleCoefficients& fine,
                                              const CoarseBasis& cb, double nu);

/// Projects the assembled tensors and folds in the memory length: the cubic
/// block is weighted entirely, the lower orders combine the G-ROM part with
/// the weighted memory part.
EapgCoefficients project_eapg(const SpatialGromCoefficients& grom_spatial,
                              const SpatialEapgCoefficients& eapg_spatial,
                              const CoarseBasis& cb, double nu, const MemoryLength& mem);

/// Column-streamed assembly + projection. Peak additional memory is O(N r)
/// fields; only the r x r^3 projection of the cubic block is ever stored.
EapgTensorParts build_eapg_parts(const CoarseBasis& cb, double nu);

void save_eapg(const EapgCoefficients& coeffs, int d, const std::string& grid_hash,
               const std::filesystem::path& dir);
EapgCoefficients load_eapg(const std::filesystem::path& dir);

} // namespace romforge
