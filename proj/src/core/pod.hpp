#pragma once

#include "grid.hpp"
#include "snapshot_io.hpp"

#include <Eigen/Dense>

#include <filesystem>

namespace romforge {

/// Thin SVD of the fluctuation matrix U* = Phi Sigma V^T with the mean field
/// carried along. Mode signs are fixed so the largest-magnitude entry of each
/// column is positive.
struct PodBasis {
    Grid grid;
    VelocityField mean;
    Eigen::MatrixXd modes;   // N x M, orthonormal columns
    Eigen::VectorXd sigma;   // non-increasing
    Eigen::MatrixXd right;   // M x M
    std::vector<double> times;

    int mode_count() const { return static_cast<int>(modes.cols()); }
};

/// First r modes of a PodBasis plus everything downstream assembly needs.
struct CoarseBasis {
    Grid grid;
    VelocityField mean;
    Eigen::MatrixXd modes;       // N x r
    Eigen::VectorXd sigma;       // retained singular values (r)
    double total_energy = 0.0;   // sum over all M of sigma_k^2
    std::vector<double> times;

    int rank() const { return static_cast<int>(modes.cols()); }
};

PodBasis compute_pod(const FluctuationSet& fluctuations);

/// 1 - (sum_{k<=r} sigma_k^2) / (sum_k sigma_k^2).
double truncation_error(const PodBasis& pod, int r);

CoarseBasis truncate(const PodBasis& pod, int r);

/// Reference coefficients a_POD(t_m) = Phi_r^T u*(t_m), one column per sample.
CoefficientSeries project_reference(const CoarseBasis& cb, const FluctuationSet& fluctuations);

/// Coarse-scale projection Phi_r (Phi_r^T v); never forms the N x N operator.
VelocityField apply_coarse_projector(const CoarseBasis& cb, const VelocityField& v);

/// Fine-scale projection v - Phi_r (Phi_r^T v).
VelocityField apply_fine_projector(const CoarseBasis& cb, const VelocityField& v);

/// A coarse basis plus the pipeline metadata persisted with it: the full
/// sigma spectrum, viscosity, reference velocity and the projection of the
/// first fluctuation snapshot (the initial condition downstream stages use).
struct BasisBundle {
    CoarseBasis basis;
    Eigen::VectorXd sigma_full;
    Eigen::VectorXd a0;
    double nu = 0.0;
    double u_ref = 0.0;
};

BasisBundle make_basis_bundle(const SnapshotSet& snapshots, const FluctuationSet& fluctuations,
                              const PodBasis& pod, int r);

/// One binary file per mode plus a manifest carrying the bundle metadata.
void save_basis(const BasisBundle& bundle, const std::filesystem::path& dir);
BasisBundle load_basis(const std::filesystem::path& dir);

} // namespace romforge
