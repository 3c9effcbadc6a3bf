#pragma once

#include "eapg.hpp"
#include "memory_length.hpp"
#include "pod.hpp"
#include "rom_online.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace romforge {

/// Phi^T J(u0)[Phi] with u0 = u' + Phi a0; column i applies the exactly
/// linearized operator to mode i. Evaluated once, then held fixed while the
/// weight is tuned.
Eigen::MatrixXd projected_jacobian(const CoarseBasis& cb, double nu,
                                   const Eigen::VectorXd& a0);

/// Largest eigenvalue modulus via a full eigendecomposition (r is small).
double spectral_radius(const Eigen::MatrixXd& a);

/// sum_m |a_rom(t_m) - a_ref(t_m)|_2^2 over matching columns.
double tracking_objective_value(const Eigen::MatrixXd& rom, const Eigen::MatrixXd& reference);

struct TrackingConfig {
    int n_periods = 2;
    double period = 0.0; // 0 -> one-period tiling window inferred from the sample times
    IntegratorConfig integrator;
};

/// Sample times covering n_periods copies of the reference window.
std::vector<double> tiled_sample_times(const std::vector<double>& reference_times,
                                       const TrackingConfig& cfg);

/// Objective of the weight search: integrate the memory-closed system for the
/// candidate weight and accumulate the squared deviation from the reference
/// coefficients over the tiled horizon. Blow-up maps to +infinity.
std::function<double(double)> scalar_tracking_objective(const EapgTensorParts& parts,
                                                        double rho, const Eigen::VectorXd& a0,
                                                        const CoefficientSeries& reference,
                                                        const TrackingConfig& cfg);

/// Matrix-weight variant; the candidate W must be symmetric positive definite
/// (guaranteed by the optimizer's parametrization).
std::function<double(const Eigen::MatrixXd&)> matrix_tracking_objective(
    const EapgTensorParts& parts, double rho, const Eigen::VectorXd& a0,
    const CoefficientSeries& reference, const TrackingConfig& cfg);

struct OptimizeOptions {
    double w_max = 100.0;        // no principled upper bound exists; config knob
    double objective_tol = 1e-10;
    double step_tol = 1e-8;
    int max_iterations = 500;
};

struct OptimizationReport {
    std::vector<double> objective_trace; // best-so-far after each evaluation
    double best_weight = 0.0;            // scalar path
    Eigen::MatrixXd best_weight_matrix;  // matrix path
    double best_objective = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    bool boundary_hit = false; // stopped against the blow-up region or w_max
    int n_periods_used = 0;
};

/// 1-D minimization on [0, w_max]: downhill bracketing from w0 followed by
/// golden-section refinement. +inf objective values (blow-up sentinels) act
/// as hard walls.
OptimizationReport optimize_scalar_weight(const std::function<double(double)>& objective,
                                          const OptimizeOptions& options = {},
                                          double w0 = 1.0);

/// Nelder-Mead over the Cholesky factor of W (diagonal through an exponential
/// map), so every candidate is symmetric positive definite by construction.
/// `accepted` receives each new incumbent when provided.
OptimizationReport optimize_matrix_weight(
    const std::function<double(const Eigen::MatrixXd&)>& objective, int r,
    const OptimizeOptions& options = {},
    const Eigen::MatrixXd& w0 = Eigen::MatrixXd(),
    std::vector<Eigen::MatrixXd>* accepted = nullptr);

} // namespace romforge
