#pragma once

#include "galerkin.hpp"
#include "grid.hpp"
#include "snapshot_io.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <vector>

namespace romforge {

/// v_c(x) = amplitude_c * sin(k . x + phase_c), with k in rad/m.
VelocityField trigonometric_field(const Grid& grid, const std::array<double, 3>& wave,
                                  const std::array<double, 3>& amplitude,
                                  const std::array<double, 3>& phase = {0, 0, 0});

/// Superposition of `n_waves` random low-wavenumber trigonometric fields;
/// smooth enough for second-order stencils to resolve well.
VelocityField random_smooth_field(const Grid& grid, std::mt19937_64& rng, int n_waves = 4,
                                  double amplitude = 1.0);

/// A snapshot ensemble with fully known ground truth: snapshots are
/// u(t_m) = mean + sum_i modes_i * a_i(t_m) with the raw mode fields
/// orthonormalized internally (modified Gram-Schmidt, two passes).
struct ManufacturedEnsemble {
    SnapshotSet snapshots;
    VelocityField mean;
    Eigen::MatrixXd modes;         // N x K, orthonormal
    CoefficientSeries coefficients; // the exact trajectories used
};

ManufacturedEnsemble manufactured_ensemble(const Grid& grid,
                                           const std::vector<VelocityField>& raw_modes,
                                           const CoefficientSeries& trajectories,
                                           const VelocityField& mean, double nu,
                                           double u_ref = 0.0);

/// Reduced-space-only testbed: a quadratic system whose orbit settles onto a
/// circle of known radius in the (a_1, a_2) plane. Needs r >= 3; the third
/// state carries the radial feedback (a planar quadratic system cannot hold
/// an attracting circle of prescribed radius), and any further states decay
/// linearly. Deterministic in the seed.
struct ToySystem {
    GromCoefficients coefficients;
    double radius = 0.0;
    double angular_frequency = 0.0;
    double settle_rate = 0.0;
};

ToySystem quadratic_toy_system(int r, std::uint64_t seed);

} // namespace romforge
