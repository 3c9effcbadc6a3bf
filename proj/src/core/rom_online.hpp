#pragma once

#include "eapg.hpp"
#include "galerkin.hpp"
#include "pod.hpp"
#include "snapshot_io.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace romforge {

using RhsFunction = std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& a)>;

/// Q [a (x) a] + L a + C.
Eigen::VectorXd grom_rhs(const GromCoefficients& coeffs, const Eigen::VectorXd& a);

/// K [a (x) a (x) a] + Q [a (x) a] + L a + C.
Eigen::VectorXd eapg_rhs(const EapgCoefficients& coeffs, const Eigen::VectorXd& a);

RhsFunction make_rhs(const GromCoefficients& coeffs);
RhsFunction make_rhs(const EapgCoefficients& coeffs);

struct IntegratorConfig {
    enum class Scheme { ExplicitEuler, DormandPrince };

    Scheme scheme = Scheme::DormandPrince;
    double dt = 1e-3;           // Euler step; Dormand-Prince fixed step when adaptive = false
    double rel_tol = 1e-6;
    double abs_tol = 1e-9;
    bool adaptive = true;       // Dormand-Prince only
    double blowup_factor = 1e6; // abort when |a| exceeds this times max(|a0|, 1)
    std::uint64_t max_steps = 50'000'000;

    void validate() const;
};

/// Outcome of one integration. On blow-up or step underflow the series is
/// truncated at the last reachable output time and `completed` is false; this
/// is the expected way unstable reduced models terminate.
struct IntegrationResult {
    CoefficientSeries series;
    std::uint64_t steps_taken = 0;
    std::uint64_t steps_rejected = 0;
    bool blew_up = false;
    bool step_underflow = false;
    bool completed = true;
    double failure_time = 0.0; // valid when !completed

    std::string report() const;
};

/// Integrates da/dt = rhs(t, a) from output_times.front() and samples the
/// solution at every requested time (strictly increasing; the first sample is
/// a0 itself). The adaptive path uses the Dormand-Prince 5(4) pair with its
/// standard quartic dense-output interpolant, so samples do not constrain the
/// step sequence.
IntegrationResult integrate(const RhsFunction& rhs, const Eigen::VectorXd& a0,
                            const std::vector<double>& output_times,
                            const IntegratorConfig& cfg);

/// a0 = Phi_r^T u*_0.
Eigen::VectorXd initial_condition(const CoarseBasis& cb, const VelocityField& fluctuation0);

/// u(t) = u' + Phi_r a(t) for one sample.
VelocityField reconstruct(const CoarseBasis& cb, const Eigen::VectorXd& a);

/// Reconstructs every column of the series.
std::vector<VelocityField> reconstruct_series(const CoarseBasis& cb,
                                              const CoefficientSeries& series);

/// a (x) a laid out so entry (i-1)r + k (1-based) equals a_i a_k.
Eigen::VectorXd kron_pair(const Eigen::VectorXd& a);

/// a (x) a (x) a with entry ((i-1)r + (j-1))r + k equal to a_i a_j a_k.
Eigen::VectorXd kron_triple(const Eigen::VectorXd& a);

} // namespace romforge
