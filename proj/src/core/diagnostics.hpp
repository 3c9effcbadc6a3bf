#pragma once

#include "grid.hpp"
#include "snapshot_io.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace romforge {

/// The error split of a reduced model run against its reference data.
/// e_total = e_tru + e_rom holds exactly by construction.
struct ErrorReport {
    double e_tru = 0.0;
    double e_rom = 0.0;
    double e_total = 0.0;
    double e_rec = 0.0;
    int r = 0;
    int samples = 0;
};

/// sum_m |a_pod(t_m) - a_rom(t_m)|^2 normalized by the total modal energy
/// sum_k sigma_k^2.
double rom_error(const CoefficientSeries& reference, const CoefficientSeries& rom,
                 double total_energy);
double rom_error(const CoefficientSeries& reference, const CoefficientSeries& rom,
                 const Eigen::VectorXd& sigma);

double total_error(double e_tru, double e_rom);

/// Grid- and sample-averaged 2-norm of the field mismatch, normalized by the
/// reference velocity.
double reconstruction_error(const std::vector<VelocityField>& fom,
                            const std::vector<VelocityField>& rom, double u_ref);

// --- flop accounting --------------------------------------------------------
//
// Closed-form counts for the offline/online phases, parametric in the grid
// size N, reduced dimension r, space dimension d and the per-value costs
// omega_1/omega_2 of first/second finite-difference derivatives. Evaluated in
// 128-bit integers and range-checked, so the results are exact.

std::int64_t flops_grom_offline(std::int64_t n, int r, int d, std::int64_t omega1,
                                std::int64_t omega2);
std::int64_t flops_eapg_offline(std::int64_t n, int r, int d, std::int64_t omega1,
                                std::int64_t omega2);
std::int64_t flops_grom_online(int r);
std::int64_t flops_eapg_online(int r);
std::int64_t flops_apg_online(std::int64_t n, int r, int d, std::int64_t omega1,
                              std::int64_t omega2);

struct FlopTable {
    std::int64_t grom_offline = 0;
    std::int64_t eapg_offline = 0;
    std::int64_t grom_online = 0;
    std::int64_t eapg_online = 0;
    std::int64_t apg_online = 0;
};

inline constexpr std::int64_t kDefaultOmega1 = 12;
inline constexpr std::int64_t kDefaultOmega2 = 18;

FlopTable flop_table(std::int64_t n, int r, int d, std::int64_t omega1 = kDefaultOmega1,
                     std::int64_t omega2 = kDefaultOmega2);

/// baseline / candidate, e.g. FOM seconds over ROM seconds.
double speedup(double baseline_seconds, double candidate_seconds);

} // namespace romforge
