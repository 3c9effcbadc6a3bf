#include "diagnostics.hpp"

#include "error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace romforge {

double rom_error(const CoefficientSeries& reference, const CoefficientSeries& rom,
                 double total_energy) {
    if (reference.coefficients.rows() != rom.coefficients.rows() ||
        reference.coefficients.cols() != rom.coefficients.cols())
        throw ValidationError("rom_error: series shapes differ");
    if (!(total_energy > 0)) throw ValidationError("rom_error: total energy must be positive");
    double acc = 0.0;
    for (Eigen::Index m = 0; m < rom.coefficients.cols(); ++m)
        acc += (reference.coefficients.col(m) - rom.coefficients.col(m)).squaredNorm();
    return acc / total_energy;
}

double rom_error(const CoefficientSeries& reference, const CoefficientSeries& rom,
                 const Eigen::VectorXd& sigma) {
    return rom_error(reference, rom, sigma.squaredNorm());
}

double total_error(double e_tru, double e_rom) {
    if (e_tru < 0 || e_rom < 0) throw ValidationError("error fractions must be non-negative");
    return e_tru + e_rom;
}

double reconstruction_error(const std::vector<VelocityField>& fom,
                            const std::vector<VelocityField>& rom, double u_ref) {
    if (fom.size() != rom.size() || fom.empty())
        throw ValidationError("reconstruction_error: need matching non-empty field series");
    if (!(u_ref > 0)) throw ValidationError("u_ref must be strictly positive");
    const Grid& grid = fom.front().grid();
    double acc = 0.0;
    for (std::size_t m = 0; m < fom.size(); ++m) {
        if (!(fom[m].grid() == grid) || !(rom[m].grid() == grid))
            throw ValidationError("reconstruction_error: grid mismatch");
        double norm_sq = 0.0;
        for (std::int64_t i = 0; i < grid.value_count(); ++i) {
            const double diff = fom[m].data()[i] - rom[m].data()[i];
            norm_sq += diff * diff;
        }
        acc += std::sqrt(norm_sq) / u_ref;
    }
    const double denom = static_cast<double>(grid.value_count()) *
                         static_cast<double>(fom.size());
    return acc / denom;
}

namespace {

using Wide = __int128;

std::int64_t narrow(Wide v, const char* what) {
    if (v < 0 || v > static_cast<Wide>(std::numeric_limits<std::int64_t>::max()))
        throw ValidationError(std::string(what) + ": flop count out of 64-bit range");
    return static_cast<std::int64_t>(v);
}

void check_args(std::int64_t n, int r, int d, std::int64_t omega1, std::int64_t omega2) {
    if (n < 1) throw ValidationError("flops: N must be >= 1");
    if (r < 1) throw ValidationError("flops: r must be >= 1");
    if (d < 1) throw ValidationError("flops: d must be >= 1");
    if (omega1 < 0 || omega2 < 0) throw ValidationError("flops: omega must be >= 0");
}

} // namespace

std::int64_t flops_grom_offline(std::int64_t n, int r, int d, std::int64_t omega1,
                                std::int64_t omega2) {
    check_args(n, r, d, omega1, omega2);
    const Wide R = r, D = d, N = n, W = omega1 + omega2;
    const Wide per_value = 2 * R * R * R + (2 * D + 2) * R * R + (5 * D + W + 4) * R +
                           3 * D + W + 1;
    return narrow(per_value * N - R * R * R - R * R - R, "flops_grom_offline");
}

std::int64_t flops_eapg_offline(std::int64_t n, int r, int d, std::int64_t omega1,
                                std::int64_t omega2) {
    check_args(n, r, d, omega1, omega2);
    const Wide R = r, D = d, N = n, W = omega1 + omega2;
    const Wide per_value = 2 * R * R * R * R + (4 * D + 7) * R * R * R +
                           (11 * D + W + 10) * R * R + (14 * D + 2 * W + 12) * R + 8 * D +
                           2 * W + 3;
    const Wide correction = R * R * R * R + 2 * R * R * R + 2 * R * R + 2 * R;
    return narrow(per_value * N - correction, "flops_eapg_offline");
}

std::int64_t flops_grom_online(int r) {
    if (r < 1) throw ValidationError("flops: r must be >= 1");
    const Wide R = r;
    return narrow(2 * R * R * R + 2 * R * R + 3 * R, "flops_grom_online");
}

std::int64_t flops_eapg_online(int r) {
    if (r < 1) throw ValidationError("flops: r must be >= 1");
    const Wide R = r;
    return narrow(2 * R * R * R * R + 2 * R * R * R + 2 * R * R + 4 * R, "flops_eapg_online");
}

std::int64_t flops_apg_online(std::int64_t n, int r, int d, std::int64_t omega1,
                              std::int64_t omega2) {
    check_args(n, r, d, omega1, omega2);
    const Wide R = r, D = d, N = n, W = omega1 + omega2;
    return narrow((6 * D + 10 * R + 2 * W + 2) * N + 2 * R * R - R, "flops_apg_online");
}

FlopTable flop_table(std::int64_t n, int r, int d, std::int64_t omega1, std::int64_t omega2) {
    FlopTable t;
    t.grom_offline = flops_grom_offline(n, r, d, omega1, omega2);
    t.eapg_offline = flops_eapg_offline(n, r, d, omega1, omega2);
    t.grom_online = flops_grom_online(r);
    t.eapg_online = flops_eapg_online(r);
    t.apg_online = flops_apg_online(n, r, d, omega1, omega2);
    return t;
}

double speedup(double baseline_seconds, double candidate_seconds) {
    if (!(baseline_seconds > 0) || !(candidate_seconds > 0))
        throw ValidationError("speedup needs strictly positive timings");
    return baseline_seconds / candidate_seconds;
}

} // namespace romforge
