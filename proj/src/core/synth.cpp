#include "synth.hpp"

#include "error.hpp"

#include <cmath>
#include <numbers>

namespace romforge {

VelocityField trigonometric_field(const Grid& grid, const std::array<double, 3>& wave,
                                  const std::array<double, 3>& amplitude,
                                  const std::array<double, 3>& phase) {
    VelocityField out(grid);
    const int d = grid.dims;
    std::int64_t p = 0;
    for (int iz = 0; iz < grid.cells[2]; ++iz)
        for (int iy = 0; iy < grid.cells[1]; ++iy)
            for (int ix = 0; ix < grid.cells[0]; ++ix, ++p) {
                const double kx = wave[0] * (ix * grid.spacing[0]) +
                                  wave[1] * (iy * grid.spacing[1]) +
                                  wave[2] * (iz * grid.spacing[2]);
                for (int c = 0; c < d; ++c)
                    out(p, c) = amplitude[static_cast<std::size_t>(c)] *
                                std::sin(kx + phase[static_cast<std::size_t>(c)]);
            }
    return out;
}

VelocityField random_smooth_field(const Grid& grid, std::mt19937_64& rng, int n_waves,
                                  double amplitude) {
    std::uniform_int_distribution<int> mode_dist(0, 2);
    std::uniform_real_distribution<double> amp_dist(-1.0, 1.0);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);

    VelocityField out(grid);
    for (int w = 0; w < n_waves; ++w) {
        std::array<double, 3> wave{0, 0, 0};
        for (int j = 0; j < grid.dims; ++j) {
            const double length = (grid.cells[j] - 1) * grid.spacing[j];
            wave[static_cast<std::size_t>(j)] =
                2.0 * std::numbers::pi * mode_dist(rng) / length;
        }
        std::array<double, 3> amp{0, 0, 0}, phase{0, 0, 0};
        for (int c = 0; c < grid.dims; ++c) {
            amp[static_cast<std::size_t>(c)] = amplitude * amp_dist(rng) / n_waves;
            phase[static_cast<std::size_t>(c)] = phase_dist(rng);
        }
        const VelocityField part = trigonometric_field(grid, wave, amp, phase);
        for (std::int64_t i = 0; i < out.size(); ++i) out.data()[i] += part.data()[i];
    }
    return out;
}

ManufacturedEnsemble manufactured_ensemble(const Grid& grid,
                                           const std::vector<VelocityField>& raw_modes,
                                           const CoefficientSeries& trajectories,
                                           const VelocityField& mean, double nu,
                                           double u_ref) {
    if (raw_modes.empty()) throw ValidationError("manufactured ensemble needs modes");
    if (trajectories.modes() != static_cast<int>(raw_modes.size()))
        throw ValidationError("trajectory rows must match the mode count");
    if (trajectories.samples() < 2)
        throw ValidationError("manufactured ensemble needs at least 2 samples");
    if (!(mean.grid() == grid)) throw ValidationError("mean field grid mismatch");

    const std::int64_t n = grid.value_count();
    const int k_modes = static_cast<int>(raw_modes.size());

    // Modified Gram-Schmidt with a second pass; losing orthogonality here
    // would silently break every downstream identity.
    Eigen::MatrixXd modes(n, k_modes);
    for (int k = 0; k < k_modes; ++k) {
        if (!(raw_modes[static_cast<std::size_t>(k)].grid() == grid))
            throw ValidationError("mode field grid mismatch");
        Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(
            raw_modes[static_cast<std::size_t>(k)].data(), n);
        const double original_norm = w.norm();
        for (int pass = 0; pass < 2; ++pass)
            for (int j = 0; j < k; ++j) w -= modes.col(j).dot(w) * modes.col(j);
        const double norm = w.norm();
        if (norm <= 1e-10 * std::max(original_norm, 1e-300))
            throw ValidationError("mode " + std::to_string(k + 1) +
                                  " is linearly dependent on the previous modes");
        modes.col(k) = w / norm;
    }

    ManufacturedEnsemble ens;
    ens.mean = mean;
    ens.modes = modes;
    ens.coefficients = trajectories;

    ens.snapshots.grid = grid;
    ens.snapshots.nu = nu;
    ens.snapshots.times = trajectories.times;
    const auto mean_vec = Eigen::Map<const Eigen::VectorXd>(mean.data(), n);
    for (int m = 0; m < trajectories.samples(); ++m) {
        VelocityField snap(grid);
        Eigen::Map<Eigen::VectorXd>(snap.data(), n) =
            mean_vec + modes * trajectories.coefficients.col(m);
        ens.snapshots.snapshots.push_back(std::move(snap));
    }
    ens.snapshots.u_ref = u_ref > 0 ? u_ref : default_reference_velocity(mean);
    return ens;
}

ToySystem quadratic_toy_system(int r, std::uint64_t seed) {
    if (r < 3)
        throw ValidationError("quadratic toy system needs r >= 3 (two oscillating states "
                              "plus the radial feedback state)");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    ToySystem sys;
    sys.angular_frequency = 1.0 + 2.0 * unit(rng);
    sys.radius = 0.5 + unit(rng);
    sys.settle_rate = 0.5 + unit(rng);
    const double mu = 0.5 + unit(rng);

    GromCoefficients& g = sys.coefficients;
    g.r = r;
    g.nu = 0.0;
    g.quadratic = Eigen::MatrixXd::Zero(r, static_cast<Eigen::Index>(r) * r);
    g.linear = Eigen::MatrixXd::Zero(r, r);
    g.constant = Eigen::VectorXd::Zero(r);

    // a1' = -omega a2 + a1 a3
    // a2' =  omega a1 + a2 a3
    // a3' = mu (R^2 - a1^2 - a2^2) - c a3
    // further states decay on their own
    const double omega = sys.angular_frequency;
    g.linear(0, 1) = -omega;
    g.linear(1, 0) = omega;
    g.linear(2, 2) = -sys.settle_rate;
    g.quadratic(0, 0 * r + 2) = 1.0;
    g.quadratic(1, 1 * r + 2) = 1.0;
    g.quadratic(2, 0 * r + 0) = -mu;
    g.quadratic(2, 1 * r + 1) = -mu;
    g.constant(2) = mu * sys.radius * sys.radius;
    for (int k = 3; k < r; ++k) g.linear(k, k) = -(0.5 + 1.5 * unit(rng));

    return sys;
}

} // namespace romforge
