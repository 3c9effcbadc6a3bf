#include "apg_reference.hpp"

#include "error.hpp"

#include <string>
#include <vector>

namespace romforge {

Eigen::VectorXd apg_rhs_fullspace(const CoarseBasis& cb, double nu, const MemoryLength& mem,
                                  const Eigen::VectorXd& a,
                                  const ApgReferenceOptions& options) {
    const Grid& grid = cb.grid;
    const std::int64_t n = grid.value_count();
    if (n > options.max_values)
        throw ValidationError("full-space reference refused: N = " + std::to_string(n) +
                              " exceeds the cap of " + std::to_string(options.max_values));
    if (a.size() != cb.rank()) throw ValidationError("coefficient size mismatch");
    if (!(nu > 0)) throw ValidationError("nu must be strictly positive");

    const int r = cb.rank();
    const auto mean = Eigen::Map<const Eigen::VectorXd>(cb.mean.data(), n);

    // Reconstructed state and its right-hand side.
    Eigen::VectorXd u = mean + cb.modes * a;
    Eigen::VectorXd rhs(n);
    {
        std::vector<double> conv(static_cast<std::size_t>(n)), lap(static_cast<std::size_t>(n));
        fd::convect(grid, u.data(), u.data(), conv.data());
        fd::laplacian(grid, u.data(), lap.data());
        for (std::int64_t i = 0; i < n; ++i)
            rhs(i) = -conv[static_cast<std::size_t>(i)] + nu * lap[static_cast<std::size_t>(i)];
    }

    // Fine-scale part via the two-projection split.
    const Eigen::VectorXd rhs_coeffs = cb.modes.transpose() * rhs;
    const Eigen::VectorXd rhs_fine = rhs - cb.modes * rhs_coeffs;

    // Exactly linearized operator applied to the fine-scale residual.
    Eigen::VectorXd jacobian_action(n);
    {
        std::vector<double> grad_term(static_cast<std::size_t>(n)),
            conv(static_cast<std::size_t>(n)), lap(static_cast<std::size_t>(n));
        fd::grad_contract(grid, u.data(), rhs_fine.data(), grad_term.data());
        fd::convect(grid, u.data(), rhs_fine.data(), conv.data());
        fd::laplacian(grid, rhs_fine.data(), lap.data());
        for (std::int64_t i = 0; i < n; ++i)
            jacobian_action(i) = -grad_term[static_cast<std::size_t>(i)] -
                                 conv[static_cast<std::size_t>(i)] +
                                 nu * lap[static_cast<std::size_t>(i)];
    }

    const Eigen::VectorXd memory_part = cb.modes.transpose() * jacobian_action;
    if (mem.kind == MemoryLength::Kind::Scalar)
        return rhs_coeffs + mem.tau() * memory_part;
    return rhs_coeffs + mem.tau_matrix(r) * memory_part;
}

} // namespace romforge
