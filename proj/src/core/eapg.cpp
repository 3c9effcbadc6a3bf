#include "eapg.hpp"

#include "error.hpp"
#include "threads.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace romforge {

namespace {

// out = -(grad mode) x - (mode . grad) x, with the mode Jacobian precomputed.
void negative_jacobian_action(const Grid& grid, const double* mode_jac, const double* mode,
                              const double* x, double* out) {
    const int d = grid.dims;
    const std::int64_t n_grid = grid.point_count();
    std::vector<double> conv(static_cast<std::size_t>(grid.value_count()));
    fd::convect(grid, mode, x, conv.data());
    for (std::int64_t p = 0; p < n_grid; ++p)
        for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j)
                acc += mode_jac[(p * d + c) * d + j] * x[p * d + j];
            out[p * d + c] = -acc - conv[static_cast<std::size_t>(p * d + c)];
        }
}

// out = -(grad u') x - (u' . grad) x + nu lap x
void mean_jacobian_action(const Grid& grid, const double* mean_jac, const double* mean,
                          double nu, const double* x, double* out) {
    negative_jacobian_action(grid, mean_jac, mean, x, out);
    std::vector<double> lap(static_cast<std::size_t>(grid.value_count()));
    fd::laplacian(grid, x, lap.data());
    for (std::int64_t i = 0; i < grid.value_count(); ++i)
        out[i] += nu * lap[static_cast<std::size_t>(i)];
}

std::vector<PointJacobianField> mode_jacobians(const CoarseBasis& cb) {
    std::vector<PointJacobianField> jacs(static_cast<std::size_t>(cb.rank()));
    parallel_for(0, cb.rank(), [&](std::int64_t i) {
        PointJacobianField j(cb.grid);
        fd::gradient(cb.grid, cb.modes.col(i).data(), j.data());
        jacs[static_cast<std::size_t>(i)] = std::move(j);
    });
    return jacs;
}

} // namespace

EapgCoefficients EapgTensorParts::with_memory(const MemoryLength& mem) const {
    EapgCoefficients e;
    e.r = r;
    e.nu = nu;
    e.memory = mem;
    if (mem.kind == MemoryLength::Kind::Scalar) {
        const double tau = mem.tau();
        e.cubic = tau * mem_cubic;
        e.quadratic = grom_quadratic + tau * mem_quadratic;
        e.linear = grom_linear + tau * mem_linear;
        e.constant = grom_constant + tau * mem_constant;
    } else {
        const Eigen::MatrixXd t = mem.tau_matrix(r);
        e.cubic = t * mem_cubic;
        e.quadratic = grom_quadratic + t * mem_quadratic;
        e.linear = grom_linear + t * mem_linear;
        e.constant = grom_constant + t * mem_constant;
    }
    return e;
}

GromCoefficients EapgTensorParts::grom() const {
    GromCoefficients g;
    g.r = r;
    g.nu = nu;
    g.quadratic = grom_quadratic;
    g.linear = grom_linear;
    g.constant = grom_constant;
    return g;
}

FineScaleCoefficients assemble_fine_scale(const SpatialGromCoefficients& spatial,
                                          const CoarseBasis& cb) {
    if (spatial.r != cb.rank() || spatial.quadratic.rows() != cb.modes.rows())
        throw ValidationError("fine-scale projection: tensor/basis shape mismatch");
    FineScaleCoefficients f;
    f.r = spatial.r;
    f.quadratic = spatial.quadratic - cb.modes * (cb.modes.transpose() * spatial.quadratic);
    f.linear = spatial.linear - cb.modes * (cb.modes.transpose() * spatial.linear);
    f.constant = spatial.constant - cb.modes * (cb.modes.transpose() * spatial.constant);
    return f;
}

SpatialEapgCoefficients assemble_eapg_spatial(const FineScaleCoefficients& fine,
                                              const CoarseBasis& cb, double nu) {
    if (fine.r != cb.rank() || fine.quadratic.rows() != cb.modes.rows())
        throw ValidationError("eAPG assembly: tensor/basis shape mismatch");
    if (!(nu > 0)) throw ValidationError("nu must be strictly positive");

    const Grid& grid = cb.grid;
    const std::int64_t n = grid.value_count();
    const int r = fine.r;
    const auto rr = static_cast<Eigen::Index>(r) * r;

    const auto jphis = mode_jacobians(cb);
    PointJacobianField jmean(grid);
    fd::gradient(grid, cb.mean.data(), jmean.data());

    SpatialEapgCoefficients e;
    e.r = r;
    e.cubic.resize(n, rr * r);
    e.quadratic.resize(n, rr);
    e.linear.resize(n, r);
    e.constant.resize(n);

    // C^N = J_mean acting on the fine-scale constant column.
    {
        std::vector<double> buf(static_cast<std::size_t>(n));
        mean_jacobian_action(grid, jmean.data(), cb.mean.data(), nu, fine.constant.data(),
                             buf.data());
        for (std::int64_t i = 0; i < n; ++i) e.constant(i) = buf[static_cast<std::size_t>(i)];
    }

    // L^N column i = mode-i action on C-bar + mean action on L-bar column i.
    parallel_for(0, r, [&](std::int64_t i) {
        std::vector<double> buf(static_cast<std::size_t>(n)), buf2(static_cast<std::size_t>(n));
        negative_jacobian_action(grid, jphis[static_cast<std::size_t>(i)].data(),
                                 cb.modes.col(i).data(), fine.constant.data(), buf.data());
        mean_jacobian_action(grid, jmean.data(), cb.mean.data(), nu, fine.linear.col(i).data(),
                             buf2.data());
        for (std::int64_t k = 0; k < n; ++k)
            e.linear(k, i) = buf[static_cast<std::size_t>(k)] + buf2[static_cast<std::size_t>(k)];
    });

    // Q^N column (i, j) = mode-i action on L-bar column j + mean action on the
    // Q-bar column at the same Kronecker slot.
    parallel_for(0, rr, [&](std::int64_t col) {
        const auto i = static_cast<int>(col / r);
        const auto j = static_cast<int>(col % r);
        std::vector<double> buf(static_cast<std::size_t>(n)), buf2(static_cast<std::size_t>(n));
        negative_jacobian_action(grid, jphis[static_cast<std::size_t>(i)].data(),
                                 cb.modes.col(i).data(), fine.linear.col(j).data(), buf.data());
        mean_jacobian_action(grid, jmean.data(), cb.mean.data(), nu,
                             fine.quadratic.col(col).data(), buf2.data());
        for (std::int64_t k = 0; k < n; ++k)
            e.quadratic(k, col) =
                buf[static_cast<std::size_t>(k)] + buf2[static_cast<std::size_t>(k)];
    });

    // K^N column (i, j, k) = mode-i action on Q-bar column (j, k).
    parallel_for(0, rr * r, [&](std::int64_t col) {
        const auto i = static_cast<int>(col / rr);
        const auto jk = static_cast<Eigen::Index>(col % rr);
        std::vector<double> buf(static_cast<std::size_t>(n));
        negative_jacobian_action(grid, jphis[static_cast<std::size_t>(i)].data(),
                                 cb.modes.col(i).data(), fine.quadratic.col(jk).data(),
                                 buf.data());
        for (std::int64_t k = 0; k < n; ++k) e.cubic(k, col) = buf[static_cast<std::size_t>(k)];
    });

    return e;
}

EapgCoefficients project_eapg(const SpatialGromCoefficients& grom_spatial,
                              const SpatialEapgCoefficients& eapg_spatial,
                              const CoarseBasis& cb, double nu, const MemoryLength& mem) {
    if (grom_spatial.r != cb.rank() || eapg_spatial.r != cb.rank())
        throw ValidationError("projection: tensors and basis disagree on r");

    EapgTensorParts parts;
    parts.r = cb.rank();
    parts.nu = nu;
    parts.grom_quadratic = cb.modes.transpose() * grom_spatial.quadratic;
    parts.grom_linear = cb.modes.transpose() * grom_spatial.linear;
    parts.grom_constant = cb.modes.transpose() * grom_spatial.constant;
    parts.mem_cubic = cb.modes.transpose() * eapg_spatial.cubic;
    parts.mem_quadratic = cb.modes.transpose() * eapg_spatial.quadratic;
    parts.mem_linear = cb.modes.transpose() * eapg_spatial.linear;
    parts.mem_constant = cb.modes.transpose() * eapg_spatial.constant;
    return parts.with_memory(mem);
}

EapgTensorParts build_eapg_parts(const CoarseBasis& cb, double nu) {
    if (!(nu > 0)) throw ValidationError("nu must be strictly positive");
    const Grid& grid = cb.grid;
    const std::int64_t n = grid.value_count();
    const int r = cb.rank();
    const auto rr = static_cast<Eigen::Index>(r) * r;

    const auto jphis = mode_jacobians(cb);
    PointJacobianField jmean(grid);
    fd::gradient(grid, cb.mean.data(), jmean.data());

    EapgTensorParts parts;
    parts.r = r;
    parts.nu = nu;
    parts.grom_quadratic.resize(r, rr);
    parts.grom_linear.resize(r, r);
    parts.mem_cubic.resize(r, rr * r);
    parts.mem_quadratic.setZero(r, rr);
    parts.mem_linear.resize(r, r);

    auto project = [&](const Eigen::VectorXd& column) -> Eigen::VectorXd {
        return cb.modes.transpose() * column;
    };

    // Constant chain: raw -> projected -> fine-scale remainder -> memory part.
    Eigen::VectorXd const_bar(n);
    {
        std::vector<double> conv(static_cast<std::size_t>(n)), lap(static_cast<std::size_t>(n));
        fd::convect(grid, cb.mean.data(), cb.mean.data(), conv.data());
        fd::laplacian(grid, cb.mean.data(), lap.data());
        Eigen::VectorXd raw(n);
        for (std::int64_t i = 0; i < n; ++i)
            raw(i) = -conv[static_cast<std::size_t>(i)] + nu * lap[static_cast<std::size_t>(i)];
        parts.grom_constant = project(raw);
        const_bar = raw - cb.modes * parts.grom_constant;

        Eigen::VectorXd acted(n);
        mean_jacobian_action(grid, jmean.data(), cb.mean.data(), nu, const_bar.data(),
                             acted.data());
        parts.mem_constant = project(acted);
    }

    // Linear chain; the fine-scale columns are kept for the mixed quadratic
    // terms below (O(N r) storage).
    Eigen::MatrixXd linear_bar(n, r);
    parallel_for(0, r, [&](std::int64_t i) {
        std::vector<double> t1(static_cast<std::size_t>(n)), t2(static_cast<std::size_t>(n)),
            t3(static_cast<std::size_t>(n));
        const double* phi = cb.modes.col(i).data();
        fd::convect(grid, phi, cb.mean.data(), t1.data());
        fd::convect(grid, cb.mean.data(), phi, t2.data());
        fd::laplacian(grid, phi, t3.data());
        Eigen::VectorXd raw(n);
        for (std::int64_t k = 0; k < n; ++k)
            raw(k) = -t1[static_cast<std::size_t>(k)] - t2[static_cast<std::size_t>(k)] +
                     nu * t3[static_cast<std::size_t>(k)];
        parts.grom_linear.col(i) = project(raw);
        linear_bar.col(i) = raw - cb.modes * parts.grom_linear.col(i);
    });
    parallel_for(0, r, [&](std::int64_t i) {
        Eigen::VectorXd acted(n), acted2(n);
        negative_jacobian_action(grid, jphis[static_cast<std::size_t>(i)].data(),
                                 cb.modes.col(i).data(), const_bar.data(), acted.data());
        mean_jacobian_action(grid, jmean.data(), cb.mean.data(), nu, linear_bar.col(i).data(),
                             acted2.data());
        parts.mem_linear.col(i) = project(acted) + project(acted2);
    });

    // Mixed quadratic terms: mode-i action on the fine-scale linear columns.
    parallel_for(0, rr, [&](std::int64_t col) {
        const auto i = static_cast<int>(col / r);
        const auto j = static_cast<int>(col % r);
        Eigen::VectorXd acted(n);
        negative_jacobian_action(grid, jphis[static_cast<std::size_t>(i)].data(),
                                 cb.modes.col(i).data(), linear_bar.col(j).data(), acted.data());
        parts.mem_quadratic.col(col) += project(acted);
    });

    // Quadratic/cubic chain, streamed one fine-scale quadratic column at a
    // time so the N x r^3 tensor never exists.
    parallel_for(0, rr, [&](std::int64_t col) {
        const auto j = static_cast<int>(col / r);
        const auto k = static_cast<int>(col % r);
        std::vector<double> conv(static_cast<std::size_t>(n));
        fd::convect(grid, cb.modes.col(j).data(), cb.modes.col(k).data(), conv.data());
        Eigen::VectorXd raw(n);
        for (std::int64_t p = 0; p < n; ++p) raw(p) = -conv[static_cast<std::size_t>(p)];
        parts.grom_quadratic.col(col) = project(raw);
        const Eigen::VectorXd quad_bar = raw - cb.modes * parts.grom_quadratic.col(col);

        Eigen::VectorXd acted(n);
        mean_jacobian_action(grid, jmean.data(), cb.mean.data(), nu, quad_bar.data(),
                             acted.data());
        parts.mem_quadratic.col(col) += project(acted);

        for (int i = 0; i < r; ++i) {
            negative_jacobian_action(grid, jphis[static_cast<std::size_t>(i)].data(),
                                     cb.modes.col(i).data(), quad_bar.data(), acted.data());
            parts.mem_cubic.col(static_cast<Eigen::Index>(i) * rr + col) = project(acted);
        }
    });

    return parts;
}

void save_eapg(const EapgCoefficients& coeffs, int d, const std::string& grid_hash,
               const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "rom.manifest", std::ios::trunc);
    if (!out) throw IoError("cannot open " + (dir / "rom.manifest").string());
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "kind = eapg\n"
        << "r = " << coeffs.r << "\n"
        << "d = " << d << "\n"
        << "nu = " << fmt(coeffs.nu) << "\n"
        << "grid_hash = " << grid_hash << "\n"
        << "memory_kind = "
        << (coeffs.memory.kind == MemoryLength::Kind::Scalar ? "scalar" : "matrix") << "\n"
        << "rho = " << fmt(coeffs.memory.rho) << "\n";
    if (coeffs.memory.kind == MemoryLength::Kind::Scalar) {
        out << "w = " << fmt(coeffs.memory.weight) << "\n";
    } else {
        for (Eigen::Index i = 0; i < coeffs.memory.weight_matrix.rows(); ++i) {
            out << "W_row =";
            for (Eigen::Index j = 0; j < coeffs.memory.weight_matrix.cols(); ++j)
                out << ' ' << fmt(coeffs.memory.weight_matrix(i, j));
            out << "\n";
        }
    }
    tensor_io::write_matrix(coeffs.cubic, dir / "K.bin");
    tensor_io::write_matrix(coeffs.quadratic, dir / "Q.bin");
    tensor_io::write_matrix(coeffs.linear, dir / "L.bin");
    tensor_io::write_matrix(coeffs.constant, dir / "C.bin");
}

EapgCoefficients load_eapg(const std::filesystem::path& dir) {
    const KeyValueFile kv = parse_key_value_file(dir / "rom.manifest");
    if (kv.require("kind") != "eapg")
        throw ValidationError(dir.string() + " does not hold eAPG coefficients");
    EapgCoefficients e;
    e.r = std::stoi(kv.require("r"));
    e.nu = std::stod(kv.require("nu"));
    const double rho = std::stod(kv.require("rho"));
    if (kv.require("memory_kind") == "scalar") {
        e.memory = MemoryLength::scalar(std::stod(kv.require("w")), rho);
    } else {
        const auto rows = kv.all("W_row");
        Eigen::MatrixXd w(rows.size(), rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::istringstream row(rows[i]);
            for (std::size_t j = 0; j < rows.size(); ++j)
                if (!(row >> w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))))
                    throw ValidationError("rom.manifest: malformed W_row");
        }
        e.memory = MemoryLength::matrix(w, rho);
    }
    const auto r = static_cast<Eigen::Index>(e.r);
    e.cubic = tensor_io::read_matrix(r, r * r * r, dir / "K.bin");
    e.quadratic = tensor_io::read_matrix(r, r * r, dir / "Q.bin");
    e.linear = tensor_io::read_matrix(r, r, dir / "L.bin");
    e.constant = tensor_io::read_matrix(r, 1, dir / "C.bin");
    return e;
}

} // namespace romforge
