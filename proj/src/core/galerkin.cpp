#include "galerkin.hpp"

#include "error.hpp"
#include "threads.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace romforge {

SpatialGromCoefficients assemble_grom_spatial(const CoarseBasis& cb, double nu) {
    if (!(nu > 0)) throw ValidationError("nu must be strictly positive");
    if (!(cb.mean.grid() == cb.grid))
        throw ValidationError("coarse basis mean/grid mismatch");

    const Grid& grid = cb.grid;
    const std::int64_t n = grid.value_count();
    const int r = cb.rank();

    SpatialGromCoefficients sc;
    sc.r = r;
    sc.quadratic.resize(n, static_cast<Eigen::Index>(r) * r);
    sc.linear.resize(n, r);
    sc.constant.resize(n);

    // C^N = -(u'.grad)u' + nu lap u'
    {
        std::vector<double> conv(static_cast<std::size_t>(n)), lap(static_cast<std::size_t>(n));
        fd::convect(grid, cb.mean.data(), cb.mean.data(), conv.data());
        fd::laplacian(grid, cb.mean.data(), lap.data());
        for (std::int64_t i = 0; i < n; ++i)
            sc.constant(i) = -conv[static_cast<std::size_t>(i)] +
                             nu * lap[static_cast<std::size_t>(i)];
    }

    // L^N column i = -(phi_i.grad)u' - (u'.grad)phi_i + nu lap phi_i
    parallel_for(0, r, [&](std::int64_t i) {
        std::vector<double> t1(static_cast<std::size_t>(n)), t2(static_cast<std::size_t>(n)),
            t3(static_cast<std::size_t>(n));
        const double* phi = cb.modes.col(i).data();
        fd::convect(grid, phi, cb.mean.data(), t1.data());
        fd::convect(grid, cb.mean.data(), phi, t2.data());
        fd::laplacian(grid, phi, t3.data());
        for (std::int64_t k = 0; k < n; ++k)
            sc.linear(k, i) = -t1[static_cast<std::size_t>(k)] -
                              t2[static_cast<std::size_t>(k)] +
                              nu * t3[static_cast<std::size_t>(k)];
    });

    // Q^N column (i,k) = -(phi_i.grad)phi_k
    parallel_for(0, static_cast<std::int64_t>(r) * r, [&](std::int64_t col) {
        const auto i = static_cast<int>(col / r);
        const auto k = static_cast<int>(col % r);
        std::vector<double> conv(static_cast<std::size_t>(n));
        fd::convect(grid, cb.modes.col(i).data(), cb.modes.col(k).data(), conv.data());
        for (std::int64_t p = 0; p < n; ++p)
            sc.quadratic(p, col) = -conv[static_cast<std::size_t>(p)];
    });

    return sc;
}

GromCoefficients project_grom(const SpatialGromCoefficients& spatial, const CoarseBasis& cb,
                              double nu) {
    if (spatial.r != cb.rank())
        throw ValidationError("spatial tensors assembled for r = " + std::to_string(spatial.r) +
                              ", basis has r = " + std::to_string(cb.rank()));
    if (spatial.quadratic.rows() != cb.modes.rows())
        throw ValidationError("spatial tensor row count does not match the basis");

    GromCoefficients g;
    g.r = spatial.r;
    g.nu = nu;
    g.quadratic = cb.modes.transpose() * spatial.quadratic;
    g.linear = cb.modes.transpose() * spatial.linear;
    g.constant = cb.modes.transpose() * spatial.constant;
    return g;
}

namespace tensor_io {

namespace {

void swap_if_needed(double* values, std::size_t count) {
    if constexpr (std::endian::native != std::endian::little) {
        for (std::size_t i = 0; i < count; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, &values[i], 8);
            bits = __builtin_bswap64(bits);
            std::memcpy(&values[i], &bits, 8);
        }
    } else {
        (void)values;
        (void)count;
    }
}

} // namespace

void write_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    std::vector<double> buf(m.data(), m.data() + m.size());
    swap_if_needed(buf.data(), buf.size());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!out) throw IoError("write failed for " + path.string());
}

Eigen::MatrixXd read_matrix(Eigen::Index rows, Eigen::Index cols,
                            const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const std::int64_t bytes = in.tellg();
    in.seekg(0);
    const std::int64_t expected = static_cast<std::int64_t>(rows) * cols * 8;
    if (bytes != expected)
        throw ValidationError(path.string() + ": expected " + std::to_string(expected) +
                              " bytes, found " + std::to_string(bytes));
    Eigen::MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), expected);
    if (!in) throw IoError("read failed for " + path.string());
    swap_if_needed(m.data(), static_cast<std::size_t>(m.size()));
    return m;
}

} // namespace tensor_io

void save_grom(const GromCoefficients& coeffs, int d, const std::string& grid_hash,
               const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "rom.manifest", std::ios::trunc);
    if (!out) throw IoError("cannot open " + (dir / "rom.manifest").string());
    char nu_buf[32];
    std::snprintf(nu_buf, sizeof(nu_buf), "%.17g", coeffs.nu);
    out << "kind = grom\n"
        << "r = " << coeffs.r << "\n"
        << "d = " << d << "\n"
        << "nu = " << nu_buf << "\n"
        << "grid_hash = " << grid_hash << "\n";
    tensor_io::write_matrix(coeffs.quadratic, dir / "Q.bin");
    tensor_io::write_matrix(coeffs.linear, dir / "L.bin");
    tensor_io::write_matrix(coeffs.constant, dir / "C.bin");
}

GromCoefficients load_grom(const std::filesystem::path& dir) {
    const KeyValueFile kv = parse_key_value_file(dir / "rom.manifest");
    if (kv.require("kind") != "grom")
        throw ValidationError(dir.string() + " does not hold G-ROM coefficients");
    GromCoefficients g;
    g.r = std::stoi(kv.require("r"));
    g.nu = std::stod(kv.require("nu"));
    const auto r = static_cast<Eigen::Index>(g.r);
    g.quadratic = tensor_io::read_matrix(r, r * r, dir / "Q.bin");
    g.linear = tensor_io::read_matrix(r, r, dir / "L.bin");
    g.constant = tensor_io::read_matrix(r, 1, dir / "C.bin");
    return g;
}

} // namespace romforge
