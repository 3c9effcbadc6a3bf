#include "pod.hpp"

#include "error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace romforge {

namespace {

void check_rank_arg(int r, int m) {
    if (r < 1 || r > m)
        throw ValidationError("r must lie in [1, " + std::to_string(m) + "], got " +
                              std::to_string(r));
}

Eigen::Map<const Eigen::VectorXd> as_vector(const VelocityField& v) {
    return {v.data(), v.size()};
}

} // namespace

PodBasis compute_pod(const FluctuationSet& fluctuations) {
    const int m = static_cast<int>(fluctuations.fluctuations.cols());
    if (m < 2) throw ValidationError("POD needs at least 2 snapshots");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(fluctuations.fluctuations,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericError("SVD did not converge");

    PodBasis pod;
    pod.grid = fluctuations.grid;
    pod.mean = fluctuations.mean;
    pod.times = fluctuations.times;
    pod.modes = svd.matrixU();
    pod.sigma = svd.singularValues();
    pod.right = svd.matrixV();

    if (!(pod.sigma(0) > 0.0))
        throw NumericError("zero-energy ensemble: all fluctuations vanish");
    if (pod.sigma(m - 1) <= 1e-12 * pod.sigma(0))
        std::cerr << "[romforge] warning: fluctuation matrix is numerically rank-deficient"
                  << " (sigma_min/sigma_max = " << pod.sigma(m - 1) / pod.sigma(0) << ")\n";

    // Deterministic sign convention; V gets the matching flip so the product
    // still reconstructs U*.
    for (int k = 0; k < m; ++k) {
        Eigen::Index imax = 0;
        pod.modes.col(k).cwiseAbs().maxCoeff(&imax);
        if (pod.modes(imax, k) < 0.0) {
            pod.modes.col(k) = -pod.modes.col(k);
            pod.right.col(k) = -pod.right.col(k);
        }
    }
    return pod;
}

double truncation_error(const PodBasis& pod, int r) {
    check_rank_arg(r, pod.mode_count());
    const double total = pod.sigma.squaredNorm();
    const double kept = pod.sigma.head(r).squaredNorm();
    return 1.0 - kept / total;
}

CoarseBasis truncate(const PodBasis& pod, int r) {
    check_rank_arg(r, pod.mode_count());
    CoarseBasis cb;
    cb.grid = pod.grid;
    cb.mean = pod.mean;
    cb.modes = pod.modes.leftCols(r);
    cb.sigma = pod.sigma.head(r);
    cb.total_energy = pod.sigma.squaredNorm();
    cb.times = pod.times;
    return cb;
}

CoefficientSeries project_reference(const CoarseBasis& cb, const FluctuationSet& fluctuations) {
    if (!(cb.grid == fluctuations.grid))
        throw ValidationError("basis and fluctuations live on different grids");
    CoefficientSeries series;
    series.times = fluctuations.times;
    series.coefficients = cb.modes.transpose() * fluctuations.fluctuations;
    return series;
}

VelocityField apply_coarse_projector(const CoarseBasis& cb, const VelocityField& v) {
    if (!(cb.grid == v.grid())) throw ValidationError("projector: grid mismatch");
    const Eigen::VectorXd coeffs = cb.modes.transpose() * as_vector(v);
    VelocityField out(v.grid());
    Eigen::Map<Eigen::VectorXd>(out.data(), out.size()) = cb.modes * coeffs;
    return out;
}

VelocityField apply_fine_projector(const CoarseBasis& cb, const VelocityField& v) {
    if (!(cb.grid == v.grid())) throw ValidationError("projector: grid mismatch");
    const Eigen::VectorXd coeffs = cb.modes.transpose() * as_vector(v);
    VelocityField out(v.grid());
    Eigen::Map<Eigen::VectorXd>(out.data(), out.size()) =
        as_vector(v) - cb.modes * coeffs;
    return out;
}

BasisBundle make_basis_bundle(const SnapshotSet& snapshots, const FluctuationSet& fluctuations,
                              const PodBasis& pod, int r) {
    BasisBundle bundle;
    bundle.basis = truncate(pod, r);
    bundle.sigma_full = pod.sigma;
    bundle.a0 = bundle.basis.modes.transpose() * fluctuations.fluctuations.col(0);
    bundle.nu = snapshots.nu;
    bundle.u_ref = snapshots.u_ref;
    return bundle;
}

void save_basis(const BasisBundle& bundle, const std::filesystem::path& dir) {
    const CoarseBasis& cb = bundle.basis;
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "basis.manifest", std::ios::trunc);
    if (!out) throw IoError("cannot open " + (dir / "basis.manifest").string());

    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };

    const Grid& g = cb.grid;
    out << "# truncated modal basis\n";
    out << "d = " << g.dims << "\n";
    out << "n_x = " << g.cells[0] << "\nn_y = " << g.cells[1] << "\n";
    if (g.dims == 3) out << "n_z = " << g.cells[2] << "\n";
    out << "dx = " << fmt(g.spacing[0]) << "\ndy = " << fmt(g.spacing[1]) << "\n";
    if (g.dims == 3) out << "dz = " << fmt(g.spacing[2]) << "\n";
    out << "grid_hash = " << grid_hash(g) << "\n";
    out << "r = " << cb.rank() << "\n";
    out << "m = " << bundle.sigma_full.size() << "\n";
    out << "nu = " << fmt(bundle.nu) << "\n";
    out << "u_ref = " << fmt(bundle.u_ref) << "\n";
    out << "total_energy = " << fmt(cb.total_energy) << "\n";
    for (Eigen::Index k = 0; k < bundle.sigma_full.size(); ++k)
        out << "sigma = " << fmt(bundle.sigma_full(k)) << "\n";
    for (double t : cb.times) out << "time = " << fmt(t) << "\n";
    for (Eigen::Index k = 0; k < bundle.a0.size(); ++k)
        out << "a0 = " << fmt(bundle.a0(k)) << "\n";
    out << "mean = mean.bin\n";
    save_field(cb.mean, dir / "mean.bin");
    for (int k = 0; k < cb.rank(); ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "mode_%03d.bin", k + 1);
        out << "mode = " << name << "\n";
        VelocityField mode(cb.grid);
        Eigen::Map<Eigen::VectorXd>(mode.data(), mode.size()) = cb.modes.col(k);
        save_field(mode, dir / name);
    }
    if (!out) throw IoError("write failed for " + (dir / "basis.manifest").string());
}

BasisBundle load_basis(const std::filesystem::path& dir) {
    const KeyValueFile kv = parse_key_value_file(dir / "basis.manifest");
    auto to_d = [&](const std::string& key) {
        const std::string s = kv.require(key);
        try {
            return std::stod(s);
        } catch (const std::exception&) {
            throw ValidationError("basis manifest: bad number for " + key);
        }
    };

    const int d = static_cast<int>(to_d("d"));
    Grid grid = d == 2 ? make_grid_2d(static_cast<int>(to_d("n_x")),
                                      static_cast<int>(to_d("n_y")), to_d("dx"), to_d("dy"))
                       : make_grid_3d(static_cast<int>(to_d("n_x")),
                                      static_cast<int>(to_d("n_y")),
                                      static_cast<int>(to_d("n_z")), to_d("dx"), to_d("dy"),
                                      to_d("dz"));

    BasisBundle loaded;
    loaded.nu = to_d("nu");
    loaded.u_ref = to_d("u_ref");

    CoarseBasis& cb = loaded.basis;
    cb.grid = grid;
    cb.total_energy = to_d("total_energy");
    cb.mean = load_field(grid, dir / kv.require("mean"));

    const auto sigma_entries = kv.all("sigma");
    loaded.sigma_full.resize(static_cast<Eigen::Index>(sigma_entries.size()));
    for (std::size_t k = 0; k < sigma_entries.size(); ++k)
        loaded.sigma_full(static_cast<Eigen::Index>(k)) = std::stod(sigma_entries[k]);

    for (const std::string& t : kv.all("time")) cb.times.push_back(std::stod(t));

    const auto a0_entries = kv.all("a0");
    loaded.a0.resize(static_cast<Eigen::Index>(a0_entries.size()));
    for (std::size_t k = 0; k < a0_entries.size(); ++k)
        loaded.a0(static_cast<Eigen::Index>(k)) = std::stod(a0_entries[k]);

    const auto mode_files = kv.all("mode");
    const int r = static_cast<int>(to_d("r"));
    if (static_cast<int>(mode_files.size()) != r)
        throw ValidationError("basis manifest lists " + std::to_string(mode_files.size()) +
                              " modes but r = " + std::to_string(r));
    cb.modes.resize(grid.value_count(), r);
    for (int k = 0; k < r; ++k) {
        const VelocityField mode = load_field(grid, dir / mode_files[static_cast<std::size_t>(k)]);
        cb.modes.col(k) = Eigen::Map<const Eigen::VectorXd>(mode.data(), mode.size());
    }
    cb.sigma = loaded.sigma_full.head(std::min<Eigen::Index>(r, loaded.sigma_full.size()));
    return loaded;
}

} // namespace romforge
