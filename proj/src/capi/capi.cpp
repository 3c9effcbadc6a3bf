#include "romforge/romforge.h"

#include "../core/apg_reference.hpp"
#include "../core/diagnostics.hpp"
#include "../core/eapg.hpp"
#include "../core/error.hpp"
#include "../core/galerkin.hpp"
#include "../core/memory_opt.hpp"
#include "../core/pod.hpp"
#include "../core/rom_online.hpp"
#include "../core/snapshot_io.hpp"
#include "../core/synth.hpp"
#include "../core/threads.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace romforge;

// Handle payloads. Handles are immutable after creation, so concurrent reads
// are safe without locks.
struct rf_snapshots {
    SnapshotSet set;
};

struct rf_basis {
    BasisBundle bundle;
};

struct rf_rom {
    int kind = 0; // 0 grom, 1 eapg
    GromCoefficients grom;
    EapgCoefficients eapg;
    int d = 0;
    std::string hash;
};

struct rf_series {
    CoefficientSeries series;
};

struct rf_opt_report {
    OptimizationReport report;
    int kind = 0;
    double rho = 1.0;
    int r = 0;
    int n_periods = 0;
};

namespace {

thread_local std::string t_last_error;

template <typename Fn>
rf_status guarded(Fn&& fn) {
    try {
        fn();
        t_last_error.clear();
        return RF_OK;
    } catch (const ValidationError& e) {
        t_last_error = e.what();
        return RF_ERR_VALIDATION;
    } catch (const NumericError& e) {
        t_last_error = e.what();
        return RF_ERR_NUMERIC;
    } catch (const IoError& e) {
        t_last_error = e.what();
        return RF_ERR_IO;
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return RF_ERR_INTERNAL;
    } catch (...) {
        t_last_error = "unknown error";
        return RF_ERR_INTERNAL;
    }
}

void require(bool ok, const char* message) {
    if (!ok) throw ValidationError(message);
}

void copy_out(const double* src, Eigen::Index n, double* dst, int32_t len, const char* what) {
    require(dst != nullptr, "output buffer is null");
    require(len >= n, (std::string(what) + ": buffer too small").c_str());
    std::memcpy(dst, src, static_cast<std::size_t>(n) * sizeof(double));
}

double resolve_nu(const rf_basis* b, double nu_override) {
    return nu_override > 0 ? nu_override : b->bundle.nu;
}

MemoryLength memory_from_weight_file(const std::filesystem::path& path, double rho) {
    const KeyValueFile kv = parse_key_value_file(path);
    const std::string kind = kv.require("kind");
    if (kind == "scalar") return MemoryLength::scalar(std::stod(kv.require("w")), rho);
    if (kind != "matrix")
        throw ValidationError(path.string() + ": kind must be scalar or matrix");
    const auto rows = kv.all("W_row");
    require(!rows.empty(), "memory spec: matrix kind needs W_row lines");
    Eigen::MatrixXd w(rows.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::istringstream row(rows[i]);
        for (std::size_t j = 0; j < rows.size(); ++j)
            if (!(row >> w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))))
                throw ValidationError(path.string() + ": malformed W_row");
    }
    return MemoryLength::matrix(w, rho);
}

rf_rom* build_eapg_rom(const rf_basis* b, double nu_override,
                       const std::function<MemoryLength(double rho)>& make_memory) {
    const double nu = resolve_nu(b, nu_override);
    const CoarseBasis& cb = b->bundle.basis;
    require(b->bundle.a0.size() == cb.rank(), "basis bundle is missing a stored a0");
    const double rho = spectral_radius(projected_jacobian(cb, nu, b->bundle.a0));
    const EapgTensorParts parts = build_eapg_parts(cb, nu);
    auto rom = std::make_unique<rf_rom>();
    rom->kind = 1;
    rom->eapg = parts.with_memory(make_memory(rho));
    rom->d = cb.grid.dims;
    rom->hash = grid_hash(cb.grid);
    return rom.release();
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

extern "C" {

const char* rf_version(void) { return "0.1.0"; }

const char* rf_last_error(void) { return t_last_error.c_str(); }

void rf_set_threads(int32_t n) { set_thread_count(n); }

/* --- snapshots ------------------------------------------------------------ */

rf_status rf_snapshots_load(const char* manifest_path, rf_snapshots** out) {
    return guarded([&] {
        require(manifest_path && out, "null argument");
        auto handle = std::make_unique<rf_snapshots>();
        handle->set = load_snapshots(manifest_path);
        *out = handle.release();
    });
}

void rf_snapshots_free(rf_snapshots* s) { delete s; }

rf_status rf_snapshots_count(const rf_snapshots* s, int32_t* out) {
    return guarded([&] {
        require(s && out, "null argument");
        *out = s->set.count();
    });
}

rf_status rf_snapshots_grid(const rf_snapshots* s, int32_t* d, int32_t* n_cells,
                            double* spacing) {
    return guarded([&] {
        require(s && d && n_cells && spacing, "null argument");
        *d = s->set.grid.dims;
        for (int j = 0; j < 3; ++j) {
            n_cells[j] = s->set.grid.cells[static_cast<std::size_t>(j)];
            spacing[j] = s->set.grid.spacing[static_cast<std::size_t>(j)];
        }
    });
}

rf_status rf_snapshots_nu(const rf_snapshots* s, double* out) {
    return guarded([&] {
        require(s && out, "null argument");
        *out = s->set.nu;
    });
}

rf_status rf_snapshots_u_ref(const rf_snapshots* s, double* out) {
    return guarded([&] {
        require(s && out, "null argument");
        *out = s->set.u_ref;
    });
}

/* --- synth ----------------------------------------------------------------- */

rf_status rf_synth_generate(const char* recipe_path, const char* out_dir) {
    return guarded([&] {
        require(recipe_path && out_dir, "null argument");
        const KeyValueFile kv = parse_key_value_file(recipe_path);
        auto num = [&](const char* key, double fallback) {
            auto v = kv.get(key);
            return v ? std::stod(*v) : fallback;
        };

        const int d = static_cast<int>(num("d", 2));
        const Grid grid =
            d == 2 ? make_grid_2d(static_cast<int>(num("n_x", 16)),
                                  static_cast<int>(num("n_y", 16)), num("dx", 0.05),
                                  num("dy", 0.05))
                   : make_grid_3d(static_cast<int>(num("n_x", 10)),
                                  static_cast<int>(num("n_y", 8)),
                                  static_cast<int>(num("n_z", 6)), num("dx", 0.05),
                                  num("dy", 0.05), num("dz", 0.05));

        const int mode_count = static_cast<int>(num("modes", 2));
        const int samples = static_cast<int>(num("samples", 32));
        require(mode_count >= 1, "recipe needs modes >= 1");
        require(samples >= 2, "recipe needs samples >= 2");

        std::mt19937_64 rng(static_cast<std::uint64_t>(num("seed", 1)));
        const int waves = static_cast<int>(num("waves_per_mode", 4));
        const VelocityField mean =
            random_smooth_field(grid, rng, waves, num("mean_amplitude", 1.0));
        std::vector<VelocityField> raw_modes;
        for (int k = 0; k < mode_count; ++k)
            raw_modes.push_back(random_smooth_field(grid, rng, waves, 1.0));

        // Harmonic cos/sin pairs with geometric amplitude decay.
        CoefficientSeries traj;
        traj.coefficients.resize(mode_count, samples);
        const double t0 = num("t_start", 0.0);
        const double dt = num("dt_sample", 0.05);
        const double amp0 = num("mode_amplitude", 1.0);
        const double decay = num("amplitude_decay", 0.5);
        const double f0 = num("frequency", 1.0);
        const double growth = num("frequency_growth", 1.7);
        for (int m = 0; m < samples; ++m) {
            const double t = t0 + m * dt;
            traj.times.push_back(t);
            for (int k = 0; k < mode_count; ++k) {
                const int pair = k / 2;
                const double amp = amp0 * std::pow(decay, pair);
                const double omega = 2.0 * std::numbers::pi * f0 * std::pow(growth, pair);
                traj.coefficients(k, m) =
                    (k % 2 == 0) ? amp * std::cos(omega * t) : amp * std::sin(omega * t);
            }
        }

        const auto ens = manufactured_ensemble(grid, raw_modes, traj, mean,
                                               num("nu", 0.01), num("u_ref", 0.0));
        save_snapshots(ens.snapshots, out_dir);
    });
}

/* --- basis ------------------------------------------------------------------ */

rf_status rf_basis_compute(const rf_snapshots* s, int32_t r, rf_basis** out) {
    return guarded([&] {
        require(s && out, "null argument");
        const FluctuationSet fluct = split_mean(s->set);
        const PodBasis pod = compute_pod(fluct);
        require(r >= 1 && r <= pod.mode_count(), "r out of range for this ensemble");
        auto handle = std::make_unique<rf_basis>();
        handle->bundle = make_basis_bundle(s->set, fluct, pod, r);
        *out = handle.release();
    });
}

void rf_basis_free(rf_basis* b) { delete b; }

rf_status rf_basis_save(const rf_basis* b, const char* dir) {
    return guarded([&] {
        require(b && dir, "null argument");
        save_basis(b->bundle, dir);
    });
}

rf_status rf_basis_load(const char* dir, rf_basis** out) {
    return guarded([&] {
        require(dir && out, "null argument");
        auto handle = std::make_unique<rf_basis>();
        handle->bundle = load_basis(dir);
        *out = handle.release();
    });
}

rf_status rf_basis_rank(const rf_basis* b, int32_t* out) {
    return guarded([&] {
        require(b && out, "null argument");
        *out = b->bundle.basis.rank();
    });
}

rf_status rf_basis_mode_total(const rf_basis* b, int32_t* out) {
    return guarded([&] {
        require(b && out, "null argument");
        *out = static_cast<int32_t>(b->bundle.sigma_full.size());
    });
}

rf_status rf_basis_singular_values(const rf_basis* b, double* buffer, int32_t len) {
    return guarded([&] {
        require(b, "null argument");
        copy_out(b->bundle.sigma_full.data(), b->bundle.sigma_full.size(), buffer, len,
                 "singular values");
    });
}

rf_status rf_basis_truncation_error(const rf_basis* b, int32_t r, double* out) {
    return guarded([&] {
        require(b && out, "null argument");
        const Eigen::VectorXd& sigma = b->bundle.sigma_full;
        require(r >= 1 && r <= sigma.size(), "r out of range");
        const double total = sigma.squaredNorm();
        *out = 1.0 - sigma.head(r).squaredNorm() / total;
    });
}

rf_status rf_basis_nu(const rf_basis* b, double* out) {
    return guarded([&] {
        require(b && out, "null argument");
        *out = b->bundle.nu;
    });
}

rf_status rf_basis_u_ref(const rf_basis* b, double* out) {
    return guarded([&] {
        require(b && out, "null argument");
        *out = b->bundle.u_ref;
    });
}

rf_status rf_basis_time_count(const rf_basis* b, int32_t* out) {
    return guarded([&] {
        require(b && out, "null argument");
        *out = static_cast<int32_t>(b->bundle.basis.times.size());
    });
}

rf_status rf_basis_times(const rf_basis* b, double* buffer, int32_t len) {
    return guarded([&] {
        require(b, "null argument");
        copy_out(b->bundle.basis.times.data(),
                 static_cast<Eigen::Index>(b->bundle.basis.times.size()), buffer, len,
                 "times");
    });
}

rf_status rf_basis_a0(const rf_basis* b, double* buffer, int32_t len) {
    return guarded([&] {
        require(b, "null argument");
        copy_out(b->bundle.a0.data(), b->bundle.a0.size(), buffer, len, "a0");
    });
}

rf_status rf_basis_reference_series(const rf_basis* b, const rf_snapshots* s,
                                    rf_series** out) {
    return guarded([&] {
        require(b && s && out, "null argument");
        auto handle = std::make_unique<rf_series>();
        handle->series = project_reference(b->bundle.basis, split_mean(s->set));
        *out = handle.release();
    });
}

/* --- reduced models ----------------------------------------------------------- */

rf_status rf_rom_build_grom(const rf_basis* b, double nu_override, rf_rom** out) {
    return guarded([&] {
        require(b && out, "null argument");
        const double nu = resolve_nu(b, nu_override);
        const CoarseBasis& cb = b->bundle.basis;
        auto rom = std::make_unique<rf_rom>();
        rom->kind = 0;
        rom->grom = project_grom(assemble_grom_spatial(cb, nu), cb, nu);
        rom->d = cb.grid.dims;
        rom->hash = grid_hash(cb.grid);
        *out = rom.release();
    });
}

rf_status rf_rom_build_eapg_scalar(const rf_basis* b, double nu_override, double w,
                                   rf_rom** out) {
    return guarded([&] {
        require(b && out, "null argument");
        *out = build_eapg_rom(b, nu_override,
                              [&](double rho) { return MemoryLength::scalar(w, rho); });
    });
}

rf_status rf_rom_build_eapg_matrix(const rf_basis* b, double nu_override, const double* W,
                                   int32_t r, rf_rom** out) {
    return guarded([&] {
        require(b && W && out, "null argument");
        require(r == b->bundle.basis.rank(), "W order must match the basis rank");
        Eigen::MatrixXd w(r, r);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) w(i, j) = W[i * r + j];
        *out = build_eapg_rom(b, nu_override,
                              [&](double rho) { return MemoryLength::matrix(w, rho); });
    });
}

rf_status rf_rom_build_eapg_from_file(const rf_basis* b, double nu_override,
                                      const char* memory_cfg_path, rf_rom** out) {
    return guarded([&] {
        require(b && memory_cfg_path && out, "null argument");
        *out = build_eapg_rom(b, nu_override, [&](double rho) {
            return memory_from_weight_file(memory_cfg_path, rho);
        });
    });
}

void rf_rom_free(rf_rom* rom) { delete rom; }

rf_status rf_rom_save(const rf_rom* rom, const char* dir) {
    return guarded([&] {
        require(rom && dir, "null argument");
        if (rom->kind == 0)
            save_grom(rom->grom, rom->d, rom->hash, dir);
        else
            save_eapg(rom->eapg, rom->d, rom->hash, dir);
    });
}

rf_status rf_rom_load(const char* dir, rf_rom** out) {
    return guarded([&] {
        require(dir && out, "null argument");
        const KeyValueFile kv =
            parse_key_value_file(std::filesystem::path(dir) / "rom.manifest");
        auto rom = std::make_unique<rf_rom>();
        rom->d = std::stoi(kv.require("d"));
        rom->hash = kv.require("grid_hash");
        if (kv.require("kind") == "grom") {
            rom->kind = 0;
            rom->grom = load_grom(dir);
        } else {
            rom->kind = 1;
            rom->eapg = load_eapg(dir);
        }
        *out = rom.release();
    });
}

rf_status rf_rom_kind(const rf_rom* rom, int32_t* out) {
    return guarded([&] {
        require(rom && out, "null argument");
        *out = rom->kind;
    });
}

rf_status rf_rom_rank(const rf_rom* rom, int32_t* out) {
    return guarded([&] {
        require(rom && out, "null argument");
        *out = rom->kind == 0 ? rom->grom.r : rom->eapg.r;
    });
}

/* --- integration ----------------------------------------------------------------- */

void rf_integrator_defaults(rf_integrator_options* opts) {
    if (!opts) return;
    opts->scheme = 1;
    opts->dt = 1e-3;
    opts->rel_tol = 1e-6;
    opts->abs_tol = 1e-9;
    opts->blowup_factor = 1e6;
}

rf_status rf_simulate(const rf_rom* rom, const double* a0, int32_t r, const double* times,
                      int32_t n_times, const rf_integrator_options* opts, rf_series** out,
                      rf_run_report* report) {
    return guarded([&] {
        require(rom && a0 && times && out, "null argument");
        const int rom_r = rom->kind == 0 ? rom->grom.r : rom->eapg.r;
        require(r == rom_r, "a0 length must match the model order");
        require(n_times >= 1, "need at least one output time");

        rf_integrator_options defaults;
        rf_integrator_defaults(&defaults);
        const rf_integrator_options& o = opts ? *opts : defaults;

        IntegratorConfig cfg;
        cfg.scheme = o.scheme == 0 ? IntegratorConfig::Scheme::ExplicitEuler
                                   : IntegratorConfig::Scheme::DormandPrince;
        cfg.dt = o.dt;
        cfg.rel_tol = o.rel_tol;
        cfg.abs_tol = o.abs_tol;
        cfg.blowup_factor = o.blowup_factor;

        const Eigen::Map<const Eigen::VectorXd> a0_vec(a0, r);
        const std::vector<double> time_vec(times, times + n_times);
        const RhsFunction rhs =
            rom->kind == 0 ? make_rhs(rom->grom) : make_rhs(rom->eapg);
        IntegrationResult res = integrate(rhs, a0_vec, time_vec, cfg);

        if (report) {
            report->steps_taken = res.steps_taken;
            report->steps_rejected = res.steps_rejected;
            report->blew_up = res.blew_up ? 1 : 0;
            report->step_underflow = res.step_underflow ? 1 : 0;
            report->completed = res.completed ? 1 : 0;
            report->failure_time = res.completed ? 0.0 : res.failure_time;
        }
        auto handle = std::make_unique<rf_series>();
        handle->series = std::move(res.series);
        *out = handle.release();
    });
}

/* --- series ----------------------------------------------------------------------- */

rf_status rf_series_create(const double* times, int32_t n, const double* values, int32_t r,
                           rf_series** out) {
    return guarded([&] {
        require(times && values && out, "null argument");
        require(n >= 0 && r >= 1, "bad series shape");
        auto handle = std::make_unique<rf_series>();
        handle->series.times.assign(times, times + n);
        handle->series.coefficients =
            Eigen::Map<const Eigen::MatrixXd>(values, r, n);
        *out = handle.release();
    });
}

void rf_series_free(rf_series* s) { delete s; }

rf_status rf_series_dims(const rf_series* s, int32_t* r, int32_t* n) {
    return guarded([&] {
        require(s && r && n, "null argument");
        *r = s->series.modes();
        *n = s->series.samples();
    });
}

rf_status rf_series_times(const rf_series* s, double* buffer, int32_t len) {
    return guarded([&] {
        require(s, "null argument");
        copy_out(s->series.times.data(), static_cast<Eigen::Index>(s->series.times.size()),
                 buffer, len, "series times");
    });
}

rf_status rf_series_values(const rf_series* s, double* buffer, int32_t len) {
    return guarded([&] {
        require(s, "null argument");
        copy_out(s->series.coefficients.data(), s->series.coefficients.size(), buffer, len,
                 "series values");
    });
}

rf_status rf_series_save_csv(const rf_series* s, const char* path) {
    return guarded([&] {
        require(s && path, "null argument");
        save_coefficient_series(s->series, path);
    });
}

rf_status rf_series_load_csv(const char* path, rf_series** out) {
    return guarded([&] {
        require(path && out, "null argument");
        auto handle = std::make_unique<rf_series>();
        handle->series = load_coefficient_series(path);
        *out = handle.release();
    });
}

/* --- optimization ------------------------------------------------------------------- */

void rf_optimize_defaults(rf_optimize_options* opts) {
    if (!opts) return;
    opts->kind = 0;
    opts->n_periods = 2;
    opts->period = 0.0;
    opts->w_max = 100.0;
    opts->max_iterations = 500;
    opts->warm_start = 1;
}

rf_status rf_optimize_memory(const rf_basis* b, const rf_snapshots* s,
                             const rf_optimize_options* opts, rf_opt_report** out) {
    return guarded([&] {
        require(b && s && out, "null argument");
        rf_optimize_options defaults;
        rf_optimize_defaults(&defaults);
        const rf_optimize_options& o = opts ? *opts : defaults;

        const CoarseBasis& cb = b->bundle.basis;
        const FluctuationSet fluct = split_mean(s->set);
        const CoefficientSeries reference = project_reference(cb, fluct);
        const Eigen::VectorXd a0 = reference.coefficients.col(0);

        const double nu = b->bundle.nu;
        const double rho = spectral_radius(projected_jacobian(cb, nu, a0));
        const EapgTensorParts parts = build_eapg_parts(cb, nu);

        TrackingConfig tracking;
        tracking.n_periods = o.n_periods;
        tracking.period = o.period;

        OptimizeOptions core_opts;
        core_opts.w_max = o.w_max;
        core_opts.max_iterations = o.max_iterations;

        auto handle = std::make_unique<rf_opt_report>();
        handle->kind = o.kind;
        handle->rho = rho;
        handle->r = cb.rank();
        handle->n_periods = o.n_periods;

        if (o.kind == 0) {
            handle->report = optimize_scalar_weight(
                scalar_tracking_objective(parts, rho, a0, reference, tracking), core_opts);
        } else {
            Eigen::MatrixXd w0 = Eigen::MatrixXd::Identity(cb.rank(), cb.rank());
            if (o.warm_start) {
                const auto scalar_rep = optimize_scalar_weight(
                    scalar_tracking_objective(parts, rho, a0, reference, tracking),
                    core_opts);
                if (std::isfinite(scalar_rep.best_objective) && scalar_rep.best_weight > 0)
                    w0 *= scalar_rep.best_weight;
            }
            handle->report = optimize_matrix_weight(
                matrix_tracking_objective(parts, rho, a0, reference, tracking), cb.rank(),
                core_opts, w0);
        }
        handle->report.n_periods_used = o.n_periods;
        *out = handle.release();
    });
}

void rf_opt_report_free(rf_opt_report* rep) { delete rep; }

rf_status rf_opt_report_kind(const rf_opt_report* rep, int32_t* out) {
    return guarded([&] {
        require(rep && out, "null argument");
        *out = rep->kind;
    });
}

rf_status rf_opt_report_weight(const rf_opt_report* rep, double* out) {
    return guarded([&] {
        require(rep && out, "null argument");
        require(rep->kind == 0, "report holds a matrix weight");
        *out = rep->report.best_weight;
    });
}

rf_status rf_opt_report_weight_matrix(const rf_opt_report* rep, double* buffer, int32_t len) {
    return guarded([&] {
        require(rep, "null argument");
        require(rep->kind == 1, "report holds a scalar weight");
        const Eigen::MatrixXd& w = rep->report.best_weight_matrix;
        require(buffer && len >= w.size(), "buffer too small");
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j)
                buffer[i * w.cols() + j] = w(i, j); // row-major out
    });
}

rf_status rf_opt_report_rho(const rf_opt_report* rep, double* out) {
    return guarded([&] {
        require(rep && out, "null argument");
        *out = rep->rho;
    });
}

rf_status rf_opt_report_stats(const rf_opt_report* rep, int32_t* iterations,
                              int32_t* evaluations, int32_t* converged,
                              int32_t* boundary_hit, double* best_objective) {
    return guarded([&] {
        require(rep, "null argument");
        if (iterations) *iterations = rep->report.iterations;
        if (evaluations) *evaluations = rep->report.evaluations;
        if (converged) *converged = rep->report.converged ? 1 : 0;
        if (boundary_hit) *boundary_hit = rep->report.boundary_hit ? 1 : 0;
        if (best_objective) *best_objective = rep->report.best_objective;
    });
}

rf_status rf_opt_report_trace_len(const rf_opt_report* rep, int32_t* out) {
    return guarded([&] {
        require(rep && out, "null argument");
        *out = static_cast<int32_t>(rep->report.objective_trace.size());
    });
}

rf_status rf_opt_report_trace(const rf_opt_report* rep, double* buffer, int32_t len) {
    return guarded([&] {
        require(rep, "null argument");
        copy_out(rep->report.objective_trace.data(),
                 static_cast<Eigen::Index>(rep->report.objective_trace.size()), buffer, len,
                 "trace");
    });
}

rf_status rf_opt_report_save(const rf_opt_report* rep, const char* text_path,
                             const char* trace_csv_path) {
    return guarded([&] {
        require(rep, "null argument");
        if (text_path) {
            std::ofstream out(text_path, std::ios::trunc);
            if (!out) throw IoError(std::string("cannot open ") + text_path);
            out << "kind = " << (rep->kind == 0 ? "scalar" : "matrix") << "\n"
                << "rho = " << fmt17(rep->rho) << "\n"
                << "best_objective = " << fmt17(rep->report.best_objective) << "\n"
                << "iterations = " << rep->report.iterations << "\n"
                << "evaluations = " << rep->report.evaluations << "\n"
                << "converged = " << (rep->report.converged ? 1 : 0) << "\n"
                << "boundary_hit = " << (rep->report.boundary_hit ? 1 : 0) << "\n"
                << "n_periods = " << rep->n_periods << "\n";
            if (rep->kind == 0) {
                out << "w = " << fmt17(rep->report.best_weight) << "\n"
                    << "tau = " << fmt17(rep->report.best_weight / rep->rho) << "\n";
            } else {
                const Eigen::MatrixXd& w = rep->report.best_weight_matrix;
                for (Eigen::Index i = 0; i < w.rows(); ++i) {
                    out << "W_row =";
                    for (Eigen::Index j = 0; j < w.cols(); ++j) out << ' ' << fmt17(w(i, j));
                    out << "\n";
                }
            }
            if (!out) throw IoError(std::string("write failed for ") + text_path);
        }
        if (trace_csv_path) {
            std::ofstream out(trace_csv_path, std::ios::trunc);
            if (!out) throw IoError(std::string("cannot open ") + trace_csv_path);
            out << "evaluation,best_objective\n";
            for (std::size_t i = 0; i < rep->report.objective_trace.size(); ++i)
                out << i + 1 << ',' << fmt17(rep->report.objective_trace[i]) << "\n";
            if (!out) throw IoError(std::string("write failed for ") + trace_csv_path);
        }
    });
}

rf_status rf_opt_report_save_memory(const rf_opt_report* rep, const char* path) {
    return guarded([&] {
        require(rep && path, "null argument");
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError(std::string("cannot open ") + path);
        out << "# optimized memory weight\n";
        out << "kind = " << (rep->kind == 0 ? "scalar" : "matrix") << "\n";
        out << "rho = " << fmt17(rep->rho) << "\n";
        if (rep->kind == 0) {
            out << "w = " << fmt17(rep->report.best_weight) << "\n";
        } else {
            const Eigen::MatrixXd& w = rep->report.best_weight_matrix;
            for (Eigen::Index i = 0; i < w.rows(); ++i) {
                out << "W_row =";
                for (Eigen::Index j = 0; j < w.cols(); ++j) out << ' ' << fmt17(w(i, j));
                out << "\n";
            }
        }
        if (!out) throw IoError(std::string("write failed for ") + path);
    });
}

/* --- diagnostics -------------------------------------------------------------------- */

rf_status rf_error_metrics(const rf_basis* b, const rf_snapshots* s,
                           const rf_series* rom_series, rf_error_report* out) {
    return guarded([&] {
        require(b && s && rom_series && out, "null argument");
        const CoarseBasis& cb = b->bundle.basis;
        require(rom_series->series.modes() == cb.rank(),
                "series order must match the basis rank");
        require(rom_series->series.samples() == s->set.count(),
                "series must be sampled at the snapshot times");
        for (int m = 0; m < s->set.count(); ++m) {
            const double dt = std::abs(rom_series->series.times[static_cast<std::size_t>(m)] -
                                       s->set.times[static_cast<std::size_t>(m)]);
            require(dt <= 1e-9 * std::max(1.0, std::abs(s->set.times[static_cast<std::size_t>(m)])),
                    "series sample times differ from the snapshot times");
        }

        const FluctuationSet fluct = split_mean(s->set);
        const CoefficientSeries reference = project_reference(cb, fluct);

        const Eigen::VectorXd& sigma = b->bundle.sigma_full;
        const double total = sigma.squaredNorm();
        const double e_tru = 1.0 - sigma.head(cb.rank()).squaredNorm() / total;
        const double e_rom = rom_error(reference, rom_series->series, total);

        out->e_tru = e_tru;
        out->e_rom = e_rom;
        out->e_total = total_error(e_tru, e_rom);
        out->e_rec = reconstruction_error(
            s->set.snapshots, reconstruct_series(cb, rom_series->series), b->bundle.u_ref);
    });
}

rf_status rf_flops(int64_t n, int32_t r, int32_t d, int64_t omega1, int64_t omega2,
                   rf_flop_table* out) {
    return guarded([&] {
        require(out, "null argument");
        const FlopTable t = flop_table(n, r, d, omega1, omega2);
        out->grom_offline = t.grom_offline;
        out->eapg_offline = t.eapg_offline;
        out->grom_online = t.grom_online;
        out->eapg_online = t.eapg_online;
        out->apg_online = t.apg_online;
    });
}

rf_status rf_oracle_check(const rf_basis* b, const rf_rom* rom, int32_t n_draws,
                          uint64_t seed, int64_t max_values, double* max_rel_err) {
    return guarded([&] {
        require(b && rom && max_rel_err, "null argument");
        require(n_draws >= 1, "need at least one draw");
        const CoarseBasis& cb = b->bundle.basis;
        require(grid_hash(cb.grid) == rom->hash, "model was built on a different grid");

        ApgReferenceOptions ref_opts;
        if (max_values > 0) ref_opts.max_values = max_values;

        const int r = cb.rank();
        const double nu = rom->kind == 0 ? rom->grom.nu : rom->eapg.nu;
        const MemoryLength mem =
            rom->kind == 0 ? MemoryLength::scalar(0.0, 1.0) : rom->eapg.memory;

        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        double worst = 0.0;
        for (int k = 0; k < n_draws; ++k) {
            Eigen::VectorXd a(r);
            for (int i = 0; i < r; ++i) a(i) = unit(rng);
            const Eigen::VectorXd fast =
                rom->kind == 0 ? grom_rhs(rom->grom, a) : eapg_rhs(rom->eapg, a);
            const Eigen::VectorXd slow = apg_rhs_fullspace(cb, nu, mem, a, ref_opts);
            const double denom = std::max({fast.norm(), slow.norm(), 1e-300});
            worst = std::max(worst, (fast - slow).norm() / denom);
        }
        *max_rel_err = worst;
    });
}

} // extern "C"
