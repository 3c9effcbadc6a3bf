// romforge: batch driver for the reduced-order-modeling pipeline.
// Every subcommand is a thin adapter over the C API in romforge/romforge.h.

#include <romforge/romforge.h>

#include <CLI11.hpp>

#include <cinttypes>
#include <iomanip>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int exit_code_for(rf_status status) {
    switch (status) {
        case RF_OK: return 0;
        case RF_ERR_VALIDATION: return 2;
        case RF_ERR_NUMERIC: return 3;
        case RF_ERR_IO: return 4;
        default: return 1;
    }
}

[[noreturn]] void fail(rf_status status, const std::string& context) {
    std::cerr << "romforge: " << context << ": " << rf_last_error() << "\n";
    std::exit(exit_code_for(status));
}

void check(rf_status status, const std::string& context) {
    if (status != RF_OK) fail(status, context);
}

std::string with_separators(std::int64_t v) {
    const std::string raw = std::to_string(v);
    std::string out;
    int count = 0;
    for (auto it = raw.rbegin(); it != raw.rend(); ++it) {
        if (count > 0 && count % 3 == 0 && *it != '-') out.push_back(',');
        out.push_back(*it);
        ++count;
    }
    return {out.rbegin(), out.rend()};
}

void write_resolved_config(CLI::App* sub, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    std::ofstream out(out_dir / "resolved_config.txt", std::ios::trunc);
    if (!out) return;
    out << "# resolved configuration for `" << sub->get_name() << "`\n";
    out << sub->config_to_str(true, false);
}

struct SnapshotsHandle {
    rf_snapshots* ptr = nullptr;
    ~SnapshotsHandle() { rf_snapshots_free(ptr); }
};
struct BasisHandle {
    rf_basis* ptr = nullptr;
    ~BasisHandle() { rf_basis_free(ptr); }
};
struct RomHandle {
    rf_rom* ptr = nullptr;
    ~RomHandle() { rf_rom_free(ptr); }
};
struct SeriesHandle {
    rf_series* ptr = nullptr;
    ~SeriesHandle() { rf_series_free(ptr); }
};
struct ReportHandle {
    rf_opt_report* ptr = nullptr;
    ~ReportHandle() { rf_opt_report_free(ptr); }
};

std::vector<double> basis_times(const rf_basis* basis) {
    int32_t count = 0;
    check(rf_basis_time_count(basis, &count), "reading basis times");
    std::vector<double> times(static_cast<std::size_t>(count));
    check(rf_basis_times(basis, times.data(), count), "reading basis times");
    return times;
}

std::vector<double> basis_a0(const rf_basis* basis) {
    int32_t r = 0;
    check(rf_basis_rank(basis, &r), "reading basis rank");
    std::vector<double> a0(static_cast<std::size_t>(r));
    check(rf_basis_a0(basis, a0.data(), r), "reading stored initial condition");
    return a0;
}

// --- pod -------------------------------------------------------------------

struct PodArgs {
    std::string manifest, out;
    int r = 0;
};

int run_pod(const PodArgs& args) {
    SnapshotsHandle snaps;
    check(rf_snapshots_load(args.manifest.c_str(), &snaps.ptr), "loading snapshots");
    BasisHandle basis;
    check(rf_basis_compute(snaps.ptr, args.r, &basis.ptr), "computing the basis");

    const fs::path out_dir(args.out);
    fs::create_directories(out_dir);
    check(rf_basis_save(basis.ptr, (out_dir / "basis").string().c_str()),
          "saving the basis");

    int32_t m = 0;
    check(rf_basis_mode_total(basis.ptr, &m), "basis info");
    std::vector<double> sigma(static_cast<std::size_t>(m));
    check(rf_basis_singular_values(basis.ptr, sigma.data(), m), "basis info");

    {
        std::ofstream out(out_dir / "sigma.csv", std::ios::trunc);
        out << "k,sigma\n";
        for (int k = 0; k < m; ++k)
            out << k + 1 << ',' << std::setprecision(17) << sigma[static_cast<std::size_t>(k)]
                << "\n";
    }
    {
        std::ofstream out(out_dir / "truncation.csv", std::ios::trunc);
        out << "r,e_tru,e_tru_percent\n";
        for (int r = 1; r <= m; ++r) {
            double e = 0.0;
            check(rf_basis_truncation_error(basis.ptr, r, &e), "truncation error");
            out << r << ',' << std::setprecision(17) << e << ',' << 100.0 * e << "\n";
        }
    }
    SeriesHandle reference;
    check(rf_basis_reference_series(basis.ptr, snaps.ptr, &reference.ptr),
          "projecting reference coefficients");
    check(rf_series_save_csv(reference.ptr, (out_dir / "a_pod.csv").string().c_str()),
          "writing reference coefficients");

    std::cout << "basis written to " << (out_dir / "basis").string() << " (r = " << args.r
              << ", M = " << m << ")\n";
    return 0;
}

// --- build-grom / build-eapg --------------------------------------------------

struct BuildArgs {
    std::string basis, out, memory = "scalar:1.0";
    double nu = 0.0; // 0 = keep the basis value
};

int run_build_grom(const BuildArgs& args) {
    BasisHandle basis;
    check(rf_basis_load(args.basis.c_str(), &basis.ptr), "loading the basis");
    RomHandle rom;
    check(rf_rom_build_grom(basis.ptr, args.nu, &rom.ptr), "assembling the G-ROM");
    check(rf_rom_save(rom.ptr, args.out.c_str()), "saving coefficients");
    std::cout << "G-ROM coefficients written to " << args.out << "\n";
    return 0;
}

int run_build_eapg(const BuildArgs& args) {
    BasisHandle basis;
    check(rf_basis_load(args.basis.c_str(), &basis.ptr), "loading the basis");
    RomHandle rom;
    const std::string& spec = args.memory;
    if (spec.rfind("scalar:", 0) == 0) {
        const double w = std::stod(spec.substr(7));
        check(rf_rom_build_eapg_scalar(basis.ptr, args.nu, w, &rom.ptr),
              "assembling the eAPG-ROM");
    } else if (spec.rfind("file:", 0) == 0) {
        check(rf_rom_build_eapg_from_file(basis.ptr, args.nu, spec.substr(5).c_str(),
                                          &rom.ptr),
              "assembling the eAPG-ROM");
    } else {
        std::cerr << "romforge: --memory must be scalar:<w> or file:<path>\n";
        return 2;
    }
    check(rf_rom_save(rom.ptr, args.out.c_str()), "saving coefficients");
    std::cout << "eAPG-ROM coefficients written to " << args.out << "\n";
    return 0;
}

// --- optimize-memory -----------------------------------------------------------

struct OptimizeArgs {
    std::string basis, manifest, kind = "matrix", out;
    int n_periods = 2;
    double period = 0.0;
    double w_max = 100.0;
    int max_iterations = 500;
    bool no_warm_start = false;
};

int run_optimize(const OptimizeArgs& args) {
    BasisHandle basis;
    check(rf_basis_load(args.basis.c_str(), &basis.ptr), "loading the basis");
    SnapshotsHandle snaps;
    check(rf_snapshots_load(args.manifest.c_str(), &snaps.ptr), "loading snapshots");

    rf_optimize_options opts;
    rf_optimize_defaults(&opts);
    opts.kind = args.kind == "scalar" ? 0 : 1;
    opts.n_periods = args.n_periods;
    opts.period = args.period;
    opts.w_max = args.w_max;
    opts.max_iterations = args.max_iterations;
    opts.warm_start = args.no_warm_start ? 0 : 1;

    ReportHandle report;
    check(rf_optimize_memory(basis.ptr, snaps.ptr, &opts, &report.ptr),
          "optimizing the memory length");

    const fs::path out_dir(args.out);
    fs::create_directories(out_dir);
    check(rf_opt_report_save(report.ptr, (out_dir / "report.txt").string().c_str(),
                             (out_dir / "trace.csv").string().c_str()),
          "writing the report");
    check(rf_opt_report_save_memory(report.ptr, (out_dir / "memory.cfg").string().c_str()),
          "writing the memory spec");

    int32_t converged = 0, boundary = 0, iterations = 0, evaluations = 0;
    double best = 0.0;
    check(rf_opt_report_stats(report.ptr, &iterations, &evaluations, &converged, &boundary,
                              &best),
          "reading the report");
    std::cout << "kind = " << args.kind << ", best objective = " << best
              << ", iterations = " << iterations << ", evaluations = " << evaluations
              << ", converged = " << converged << ", boundary_hit = " << boundary << "\n"
              << "memory spec written to " << (out_dir / "memory.cfg").string() << "\n";
    if (!converged) {
        std::cerr << "romforge: optimizer did not converge\n";
        return 3;
    }
    return 0;
}

// --- simulate ---------------------------------------------------------------------

struct SimulateArgs {
    std::string rom, basis, out, a0_csv, times_csv, report_path;
    std::string scheme = "dp";
    double dt = 1e-3, rel_tol = 1e-6, abs_tol = 1e-9;
    double t_end = 0.0;
    int samples = 0;
    int periods = 1;
    int oracle = 0;
    std::int64_t oracle_cap = 0;
};

int run_simulate(const SimulateArgs& args) {
    RomHandle rom;
    check(rf_rom_load(args.rom.c_str(), &rom.ptr), "loading coefficients");
    int32_t r = 0;
    check(rf_rom_rank(rom.ptr, &r), "reading model order");

    BasisHandle basis;
    if (!args.basis.empty())
        check(rf_basis_load(args.basis.c_str(), &basis.ptr), "loading the basis");

    // initial condition: explicit CSV row wins, else the basis bundle
    std::vector<double> a0;
    if (!args.a0_csv.empty()) {
        SeriesHandle s;
        check(rf_series_load_csv(args.a0_csv.c_str(), &s.ptr), "loading a0");
        int32_t sr = 0, sn = 0;
        check(rf_series_dims(s.ptr, &sr, &sn), "loading a0");
        if (sr != r || sn < 1) {
            std::cerr << "romforge: a0 csv must hold at least one row of order " << r << "\n";
            return 2;
        }
        std::vector<double> values(static_cast<std::size_t>(sr) * sn);
        check(rf_series_values(s.ptr, values.data(), static_cast<int32_t>(values.size())),
              "loading a0");
        a0.assign(values.begin(), values.begin() + r); // first column
    } else if (basis.ptr) {
        a0 = basis_a0(basis.ptr);
        if (static_cast<int32_t>(a0.size()) != r) {
            std::cerr << "romforge: basis rank does not match the model order\n";
            return 2;
        }
    } else {
        std::cerr << "romforge: need --basis or --a0-csv for the initial condition\n";
        return 2;
    }

    // output times: explicit CSV > uniform span > basis times tiled --periods
    std::vector<double> times;
    if (!args.times_csv.empty()) {
        SeriesHandle s;
        check(rf_series_load_csv(args.times_csv.c_str(), &s.ptr), "loading times");
        times.resize(static_cast<std::size_t>([&] {
            int32_t sr = 0, sn = 0;
            check(rf_series_dims(s.ptr, &sr, &sn), "loading times");
            return sn;
        }()));
        check(rf_series_times(s.ptr, times.data(), static_cast<int32_t>(times.size())),
              "loading times");
    } else if (args.t_end > 0.0 && args.samples > 1) {
        for (int i = 0; i < args.samples; ++i)
            times.push_back(args.t_end * i / (args.samples - 1));
    } else if (basis.ptr) {
        const std::vector<double> base = basis_times(basis.ptr);
        if (base.size() < 2) {
            std::cerr << "romforge: basis carries no sample times\n";
            return 2;
        }
        const double span = base.back() - base.front();
        const double period = span * static_cast<double>(base.size()) /
                              static_cast<double>(base.size() - 1);
        for (int k = 0; k < std::max(1, args.periods); ++k)
            for (double t : base) times.push_back(t + k * period);
    } else {
        std::cerr << "romforge: need --times-csv, --t-end/--samples, or --basis for times\n";
        return 2;
    }

    rf_integrator_options opts;
    rf_integrator_defaults(&opts);
    opts.scheme = args.scheme == "euler" ? 0 : 1;
    opts.dt = args.dt;
    opts.rel_tol = args.rel_tol;
    opts.abs_tol = args.abs_tol;

    SeriesHandle series;
    rf_run_report report{};
    check(rf_simulate(rom.ptr, a0.data(), r, times.data(),
                      static_cast<int32_t>(times.size()), &opts, &series.ptr, &report),
          "integrating");
    check(rf_series_save_csv(series.ptr, args.out.c_str()), "writing the series");

    {
        std::ostream* dst = &std::cout;
        std::ofstream file;
        if (!args.report_path.empty()) {
            file.open(args.report_path, std::ios::trunc);
            dst = &file;
        }
        *dst << "steps_taken = " << report.steps_taken << "\n"
             << "steps_rejected = " << report.steps_rejected << "\n"
             << "blew_up = " << report.blew_up << "\n"
             << "step_underflow = " << report.step_underflow << "\n"
             << "completed = " << report.completed << "\n";
        if (!report.completed) *dst << "failure_time = " << report.failure_time << "\n";
    }

    if (args.oracle > 0) {
        if (!basis.ptr) {
            std::cerr << "romforge: --oracle needs --basis\n";
            return 2;
        }
        double worst = 0.0;
        check(rf_oracle_check(basis.ptr, rom.ptr, args.oracle, 1234567, args.oracle_cap,
                              &worst),
              "oracle cross-check");
        std::cout << "oracle max relative deviation over " << args.oracle
                  << " draws: " << worst << "\n";
        if (worst > 1e-9) {
            std::cerr << "romforge: oracle deviation exceeds 1e-9\n";
            return 3;
        }
    }

    if (!report.completed) {
        std::cerr << "romforge: integration stopped early at t = " << report.failure_time
                  << (report.blew_up ? " (blow-up)" : " (step underflow)") << "\n";
        return 3;
    }
    return 0;
}

// --- errors ----------------------------------------------------------------------

struct ErrorsArgs {
    std::string basis, manifest, series, out;
};

int run_errors(const ErrorsArgs& args) {
    BasisHandle basis;
    check(rf_basis_load(args.basis.c_str(), &basis.ptr), "loading the basis");
    SnapshotsHandle snaps;
    check(rf_snapshots_load(args.manifest.c_str(), &snaps.ptr), "loading snapshots");
    SeriesHandle series;
    check(rf_series_load_csv(args.series.c_str(), &series.ptr), "loading the series");

    rf_error_report rep{};
    check(rf_error_metrics(basis.ptr, snaps.ptr, series.ptr, &rep), "computing errors");

    std::ofstream out(args.out, std::ios::trunc);
    if (!out) {
        std::cerr << "romforge: cannot open " << args.out << "\n";
        return 4;
    }
    out << "e_tru,e_rom,e_total,e_rec,e_tru_percent,e_rom_percent,e_total_percent,"
           "e_rec_percent\n";
    out << std::setprecision(17) << rep.e_tru << ',' << rep.e_rom << ',' << rep.e_total << ','
        << rep.e_rec << ',' << 100 * rep.e_tru << ',' << 100 * rep.e_rom << ','
        << 100 * rep.e_total << ',' << 100 * rep.e_rec << "\n";

    std::cout << "E_TRU = " << 100 * rep.e_tru << " %\n"
              << "E_ROM = " << 100 * rep.e_rom << " %\n"
              << "E_Total = " << 100 * rep.e_total << " %\n"
              << "E_REC = " << 100 * rep.e_rec << " %\n";
    return 0;
}

// --- flops -----------------------------------------------------------------------

struct FlopsArgs {
    std::int64_t n = 0;
    int r = 0, d = 3;
    std::int64_t w1 = 12, w2 = 18;
    std::string out;
};

int run_flops(const FlopsArgs& args) {
    rf_flop_table table{};
    check(rf_flops(args.n, args.r, args.d, args.w1, args.w2, &table), "evaluating flops");

    std::printf("%-10s %-20s %s\n", "model", "offline phase", "online phase (per step)");
    std::printf("%-10s %-20s %s\n", "G-ROM", with_separators(table.grom_offline).c_str(),
                with_separators(table.grom_online).c_str());
    std::printf("%-10s %-20s %s\n", "eAPG-ROM", with_separators(table.eapg_offline).c_str(),
                with_separators(table.eapg_online).c_str());
    std::printf("%-10s %-20s %s\n", "APG-ROM", "-",
                with_separators(table.apg_online).c_str());

    if (!args.out.empty()) {
        std::ofstream out(args.out, std::ios::trunc);
        out << "model,offline,online\n";
        out << "grom," << table.grom_offline << ',' << table.grom_online << "\n";
        out << "eapg," << table.eapg_offline << ',' << table.eapg_online << "\n";
        out << "apg,," << table.apg_online << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"reduced-order models of incompressible-flow snapshots"};
    app.require_subcommand(1);
    app.set_config("--config", "", "configuration file (key = value lines)");

    int threads = 0;
    app.add_option("--threads", threads, "cap worker threads")
        ->envname("ROMFORGE_THREADS");

    PodArgs pod_args;
    auto* pod = app.add_subcommand("pod", "basis from snapshots: modes, sigma, truncation");
    pod->add_option("--manifest", pod_args.manifest, "snapshot manifest")->required();
    pod->add_option("--r", pod_args.r, "number of retained modes")->required();
    pod->add_option("--out", pod_args.out, "output directory")->required();

    BuildArgs grom_args;
    auto* build_grom = app.add_subcommand("build-grom", "assemble G-ROM coefficients");
    build_grom->add_option("--basis", grom_args.basis, "basis directory")->required();
    build_grom->add_option("--nu", grom_args.nu, "viscosity override");
    build_grom->add_option("--out", grom_args.out, "output directory")->required();

    BuildArgs eapg_args;
    auto* build_eapg = app.add_subcommand("build-eapg", "assemble eAPG-ROM coefficients");
    build_eapg->add_option("--basis", eapg_args.basis, "basis directory")->required();
    build_eapg->add_option("--nu", eapg_args.nu, "viscosity override");
    build_eapg->add_option("--memory", eapg_args.memory,
                           "memory spec: scalar:<w> or file:<path>");
    build_eapg->add_option("--out", eapg_args.out, "output directory")->required();

    OptimizeArgs opt_args;
    auto* optimize = app.add_subcommand("optimize-memory", "tune the memory weight");
    optimize->add_option("--basis", opt_args.basis, "basis directory")->required();
    optimize->add_option("--manifest", opt_args.manifest, "reference snapshots")->required();
    optimize->add_option("--kind", opt_args.kind, "scalar or matrix")
        ->check(CLI::IsMember({"scalar", "matrix"}));
    optimize->add_option("--n-periods", opt_args.n_periods, "optimization horizon in periods");
    optimize->add_option("--period", opt_args.period, "period length (s); 0 = infer");
    optimize->add_option("--w-max", opt_args.w_max, "scalar search upper bound");
    optimize->add_option("--max-iterations", opt_args.max_iterations, "iteration cap");
    optimize->add_flag("--no-warm-start", opt_args.no_warm_start,
                       "skip the scalar warm start of the matrix search");
    optimize->add_option("--out", opt_args.out, "output directory")->required();

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "integrate a reduced model");
    simulate->add_option("--rom", sim_args.rom, "coefficient directory")->required();
    simulate->add_option("--basis", sim_args.basis, "basis directory (a0 and sample times)");
    simulate->add_option("--a0-csv", sim_args.a0_csv, "series CSV; first row is a0");
    simulate->add_option("--times-csv", sim_args.times_csv, "series CSV supplying times");
    simulate->add_option("--t-end", sim_args.t_end, "uniform horizon end");
    simulate->add_option("--samples", sim_args.samples, "uniform sample count");
    simulate->add_option("--periods", sim_args.periods, "tile the basis times this often");
    simulate->add_option("--scheme", sim_args.scheme, "dp or euler")
        ->check(CLI::IsMember({"dp", "euler"}));
    simulate->add_option("--dt", sim_args.dt, "Euler step size");
    simulate->add_option("--rel-tol", sim_args.rel_tol, "adaptive relative tolerance");
    simulate->add_option("--abs-tol", sim_args.abs_tol, "adaptive absolute tolerance");
    simulate->add_option("--oracle", sim_args.oracle,
                         "cross-check this many random states against the full-space rhs");
    simulate->add_option("--oracle-cap", sim_args.oracle_cap,
                         "override the full-space grid-size cap");
    simulate->add_option("--out", sim_args.out, "output series CSV")->required();
    simulate->add_option("--report", sim_args.report_path, "run report path");

    ErrorsArgs err_args;
    auto* errors = app.add_subcommand("errors", "error metrics of a run against snapshots");
    errors->add_option("--basis", err_args.basis, "basis directory")->required();
    errors->add_option("--manifest", err_args.manifest, "reference snapshots")->required();
    errors->add_option("--series", err_args.series, "ROM coefficient series CSV")->required();
    errors->add_option("--out", err_args.out, "output CSV")->required();

    FlopsArgs flops_args;
    auto* flops = app.add_subcommand("flops", "closed-form flop counts");
    flops->add_option("--N", flops_args.n, "stacked state size d*N_grid")->required();
    flops->add_option("--r", flops_args.r, "reduced dimension")->required();
    flops->add_option("--d", flops_args.d, "space dimension");
    flops->add_option("--w1", flops_args.w1, "first-derivative cost per value");
    flops->add_option("--w2", flops_args.w2, "second-derivative cost per value");
    flops->add_option("--out", flops_args.out, "optional CSV path");

    struct {
        std::string recipe, out;
    } synth_args;
    auto* synth = app.add_subcommand("synth", "manufactured snapshot ensembles");
    synth->add_option("--recipe", synth_args.recipe, "recipe file")->required();
    synth->add_option("--out", synth_args.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    rf_set_threads(threads);

    try {
        if (pod->parsed()) {
            write_resolved_config(pod, pod_args.out);
            return run_pod(pod_args);
        }
        if (build_grom->parsed()) {
            write_resolved_config(build_grom, grom_args.out);
            return run_build_grom(grom_args);
        }
        if (build_eapg->parsed()) {
            write_resolved_config(build_eapg, eapg_args.out);
            return run_build_eapg(eapg_args);
        }
        if (optimize->parsed()) {
            write_resolved_config(optimize, opt_args.out);
            return run_optimize(opt_args);
        }
        if (simulate->parsed()) {
            write_resolved_config(simulate, fs::path(sim_args.out).parent_path());
            return run_simulate(sim_args);
        }
        if (errors->parsed()) {
            write_resolved_config(errors, fs::path(err_args.out).parent_path());
            return run_errors(err_args);
        }
        if (flops->parsed()) return run_flops(flops_args);
        if (synth->parsed()) {
            write_resolved_config(synth, synth_args.out);
            const rf_status status =
                rf_synth_generate(synth_args.recipe.c_str(), synth_args.out.c_str());
            if (status != RF_OK) fail(status, "generating the ensemble");
            std::cout << "ensemble written to " << synth_args.out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "romforge: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
