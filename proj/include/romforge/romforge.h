/*
 * romforge C API: reduced-order modeling of incompressible-flow snapshots.
 *
 * All functions return rf_status; rf_last_error() describes the most recent
 * failure on the calling thread. Objects are opaque handles created by
 * rf_*_load / rf_*_compute / rf_*_build calls and released with the matching
 * rf_*_free. Handles are immutable after creation and safe to share across
 * threads.
 */
#ifndef ROMFORGE_H
#define ROMFORGE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; the CLI maps them directly onto process exit codes. */
#define RF_OK 0
#define RF_ERR_INTERNAL 1
#define RF_ERR_VALIDATION 2
#define RF_ERR_NUMERIC 3
#define RF_ERR_IO 4

typedef int32_t rf_status;

typedef struct rf_snapshots rf_snapshots;
typedef struct rf_basis rf_basis;
typedef struct rf_rom rf_rom;
typedef struct rf_series rf_series;
typedef struct rf_opt_report rf_opt_report;

const char* rf_version(void);

/* Message for the last failing call on this thread ("" if none). */
const char* rf_last_error(void);

/* Caps internal worker threads; n <= 0 restores the hardware default. */
void rf_set_threads(int32_t n);

/* --- snapshot ensembles -------------------------------------------------- */

rf_status rf_snapshots_load(const char* manifest_path, rf_snapshots** out);
void rf_snapshots_free(rf_snapshots* s);
rf_status rf_snapshots_count(const rf_snapshots* s, int32_t* out);
/* n_cells and spacing need room for 3 entries each. */
rf_status rf_snapshots_grid(const rf_snapshots* s, int32_t* d, int32_t* n_cells,
                            double* spacing);
rf_status rf_snapshots_nu(const rf_snapshots* s, double* out);
rf_status rf_snapshots_u_ref(const rf_snapshots* s, double* out);

/* Generates a manufactured ensemble from a recipe file (see README) and
 * writes a standard snapshot manifest plus binaries into out_dir. */
rf_status rf_synth_generate(const char* recipe_path, const char* out_dir);

/* --- modal basis ---------------------------------------------------------- */

/* Mean/fluctuation split, thin SVD and truncation at order r. */
rf_status rf_basis_compute(const rf_snapshots* s, int32_t r, rf_basis** out);
void rf_basis_free(rf_basis* b);
rf_status rf_basis_save(const rf_basis* b, const char* dir);
rf_status rf_basis_load(const char* dir, rf_basis** out);

rf_status rf_basis_rank(const rf_basis* b, int32_t* out);
rf_status rf_basis_mode_total(const rf_basis* b, int32_t* out); /* M */
rf_status rf_basis_singular_values(const rf_basis* b, double* buffer, int32_t len);
rf_status rf_basis_truncation_error(const rf_basis* b, int32_t r, double* out);
rf_status rf_basis_nu(const rf_basis* b, double* out);
rf_status rf_basis_u_ref(const rf_basis* b, double* out);
rf_status rf_basis_time_count(const rf_basis* b, int32_t* out);
rf_status rf_basis_times(const rf_basis* b, double* buffer, int32_t len);
/* Stored projection of the first fluctuation snapshot (length r). */
rf_status rf_basis_a0(const rf_basis* b, double* buffer, int32_t len);

/* Reference coefficients a_POD(t_m) projected from the snapshots. */
rf_status rf_basis_reference_series(const rf_basis* b, const rf_snapshots* s,
                                    rf_series** out);

/* --- reduced models -------------------------------------------------------- */

/* nu_override <= 0 keeps the value stored with the basis. */
rf_status rf_rom_build_grom(const rf_basis* b, double nu_override, rf_rom** out);
rf_status rf_rom_build_eapg_scalar(const rf_basis* b, double nu_override, double w,
                                   rf_rom** out);
/* W is r x r row-major, symmetric positive definite. */
rf_status rf_rom_build_eapg_matrix(const rf_basis* b, double nu_override, const double* W,
                                   int32_t r, rf_rom** out);
/* Reads a memory spec file (kind/w/W_row lines) written by the optimizer. */
rf_status rf_rom_build_eapg_from_file(const rf_basis* b, double nu_override,
                                      const char* memory_cfg_path, rf_rom** out);

void rf_rom_free(rf_rom* rom);
rf_status rf_rom_save(const rf_rom* rom, const char* dir);
rf_status rf_rom_load(const char* dir, rf_rom** out);
rf_status rf_rom_kind(const rf_rom* rom, int32_t* out); /* 0 = grom, 1 = eapg */
rf_status rf_rom_rank(const rf_rom* rom, int32_t* out);

/* --- integration ----------------------------------------------------------- */

typedef struct {
    int32_t scheme; /* 0 = explicit Euler, 1 = Dormand-Prince */
    double dt;
    double rel_tol;
    double abs_tol;
    double blowup_factor;
} rf_integrator_options;

void rf_integrator_defaults(rf_integrator_options* opts);

typedef struct {
    uint64_t steps_taken;
    uint64_t steps_rejected;
    int32_t blew_up;
    int32_t step_underflow;
    int32_t completed;
    double failure_time;
} rf_run_report;

/* Integrates the reduced system and samples it at the given strictly
 * increasing times. Blow-up is not an error: the call succeeds, the report
 * says what happened and the series is truncated. */
rf_status rf_simulate(const rf_rom* rom, const double* a0, int32_t r, const double* times,
                      int32_t n_times, const rf_integrator_options* opts, rf_series** out,
                      rf_run_report* report);

/* --- coefficient series ----------------------------------------------------- */

rf_status rf_series_create(const double* times, int32_t n, const double* values, int32_t r,
                           rf_series** out); /* values: r x n column-major */
void rf_series_free(rf_series* s);
rf_status rf_series_dims(const rf_series* s, int32_t* r, int32_t* n);
rf_status rf_series_times(const rf_series* s, double* buffer, int32_t len);
rf_status rf_series_values(const rf_series* s, double* buffer, int32_t len);
rf_status rf_series_save_csv(const rf_series* s, const char* path);
rf_status rf_series_load_csv(const char* path, rf_series** out);

/* --- memory-length optimization --------------------------------------------- */

typedef struct {
    int32_t kind;       /* 0 = scalar weight, 1 = matrix weight */
    int32_t n_periods;  /* optimization horizon in reference windows */
    double period;      /* seconds; <= 0 infers one window from the sample times */
    double w_max;       /* scalar search upper bound */
    int32_t max_iterations;
    int32_t warm_start; /* matrix kind: seed with the optimized scalar weight */
} rf_optimize_options;

void rf_optimize_defaults(rf_optimize_options* opts);

rf_status rf_optimize_memory(const rf_basis* b, const rf_snapshots* s,
                             const rf_optimize_options* opts, rf_opt_report** out);

void rf_opt_report_free(rf_opt_report* rep);
rf_status rf_opt_report_kind(const rf_opt_report* rep, int32_t* out);
rf_status rf_opt_report_weight(const rf_opt_report* rep, double* out);
rf_status rf_opt_report_weight_matrix(const rf_opt_report* rep, double* buffer, int32_t len);
rf_status rf_opt_report_rho(const rf_opt_report* rep, double* out);
rf_status rf_opt_report_stats(const rf_opt_report* rep, int32_t* iterations,
                              int32_t* evaluations, int32_t* converged,
                              int32_t* boundary_hit, double* best_objective);
rf_status rf_opt_report_trace_len(const rf_opt_report* rep, int32_t* out);
rf_status rf_opt_report_trace(const rf_opt_report* rep, double* buffer, int32_t len);
/* Text summary + per-evaluation CSV trace. Either path may be NULL. */
rf_status rf_opt_report_save(const rf_opt_report* rep, const char* text_path,
                             const char* trace_csv_path);
/* Memory spec file consumable by rf_rom_build_eapg_from_file. */
rf_status rf_opt_report_save_memory(const rf_opt_report* rep, const char* path);

/* --- diagnostics ------------------------------------------------------------- */

typedef struct {
    double e_tru;
    double e_rom;
    double e_total;
    double e_rec;
} rf_error_report;

/* The series must be sampled at the snapshot times. */
rf_status rf_error_metrics(const rf_basis* b, const rf_snapshots* s,
                           const rf_series* rom_series, rf_error_report* out);

typedef struct {
    int64_t grom_offline;
    int64_t eapg_offline;
    int64_t grom_online;
    int64_t eapg_online;
    int64_t apg_online;
} rf_flop_table;

rf_status rf_flops(int64_t n, int32_t r, int32_t d, int64_t omega1, int64_t omega2,
                   rf_flop_table* out);

/* Cross-checks the tensorized right-hand side against the full-space
 * reference on n_draws random states; writes the worst relative deviation.
 * max_values <= 0 keeps the default grid-size cap. */
rf_status rf_oracle_check(const rf_basis* b, const rf_rom* rom, int32_t n_draws,
                          uint64_t seed, int64_t max_values, double* max_rel_err);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ROMFORGE_H */
