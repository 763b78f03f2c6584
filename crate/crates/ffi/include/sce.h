/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef SCE_H
#define SCE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `SCE_STATUS_OK` is zero; everything else is an error.
 */
typedef enum SceStatus {
  SCE_STATUS_OK = 0,
  SCE_STATUS_NULL_POINTER = 1,
  SCE_STATUS_INVALID_UTF8 = 2,
  SCE_STATUS_OUT_OF_RANGE = 3,
  SCE_STATUS_BUFFER_TOO_SMALL = 4,
  SCE_STATUS_CONFIG = 10,
  SCE_STATUS_GRID_MISMATCH = 11,
  SCE_STATUS_DOMAIN = 12,
  SCE_STATUS_NUMERICAL = 13,
  SCE_STATUS_STATISTICS = 14,
  SCE_STATUS_PATH_LAW = 15,
  SCE_STATUS_IO = 16,
  SCE_STATUS_PARSE = 17,
  SCE_STATUS_PANIC = 99,
} SceStatus;

/**
 * Field selector for [`sce_trajectory_field`], passed as its integer value.
 */
typedef enum SceField {
  SCE_FIELD_DENSITY = 0,
  SCE_FIELD_ENTROPY = 1,
  SCE_FIELD_MOMENTUM0 = 2,
  SCE_FIELD_MOMENTUM1 = 3,
  SCE_FIELD_MOMENTUM2 = 4,
} SceField;

/**
 * Parsed, validated run configuration.
 */
typedef struct SceConfig SceConfig;

/**
 * Finite path law.
 */
typedef struct ScePathLaw ScePathLaw;

/**
 * A completed single-path simulation.
 */
typedef struct SceTrajectory SceTrajectory;

/**
 * Shape of the collocation grid.
 */
typedef struct SceGridInfo {
  size_t dim;
  size_t points_per_dim;
  size_t modes;
  /**
   * Samples per scalar field, `points_per_dim^dim`.
   */
  size_t len;
} SceGridInfo;

/**
 * One row of the energy ledger.
 */
typedef struct SceLedgerRow {
  double t;
  double dt;
  double eps;
  double e_kin;
  double e_int;
  double sobolev;
  double ito;
  double noise_increment;
  double residual;
} SceLedgerRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. Valid until the next failing
 * call on the same thread.
 */
const char *sce_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sce_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void sce_string_free(char *s);

/**
 * Pressure from density and total entropy `S = ρ s`.
 *
 * # Safety
 * `out` must be valid for a write of one `double`.
 */
enum SceStatus sce_pressure_conservative(double gamma, double rho, double s_total, double *out);

/**
 * Temperature from density and total entropy.
 *
 * # Safety
 * `out` must be valid for a write of one `double`.
 */
enum SceStatus sce_temperature_conservative(double gamma, double rho, double s_total, double *out);

/**
 * Internal energy per unit volume from density and total entropy.
 *
 * # Safety
 * `out` must be valid for a write of one `double`.
 */
enum SceStatus sce_energy_density_conservative(double gamma,
                                               double rho,
                                               double s_total,
                                               double *out);

/**
 * Specific entropy `s(ρ, θ)`.
 *
 * # Safety
 * `out` must be valid for a write of one `double`.
 */
enum SceStatus sce_entropy(double gamma, double rho, double theta, double *out);

/**
 * Parses a TOML configuration. Environment overrides are not applied.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be valid for a pointer write.
 */
enum SceStatus sce_config_parse(const char *text, struct SceConfig **out);

/**
 * Releases a configuration. Null is ignored.
 *
 * # Safety
 * `cfg` must come from [`sce_config_parse`] and not have been freed.
 */
void sce_config_free(struct SceConfig *cfg);

/**
 * Resolved configuration as TOML; release with [`sce_string_free`]. Null if `cfg` is null.
 *
 * # Safety
 * `cfg` must be a live handle or null.
 */
char *sce_config_emit(const struct SceConfig *cfg);

/**
 * Overrides the seed of a configuration.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum SceStatus sce_config_set_seed(struct SceConfig *cfg, uint64_t seed);

/**
 * Runs the configured experiment into `out_dir`, writing the manifest and outputs.
 * `passed` receives whether every check passed.
 *
 * # Safety
 * `cfg` must be a live handle, `out_dir` a NUL-terminated path, `passed` writable.
 */
enum SceStatus sce_run(const struct SceConfig *cfg, const char *out_dir, bool *passed);

/**
 * Integrates one trajectory of the configured problem with the configured seed, without
 * writing files. A step failure is reported as an error and no handle is returned.
 *
 * # Safety
 * `cfg` must be a live handle and `out` valid for a pointer write.
 */
enum SceStatus sce_simulate(const struct SceConfig *cfg, struct SceTrajectory **out);

/**
 * Releases a trajectory. Null is ignored.
 *
 * # Safety
 * `traj` must come from [`sce_simulate`] and not have been freed.
 */
void sce_trajectory_free(struct SceTrajectory *traj);

/**
 * Grid shape of the trajectory's snapshots.
 *
 * # Safety
 * `traj` must be a live handle and `out` writable.
 */
enum SceStatus sce_trajectory_grid(const struct SceTrajectory *traj, struct SceGridInfo *out);

/**
 * Number of stored snapshots, including the initial state; 0 for a null handle.
 *
 * # Safety
 * `traj` must be a live handle or null.
 */
size_t sce_trajectory_snapshots(const struct SceTrajectory *traj);

/**
 * Time of snapshot `index`.
 *
 * # Safety
 * `traj` must be a live handle and `out` writable.
 */
enum SceStatus sce_trajectory_time(const struct SceTrajectory *traj, size_t index, double *out);

/**
 * Number of ledger rows (accepted steps plus the initial row); 0 for a null handle.
 *
 * # Safety
 * `traj` must be a live handle or null.
 */
size_t sce_trajectory_ledger_len(const struct SceTrajectory *traj);

/**
 * Ledger row `index`.
 *
 * # Safety
 * `traj` must be a live handle and `out` writable.
 */
enum SceStatus sce_trajectory_ledger_row(const struct SceTrajectory *traj,
                                         size_t index,
                                         struct SceLedgerRow *out);

/**
 * Copies the physical samples of one field of snapshot `index` into `buf` (row-major,
 * `SceGridInfo::len` values). `written` receives the number of samples required; with
 * a short buffer nothing is copied and `SCE_STATUS_BUFFER_TOO_SMALL` is returned.
 *
 * # Safety
 * `traj` must be a live handle, `buf` valid for `cap` doubles (or null with `cap == 0`),
 * `written` writable.
 */
enum SceStatus sce_trajectory_field(const struct SceTrajectory *traj,
                                    size_t index,
                                    uint32_t field,
                                    double *buf,
                                    size_t cap,
                                    size_t *written);

/**
 * Parses a path law from its text form (one `label,...,label,probability` line per atom).
 *
 * # Safety
 * `text` must be NUL-terminated and `out` writable.
 */
enum SceStatus sce_pathlaw_parse(const char *text, struct ScePathLaw **out);

/**
 * Releases a path law. Null is ignored.
 *
 * # Safety
 * `law` must come from this library and not have been freed.
 */
void sce_pathlaw_free(struct ScePathLaw *law);

/**
 * Text form of a law; release with [`sce_string_free`]. Null if `law` is null.
 *
 * # Safety
 * `law` must be a live handle or null.
 */
char *sce_pathlaw_to_text(const struct ScePathLaw *law);

/**
 * Number of steps of every path in the support; 0 for a null handle.
 *
 * # Safety
 * `law` must be a live handle or null.
 */
size_t sce_pathlaw_steps(const struct ScePathLaw *law);

/**
 * Law of the path shifted by `tau` steps, as a new handle.
 *
 * # Safety
 * `law` must be a live handle and `out` writable.
 */
enum SceStatus sce_pathlaw_shift(const struct ScePathLaw *law, size_t tau, struct ScePathLaw **out);

/**
 * Probability of a path given as comma-separated labels; 0 for paths outside the support.
 *
 * # Safety
 * `law` must be a live handle, `path` NUL-terminated, `out` writable.
 */
enum SceStatus sce_pathlaw_prob(const struct ScePathLaw *law, const char *path, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCE_H */
