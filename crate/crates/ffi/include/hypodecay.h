#ifndef HYPODECAY_H
#define HYPODECAY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes.
typedef enum HdStatus {
  HD_STATUS_OK = 0,
  // A required pointer was null.
  HD_STATUS_NULL_POINTER = 1,
  // Bad dimensions, non-finite values, or a string that is not UTF-8.
  HD_STATUS_INVALID_ARGUMENT = 2,
  // Matrices violate the structural assumptions (asymmetric, D not positive definite).
  HD_STATUS_INVALID_SYSTEM = 3,
  // Kalman rank deficient: no corrector exists.
  HD_STATUS_SK_FAILS = 4,
  // Coefficient search failed.
  HD_STATUS_COEFFICIENT_SEARCH = 5,
  // Run configuration rejected (exit code 2 on the CLI).
  HD_STATUS_CONFIG_ERROR = 6,
  // Simulation aborted (exit code 3 on the CLI).
  HD_STATUS_NUMERICAL_ERROR = 7,
  // Caller buffer too small; the required length was written.
  HD_STATUS_BUFFER_TOO_SMALL = 8,
  // Internal panic caught at the boundary.
  HD_STATUS_PANIC = 9,
} HdStatus;

// Corrector coefficients selected for a system.
typedef struct HdCoeffs HdCoeffs;

// Validated system `U_t + A U_x = -diag(0, D) U`.
typedef struct HdSystem HdSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Thread-local message of the last failed call, or null. Valid until the next call on
// the same thread; do not free.
const char *hd_last_error(void);

// Library version, static string.
const char *hd_version(void);

// Builds a system from row-major `a` (n×n) and `d` (n2×n2) with `n1 = n - n2`.
//
// # Safety
// `a` must point to n·n doubles, `d` to n2·n2 doubles, `out` to writable storage.
enum HdStatus hd_system_new(const double *a,
                            size_t n,
                            const double *d,
                            size_t n2,
                            struct HdSystem **out);

// # Safety
// `sys` must come from [`hd_system_new`] and not be used afterwards; null is ignored.
void hd_system_free(struct HdSystem *sys);

// Kalman rank, κ = λ_min(D), and whether the SK (full Kalman rank) condition holds.
//
// # Safety
// `sys` must be a live handle; any out pointer may be null to skip it.
enum HdStatus hd_system_info(const struct HdSystem *sys,
                             size_t *kalman_rank,
                             double *kappa,
                             bool *sk_holds);

// Selects corrector coefficients.
//
// # Safety
// `sys` must be a live handle and `out` writable.
enum HdStatus hd_coeffs_select(const struct HdSystem *sys,
                               double delta,
                               double safety,
                               struct HdCoeffs **out);

// # Safety
// `c` must come from [`hd_coeffs_select`] and not be used afterwards; null is ignored.
void hd_coeffs_free(struct HdCoeffs *c);

// Time-weight coefficient η₀ and whether every constraint family holds.
//
// # Safety
// `c` must be a live handle; out pointers may be null.
enum HdStatus hd_coeffs_info(const struct HdCoeffs *c, double *eta0, bool *constraints_ok);

// Copies the n-1 corrector weights ε_k into `buf`. `len` receives the count; with a
// null or short buffer the call returns `BufferTooSmall` after writing `len`.
//
// # Safety
// `c` must be live, `len` writable, and `buf` (if non-null) hold `cap` doubles.
enum HdStatus hd_coeffs_eps(const struct HdCoeffs *c, double *buf, size_t cap, size_t *len);

// Full coefficient record as JSON; free with [`hd_string_free`].
//
// # Safety
// `c` must be live and `out` writable.
enum HdStatus hd_coeffs_to_json(const struct HdCoeffs *c, char **out);

// # Safety
// `s` must come from this library and not be used afterwards; null is ignored.
void hd_string_free(char *s);

// Runs a JSON run configuration, writing outputs under `out_dir`. `exit_code` receives
// the CLI-equivalent code (0 pass, 2 config, 3 numerical, 4 certificate failed); the
// status is `Ok` whenever the run completed, even with failed certificates.
//
// # Safety
// Both strings must be NUL-terminated; `exit_code` must be writable.
enum HdStatus hd_run_config(const char *config_json, const char *out_dir, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPODECAY_H */
