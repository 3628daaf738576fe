#ifndef RIGGEDFRAMES_H
#define RIGGEDFRAMES_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RfStatus {
  RF_STATUS_OK = 0,
  RF_STATUS_NULL_POINTER = 1,
  RF_STATUS_INVALID_ARGUMENT = 2,
  RF_STATUS_INVALID_CONFIG = 3,
  RF_STATUS_DIMENSION = 4,
  RF_STATUS_NOT_A_FRAME = 5,
  RF_STATUS_NUMERIC = 6,
  RF_STATUS_IO = 7,
  RF_STATUS_PANIC = 8,
} RfStatus;

typedef enum RfMapKind {
  RF_MAP_KIND_DIRAC = 0,
  RF_MAP_KIND_FOURIER = 1,
  RF_MAP_KIND_DIRAC_DERIVATIVE = 2,
  RF_MAP_KIND_WEIGHTED_DIRAC = 3,
  RF_MAP_KIND_BUMP_DIRAC = 4,
} RfMapKind;

/**
 * Sampled kernel of a built-in map on the standard ladder grid.
 */
typedef struct RfKernel RfKernel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Samples a built-in map at truncation N on the standard ladder grid.
 *
 * `weight` is read only for `RF_MAP_KIND_WEIGHTED_DIRAC`; `support_a` and
 * `support_b` only for `RF_MAP_KIND_BUMP_DIRAC`.
 *
 * # Safety
 * `weight` must be null or a NUL-terminated string; `out` must be writable.
 */
enum RfStatus rf_kernel_new(enum RfMapKind kind,
                            size_t truncation,
                            const char *weight,
                            double support_a,
                            double support_b,
                            struct RfKernel **out);

/**
 * # Safety
 * `kernel` must be null or a handle from [`rf_kernel_new`] not yet freed.
 */
void rf_kernel_free(struct RfKernel *kernel);

/**
 * Truncation N of the kernel, or 0 for a null handle.
 *
 * # Safety
 * `kernel` must be null or a live handle.
 */
size_t rf_kernel_truncation(const struct RfKernel *kernel);

/**
 * Number of grid nodes M, or 0 for a null handle.
 *
 * # Safety
 * `kernel` must be null or a live handle.
 */
size_t rf_kernel_node_count(const struct RfKernel *kernel);

/**
 * Copies the M grid nodes into `nodes`, which must hold `len >= M` doubles.
 *
 * # Safety
 * `nodes` must point to `len` writable doubles.
 */
enum RfStatus rf_kernel_nodes(const struct RfKernel *kernel, double *nodes, size_t len);

/**
 * Smallest and largest eigenvalue of the frame operator.
 *
 * # Safety
 * `lower` and `upper` must be writable.
 */
enum RfStatus rf_kernel_frame_bounds(const struct RfKernel *kernel, double *lower, double *upper);

/**
 * Analysis of a test function given by N complex Hermite coefficients.
 * Writes M complex samples to `samples`.
 *
 * # Safety
 * `coeffs` must hold 2·N doubles and `samples` 2·M writable doubles.
 */
enum RfStatus rf_kernel_analysis(const struct RfKernel *kernel,
                                 const double *coeffs,
                                 double *samples);

/**
 * Classifies the kernel on its refinement ladder with default thresholds
 * and returns the report as JSON.
 *
 * # Safety
 * `out_json` must be writable; free the result with [`rf_string_free`].
 */
enum RfStatus rf_kernel_classify(const struct RfKernel *kernel, char **out_json);

/**
 * Runs a CLI command (`classify`, `bounds`, `dual`, `reconstruct`,
 * `moment-solve`, `sweep`, `demo`) on a JSON configuration and returns the
 * JSON report. A null `config_json` selects the default configuration.
 *
 * # Safety
 * `command` and non-null `config_json` must be NUL-terminated; `out_json`
 * must be writable; free the result with [`rf_string_free`].
 */
enum RfStatus rf_run(const char *command, const char *config_json, char **out_json);

/**
 * # Safety
 * `text` must be null or a string returned by this library, not yet freed.
 */
void rf_string_free(char *text);

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *rf_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rf_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIGGEDFRAMES_H */
