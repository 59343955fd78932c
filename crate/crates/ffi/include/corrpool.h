#ifndef CORRPOOL_H
#define CORRPOOL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CpStatus {
  CP_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  CP_STATUS_NULL_POINTER = 1,
  /**
   * Argument values or buffer lengths that do not fit together.
   */
  CP_STATUS_INVALID_ARGUMENT = 2,
  CP_STATUS_CONFIG = 3,
  CP_STATUS_INPUT = 4,
  /**
   * Malformed LSF1 feature file.
   */
  CP_STATUS_FORMAT = 5,
  CP_STATUS_TRAINING = 6,
  CP_STATUS_METRIC = 7,
  CP_STATUS_IO = 8,
  CP_STATUS_JSON = 9,
  /**
   * A bug: Rust code panicked. The message holds the panic payload.
   */
  CP_STATUS_PANIC = 10,
} CpStatus;

/**
 * Loaded multi-layer feature stack of one utterance.
 */
typedef struct CpLayerStack CpLayerStack;

/**
 * Trained classification head with its class names.
 */
typedef struct CpModel CpModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL if none failed yet.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *cp_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cp_version(void);

/**
 * Builds a stack from `n_layers * frames * dim` doubles laid out as
 * `[layer][frame][dim]`.
 *
 * # Safety
 * `values` must be valid for that many reads; `out` must be writable.
 */
enum CpStatus cp_stack_from_f64(const double *values,
                                size_t n_layers,
                                size_t frames,
                                size_t dim,
                                struct CpLayerStack **out);

/**
 * Same as [`cp_stack_from_f64`] for single-precision input.
 *
 * # Safety
 * `values` must be valid for `n_layers * frames * dim` reads; `out` must be writable.
 */
enum CpStatus cp_stack_from_f32(const float *values,
                                size_t n_layers,
                                size_t frames,
                                size_t dim,
                                struct CpLayerStack **out);

/**
 * Reads an LSF1 feature file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum CpStatus cp_stack_load(const char *path, struct CpLayerStack **out);

/**
 * Writes the stack as an LSF1 file (values are narrowed to f32).
 *
 * # Safety
 * `stack` must come from this library; `path` must be NUL-terminated.
 */
enum CpStatus cp_stack_write(const struct CpLayerStack *stack, const char *path);

/**
 * Dimensions of a stack; any out-pointer may be NULL.
 *
 * # Safety
 * `stack` must come from this library; non-NULL outputs must be writable.
 */
enum CpStatus cp_stack_dims(const struct CpLayerStack *stack,
                            size_t *n_layers,
                            size_t *frames,
                            size_t *dim);

/**
 * Releases a stack. NULL is ignored.
 *
 * # Safety
 * `stack` must come from this library and not be used afterwards.
 */
void cp_stack_free(struct CpLayerStack *stack);

/**
 * Loads a `model.json` written by `corrpool train`.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum CpStatus cp_model_load(const char *path, struct CpModel **out);

/**
 * Number of output classes, or 0 for a NULL model.
 *
 * # Safety
 * `model` must be NULL or come from this library.
 */
size_t cp_model_num_classes(const struct CpModel *model);

/**
 * Name of class `k`, or NULL when out of range. Owned by the model.
 *
 * # Safety
 * `model` must be NULL or come from this library.
 */
const char *cp_model_class_name(const struct CpModel *model, size_t k);

/**
 * Evaluation-mode logits for one utterance into `logits[0..len]`, where
 * `len` must equal the class count. `predicted` (optional) receives the argmax.
 *
 * # Safety
 * Handles must come from this library; `logits` must be valid for `len` writes.
 */
enum CpStatus cp_model_predict(const struct CpModel *model,
                               const struct CpLayerStack *stack,
                               double *logits,
                               size_t len,
                               size_t *predicted);

/**
 * Releases a model. NULL is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void cp_model_free(struct CpModel *model);

/**
 * Length of the correlation embedding for `dim` channels: `dim (dim - 1) / 2`.
 */
size_t cp_corr_pool_len(size_t dim);

/**
 * Correlation pooling of a `frames x dim` row-major sequence: the strict
 * upper triangle of the channel correlation matrix, row by row.
 *
 * # Safety
 * `seq` must be valid for `frames * dim` reads, `out` for `out_len` writes.
 */
enum CpStatus cp_corr_pool(const double *seq,
                           size_t frames,
                           size_t dim,
                           double epsilon,
                           double *out,
                           size_t out_len);

/**
 * Label smoothing `y (1 - p_l) + p_l / K` of a `classes`-long target into `out`.
 *
 * # Safety
 * `target` and `out` must each be valid for `classes` elements.
 */
enum CpStatus cp_smooth_labels(const double *target, size_t classes, double p_l, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CORRPOOL_H */
