#ifndef MACLENS_H
#define MACLENS_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum MlStatus {
  ML_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  ML_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  ML_STATUS_INVALID_UTF8 = 2,
  /**
   * Arguments were rejected (shape, range, non-finite or degenerate data).
   */
  ML_STATUS_INVALID_INPUT = 3,
  /**
   * A configuration, model or scenario description was rejected.
   */
  ML_STATUS_CONFIG = 4,
  /**
   * The computation failed after starting, for example on I/O.
   */
  ML_STATUS_RUNTIME = 5,
  /**
   * The caller's output buffer is too small.
   */
  ML_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * A panic was caught at the boundary.
   */
  ML_STATUS_PANIC = 7,
} MlStatus;

/**
 * Toy model built for one scenario.
 */
typedef struct MlModel MlModel;

/**
 * Counterfactual and standard inputs of one sample.
 */
typedef struct MlPair MlPair;

/**
 * Crossover of one trajectory.
 */
typedef struct MlMac {
  /**
   * 1-based crossover layer, or 0 when the visual logit never stays ahead.
   */
  size_t layer;
  /**
   * Visual minus prior logit at the final layer.
   */
  double final_gap;
  /**
   * 1 when the visual candidate wins at the final layer.
   */
  int32_t visual_wins;
} MlMac;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *ml_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *ml_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ml_string_free(char *s);

/**
 * Builds a model from a JSON model configuration (null for the defaults)
 * and a JSON scenario.
 *
 * # Safety
 * String arguments must be nul-terminated; `out` must be writable.
 */
enum MlStatus ml_model_new(const char *model_json, const char *scenario_json, struct MlModel **out);

/**
 * Builds a model for scenario `name` of a named battery.
 *
 * # Safety
 * String arguments must be nul-terminated; `out` must be writable.
 */
enum MlStatus ml_model_from_battery(const char *model_json,
                                    const char *battery,
                                    const char *name,
                                    struct MlModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from this library and not have been freed.
 */
void ml_model_free(struct MlModel *model);

/**
 * Layer count of a model.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum MlStatus ml_model_layers(const struct MlModel *model, size_t *out);

/**
 * Generates the sample pair with the given seed.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum MlStatus ml_pair_new(const struct MlModel *model, uint64_t seed, struct MlPair **out);

/**
 * Releases a pair. Null is ignored.
 *
 * # Safety
 * `pair` must come from this library and not have been freed.
 */
void ml_pair_free(struct MlPair *pair);

/**
 * Lens trajectory of the pair's counterfactual input: per-layer visual and
 * prior logits written to `logit_v` and `logit_p`, each of length `len`,
 * which must be at least the layer count.
 *
 * # Safety
 * Handles must be live; both buffers must hold `len` doubles.
 */
enum MlStatus ml_trajectory(const struct MlModel *model,
                            const struct MlPair *pair,
                            double *logit_v,
                            double *logit_p,
                            size_t len);

/**
 * First stable crossover of a trajectory given as two arrays of length `len`.
 *
 * # Safety
 * Both arrays must hold `len` doubles; `out` must be writable.
 */
enum MlStatus ml_detect_mac(const double *logit_v,
                            const double *logit_p,
                            size_t len,
                            struct MlMac *out);

/**
 * Mann-Whitney U of `a` against `b` with its two-sided p-value.
 *
 * # Safety
 * Arrays must hold the stated counts; outputs must be writable.
 */
enum MlStatus ml_mann_whitney(const double *a,
                              size_t na,
                              const double *b,
                              size_t nb,
                              double *out_u,
                              double *out_p);

/**
 * Spearman rank correlation of two arrays of length `n`.
 *
 * # Safety
 * Arrays must hold `n` doubles; `out` must be writable.
 */
enum MlStatus ml_spearman(const double *x, const double *y, size_t n, double *out);

/**
 * ROC AUC of `scores` against 0/1 `labels` (nonzero is positive).
 *
 * # Safety
 * Arrays must hold `n` entries; `out` must be writable.
 */
enum MlStatus ml_roc_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

/**
 * Runs an experiment from a JSON configuration and returns the report as
 * JSON in `out_report`, to be released with [`ml_string_free`].
 *
 * # Safety
 * `config_json` must be nul-terminated; `out_report` must be writable.
 */
enum MlStatus ml_run_experiment(const char *config_json, char **out_report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MACLENS_H */
