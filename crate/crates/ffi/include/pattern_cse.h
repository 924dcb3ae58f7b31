#ifndef PATTERN_CSE_H
#define PATTERN_CSE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum PcseStatus {
  PCSE_STATUS_OK = 0,
  PCSE_STATUS_ARGUMENT = 1,
  PCSE_STATUS_CONFIG = 2,
  PCSE_STATUS_DATA = 3,
  PCSE_STATUS_ENVIRONMENT = 4,
  /**
   * A correlation or ratio is undefined for the input (constant vector,
   * two empty sentences).
   */
  PCSE_STATUS_UNDEFINED = 5,
  PCSE_STATUS_UNSUPPORTED = 6,
  PCSE_STATUS_CONSISTENCY = 7,
  PCSE_STATUS_GENERATION = 8,
  PCSE_STATUS_TRAINING = 9,
  PCSE_STATUS_PARSE = 10,
  PCSE_STATUS_IO = 11,
  PCSE_STATUS_NULL_POINTER = 12,
  PCSE_STATUS_INVALID_UTF8 = 13,
  PCSE_STATUS_PANIC = 14,
} PcseStatus;

/**
 * Opaque encoder handle.
 */
typedef struct PcseEncoder PcseEncoder;

/**
 * Opaque trajectory handle.
 */
typedef struct PcseTrajectory PcseTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The caller owns
 * the returned string.
 */
char *pcse_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void pcse_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pcse_version(void);

/**
 * Creates a toy encoder. `pooling` is `first_token`, `mean_tokens` or
 * `prompt_mask`; `template` is required for `prompt_mask` and ignored
 * otherwise (may be NULL).
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum PcseStatus pcse_encoder_new(const char *pooling,
                                 const char *template_,
                                 size_t dim,
                                 uint64_t seed,
                                 struct PcseEncoder **out);

/**
 * Loads an encoder saved by `pcse train` (`encoder.json`).
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum PcseStatus pcse_encoder_load(const char *path, struct PcseEncoder **out);

/**
 * # Safety
 * `enc` must come from `pcse_encoder_new`/`pcse_encoder_load` or be NULL.
 */
void pcse_encoder_free(struct PcseEncoder *enc);

/**
 * Output dimension, or 0 for a NULL handle.
 *
 * # Safety
 * `enc` must be a live handle or NULL.
 */
size_t pcse_encoder_dim(const struct PcseEncoder *enc);

/**
 * Writes the unit-norm embedding of `sentence` into `out[0..dim]`.
 *
 * # Safety
 * `enc` must be live; `out` must hold `dim` doubles.
 */
enum PcseStatus pcse_encode(const struct PcseEncoder *enc,
                            const char *sentence,
                            double *out,
                            size_t dim);

/**
 * Cosine similarity of two `dim`-vectors.
 *
 * # Safety
 * `a` and `b` must hold `dim` doubles; `out` must be writable.
 */
enum PcseStatus pcse_cosine(const double *a, const double *b, size_t dim, double *out);

/**
 * Mean InfoNCE loss over `batch` rows of unit vectors. `hard_negatives` is
 * NULL or holds one negative per row.
 *
 * # Safety
 * Each non-NULL array must hold `batch * dim` doubles.
 */
enum PcseStatus pcse_info_nce(const double *anchors,
                              const double *positives,
                              const double *hard_negatives,
                              size_t batch,
                              size_t dim,
                              double tau,
                              double *out);

/**
 * Hierarchical triplet loss with every row supervised.
 *
 * # Safety
 * Each array must hold `batch * dim` doubles.
 */
enum PcseStatus pcse_hierarchical_triplet(const double *anchors,
                                          const double *positives,
                                          const double *intermediates,
                                          const double *negatives,
                                          size_t batch,
                                          size_t dim,
                                          double m1,
                                          double m2,
                                          double *out);

/**
 * Alignment of the pairs `(x[i], y[i])`.
 *
 * # Safety
 * `x` and `y` must hold `n * dim` doubles.
 */
enum PcseStatus pcse_alignment(const double *x,
                               const double *y,
                               size_t n,
                               size_t dim,
                               double alpha,
                               double *out);

/**
 * Uniformity of `n` vectors.
 *
 * # Safety
 * `x` must hold `n * dim` doubles.
 */
enum PcseStatus pcse_uniformity(const double *x, size_t n, size_t dim, double t, double *out);

/**
 * Match error rate of two sentences; `Undefined` when both are empty.
 *
 * # Safety
 * Strings must be NUL-terminated.
 */
enum PcseStatus pcse_mer(const char *s1, const char *s2, double *out);

/**
 * Spearman rank correlation with average ranks for ties.
 *
 * # Safety
 * `x` and `y` must hold `n` doubles.
 */
enum PcseStatus pcse_spearman(const double *x, const double *y, size_t n, double *out);

/**
 * Substitutes `sentence` for `{s}` in `template`; `{mask}` is kept.
 *
 * # Safety
 * Strings must be NUL-terminated; free `*out` with `pcse_string_free`.
 */
enum PcseStatus pcse_wrap_template(const char *sentence, const char *template_, char **out);

/**
 * An empty trajectory.
 */
struct PcseTrajectory *pcse_trajectory_new(void);

/**
 * Reads a `trajectory.csv` file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum PcseStatus pcse_trajectory_read_csv(const char *path, struct PcseTrajectory **out);

/**
 * Appends a snapshot; steps must strictly increase.
 *
 * # Safety
 * `traj` must be a live handle.
 */
enum PcseStatus pcse_trajectory_push(struct PcseTrajectory *traj,
                                     uint64_t step,
                                     double align_heldout,
                                     double unif_heldout,
                                     double align_eval,
                                     double unif_eval,
                                     double spearman_eval);

/**
 * Number of snapshots, or 0 for NULL.
 *
 * # Safety
 * `traj` must be a live handle or NULL.
 */
size_t pcse_trajectory_len(const struct PcseTrajectory *traj);

/**
 * # Safety
 * `traj` must come from this library or be NULL.
 */
void pcse_trajectory_free(struct PcseTrajectory *traj);

/**
 * Relative fitting difficulty of a trajectory.
 *
 * # Safety
 * `traj` must be live; `rfd_a` and `rfd_u` writable.
 */
enum PcseStatus pcse_rfd(const struct PcseTrajectory *traj, double *rfd_a, double *rfd_u);

/**
 * Mean of the `k` largest eval Spearman values.
 *
 * # Safety
 * `traj` must be live; `out` writable.
 */
enum PcseStatus pcse_top_k_average(const struct PcseTrajectory *traj, size_t k, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PATTERN_CSE_H */
