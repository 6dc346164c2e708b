#ifndef FDM_H
#define FDM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define FDM_ALGORITHM_SFDM1 1

#define FDM_ALGORITHM_SFDM2 2

#define FDM_METRIC_EUCLIDEAN 0

#define FDM_METRIC_MANHATTAN 1

#define FDM_METRIC_ANGULAR 2

typedef enum FdmStatus {
  FDM_STATUS_OK = 0,
  FDM_STATUS_NULL_POINTER = 1,
  FDM_STATUS_INVALID_INPUT = 2,
  FDM_STATUS_INFEASIBLE = 3,
  FDM_STATUS_BUFFER_TOO_SMALL = 4,
  FDM_STATUS_INTERNAL = 5,
} FdmStatus;

/**
 * Opaque streaming solver handle.
 */
typedef struct FdmStream FdmStream;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *fdm_status_str(int32_t status);

/**
 * Creates a streaming solver.
 *
 * `algorithm` is `FDM_ALGORITHM_SFDM1` (exactly two groups) or
 * `FDM_ALGORITHM_SFDM2`; `caps[g]` is the number of elements required from
 * group `g`. `d_min`/`d_max` bound the pairwise distances of the stream.
 *
 * # Safety
 * `caps` must point to `num_groups` readable values and `out` to writable
 * storage for one pointer.
 */
enum FdmStatus fdm_stream_new(uint32_t algorithm,
                              uint32_t metric,
                              const size_t *caps,
                              size_t num_groups,
                              double eps,
                              double d_min,
                              double d_max,
                              struct FdmStream **out);

/**
 * Feeds one element to the stream.
 *
 * # Safety
 * `stream` must come from [`fdm_stream_new`]; `features` must point to
 * `dim` readable values.
 */
enum FdmStatus fdm_stream_push(struct FdmStream *stream,
                               uint64_t id,
                               const double *features,
                               size_t dim,
                               size_t group);

/**
 * Post-processes the candidates and writes the chosen ids.
 *
 * On `FDM_STATUS_BUFFER_TOO_SMALL`, `*out_len` holds the required capacity.
 * The stream stays usable: more elements may be pushed afterwards.
 *
 * # Safety
 * `stream` must come from [`fdm_stream_new`]; `out_ids` must have room for
 * `capacity` values; `out_len` and `out_diversity` must be writable
 * (`out_diversity` may be null).
 */
enum FdmStatus fdm_stream_finalize(struct FdmStream *stream,
                                   uint64_t *out_ids,
                                   size_t capacity,
                                   size_t *out_len,
                                   double *out_diversity);

/**
 * Number of distinct elements currently held by the stream's candidates.
 *
 * # Safety
 * `stream` must come from [`fdm_stream_new`]; `out` must be writable.
 */
enum FdmStatus fdm_stream_stored_elements(const struct FdmStream *stream, size_t *out);

/**
 * Number of guesses the stream maintains.
 *
 * # Safety
 * `stream` must come from [`fdm_stream_new`]; `out` must be writable.
 */
enum FdmStatus fdm_stream_num_guesses(const struct FdmStream *stream, size_t *out);

/**
 * Message of the last failed call on `stream`, or null. Valid until the
 * next call on the same stream.
 *
 * # Safety
 * `stream` must come from [`fdm_stream_new`] or be null.
 */
const char *fdm_stream_last_error(const struct FdmStream *stream);

/**
 * Releases a stream. Null is ignored.
 *
 * # Safety
 * `stream` must come from [`fdm_stream_new`] and not be used afterwards.
 */
void fdm_stream_free(struct FdmStream *stream);

/**
 * Exact smallest nonzero and largest pairwise distance of `n` row-major
 * points of dimension `dim`.
 *
 * # Safety
 * `points` must hold `n * dim` readable values; `out_min`/`out_max` must be writable.
 */
enum FdmStatus fdm_extremal_distances(uint32_t metric,
                                      const double *points,
                                      size_t n,
                                      size_t dim,
                                      double *out_min,
                                      double *out_max);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FDM_H */
