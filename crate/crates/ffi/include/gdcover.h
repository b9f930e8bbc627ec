#ifndef GDCOVER_H
#define GDCOVER_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Values 1 to 4 match the command-line exit codes.
 */
typedef enum GdStatus {
  GD_STATUS_OK = 0,
  GD_STATUS_VALIDATION = 1,
  GD_STATUS_RESOURCE_CAP = 2,
  GD_STATUS_NUMERICAL = 3,
  GD_STATUS_INCONCLUSIVE = 4,
  GD_STATUS_NULL_POINTER = 5,
  GD_STATUS_INVALID_UTF8 = 6,
  GD_STATUS_BUFFER_TOO_SMALL = 7,
  GD_STATUS_PANIC = 8,
} GdStatus;

/**
 * Opaque graph handle.
 */
typedef struct GdGraph GdGraph;

/**
 * Opaque spectral data handle.
 */
typedef struct GdSpectral GdSpectral;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *gd_last_error_message(void);

/**
 * Parses a spec document. On success `*out` receives a new handle.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GdStatus gd_graph_from_json(const char *json, struct GdGraph **out);

/**
 * Reads a spec file from disk.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GdStatus gd_graph_from_file(const char *path, struct GdGraph **out);

/**
 * Releases a graph handle. NULL is ignored.
 *
 * # Safety
 * `graph` must come from this library and not be used afterwards.
 */
void gd_graph_free(struct GdGraph *graph);

/**
 * Number of vertices, or 0 for NULL.
 *
 * # Safety
 * `graph` must be NULL or a live handle.
 */
size_t gd_graph_vertex_count(const struct GdGraph *graph);

/**
 * Runs every validation check; the first failure is the error message.
 *
 * # Safety
 * `graph` must be a live handle.
 */
enum GdStatus gd_graph_validate(const struct GdGraph *graph);

/**
 * Solves for s₀ and the Perron data.
 *
 * # Safety
 * `graph` must be a live handle and `out` a valid pointer.
 */
enum GdStatus gd_spectral_solve(const struct GdGraph *graph, double tol, struct GdSpectral **out);

/**
 * s₀, or NaN for NULL.
 *
 * # Safety
 * `spectral` must be NULL or a live handle.
 */
double gd_spectral_s0(const struct GdSpectral *spectral);

/**
 * Copies the right (`u`) and left (`v`) Perron vectors into buffers of
 * length `len`; either buffer may be NULL.
 *
 * # Safety
 * Non-NULL buffers must hold `len` doubles.
 */
enum GdStatus gd_spectral_vectors(const struct GdSpectral *spectral,
                                  double *u,
                                  double *v,
                                  size_t len);

/**
 * Releases spectral data. NULL is ignored.
 *
 * # Safety
 * `spectral` must come from this library and not be used afterwards.
 */
void gd_spectral_free(struct GdSpectral *spectral);

/**
 * Lattice classification: `*is_lattice` is 1 or 0 and `*tau` the span
 * (NaN when dense).
 *
 * # Safety
 * `graph` must be a live handle; the outputs valid pointers.
 */
enum GdStatus gd_lattice_classify(const struct GdGraph *graph,
                                  double eps,
                                  int32_t *is_lattice,
                                  double *tau);

/**
 * Grid counts at resolution `r` with origin 0: per vertex into `per_vertex`
 * (length `len`, may be NULL) and of the union into `*total`.
 *
 * # Safety
 * `graph` must be a live handle, `total` valid, `per_vertex` NULL or `len` long.
 */
enum GdStatus gd_count(const struct GdGraph *graph,
                       double r,
                       uint64_t *per_vertex,
                       size_t len,
                       uint64_t *total);

/**
 * Full analysis with default options; `*out_json` receives a string to be
 * released with [`gd_string_free`].
 *
 * # Safety
 * `graph` must be a live handle and `out_json` a valid pointer.
 */
enum GdStatus gd_analyze_json(const struct GdGraph *graph, uint64_t seed, char **out_json);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void gd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GDCOVER_H */
