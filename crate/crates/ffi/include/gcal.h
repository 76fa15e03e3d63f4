#ifndef GCAL_H
#define GCAL_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum GcalStatus {
  GCAL_STATUS_OK = 0,
  GCAL_STATUS_NULL_POINTER = 1,
  GCAL_STATUS_INVALID_ARGUMENT = 2,
  GCAL_STATUS_INVALID_STATE = 3,
  GCAL_STATUS_UNDEFINED = 4,
  GCAL_STATUS_NUMERIC = 5,
  GCAL_STATUS_DATA = 6,
  GCAL_STATUS_CONFIG = 7,
  GCAL_STATUS_IO = 8,
  GCAL_STATUS_PANIC = 9,
} GcalStatus;

/**
 * Opaque graph handle.
 */
typedef struct GcalGraph GcalGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *gcal_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gcal_version(void);

/**
 * Loads a dataset bundle directory into `*out`.
 *
 * # Safety
 * `dir` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GcalStatus gcal_graph_load(const char *dir, struct GcalGraph **out);

/**
 * Samples a stochastic block model graph into `*out`.
 *
 * # Safety
 * `blocks` must point to `n_blocks` sizes and `out` must be a valid pointer.
 */
enum GcalStatus gcal_graph_generate_sbm(const size_t *blocks,
                                        size_t n_blocks,
                                        double p_in,
                                        double p_out,
                                        size_t feat_dim,
                                        double feat_noise,
                                        uint64_t seed,
                                        struct GcalGraph **out);

/**
 * Releases a graph handle. Null is ignored.
 *
 * # Safety
 * `g` must come from this library and not be used afterwards.
 */
void gcal_graph_free(struct GcalGraph *g);

/**
 * # Safety
 * `g` must be a live handle or null (which yields 0).
 */
size_t gcal_graph_node_count(const struct GcalGraph *g);

/**
 * # Safety
 * `g` must be a live handle or null (which yields 0).
 */
size_t gcal_graph_edge_count(const struct GcalGraph *g);

/**
 * # Safety
 * `g` must be a live handle or null (which yields 0).
 */
size_t gcal_graph_feature_dim(const struct GcalGraph *g);

/**
 * # Safety
 * `g` must be a live handle or null (which yields 0).
 */
size_t gcal_graph_class_count(const struct GcalGraph *g);

/**
 * Ego homophily of node `v`.
 *
 * # Safety
 * `g` must be a live handle and `out` a valid pointer.
 */
enum GcalStatus gcal_ego_homophily(const struct GcalGraph *g, size_t v, double *out);

/**
 * Mean ego homophily over the non-isolated nodes.
 *
 * # Safety
 * `g` must be a live handle and `out` a valid pointer.
 */
enum GcalStatus gcal_mean_graph_homophily(const struct GcalGraph *g, double *out);

/**
 * Minimax selection among `unlabeled` given row-major `rows × cols`
 * embeddings. Writes the chosen node and its score.
 *
 * # Safety
 * `embeddings` must hold `rows * cols` values, `unlabeled` must hold
 * `n_unlabeled` ids, and the out pointers must be valid.
 */
enum GcalStatus gcal_minimax_select(const struct GcalGraph *g,
                                    const double *embeddings,
                                    size_t rows,
                                    size_t cols,
                                    const size_t *unlabeled,
                                    size_t n_unlabeled,
                                    size_t hops,
                                    uint64_t seed,
                                    size_t *out_node,
                                    double *out_score);

/**
 * Runs the experiment described by a config file and writes `records.csv`
 * and `summary.json` into `out_dir`.
 *
 * # Safety
 * Both arguments must be NUL-terminated strings.
 */
enum GcalStatus gcal_run_experiment(const char *config_path, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GCAL_H */
