#ifndef OIM_H
#define OIM_H

/* Generated by cbindgen from the oim-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OimStatus {
  OIM_STATUS_OK = 0,
  OIM_STATUS_NULL_POINTER = 1,
  OIM_STATUS_INVALID_ARGUMENT = 2,
  OIM_STATUS_PARSE = 3,
  OIM_STATUS_DIMENSION = 4,
  OIM_STATUS_CAPACITY = 5,
  OIM_STATUS_NUMERIC = 6,
  OIM_STATUS_CONFIG = 7,
  OIM_STATUS_IO = 8,
  OIM_STATUS_INVALID_UTF8 = 9,
  OIM_STATUS_PANIC = 10,
} OimStatus;

/**
 * EXP3 weights together with the random stream used for sampling.
 */
typedef struct OimExp3 OimExp3;

/**
 * A directed graph.
 */
typedef struct OimGraph OimGraph;

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next library call on the same thread.
 */
const char *oim_last_error_message(void);

/**
 * Parses a whitespace-separated edge list (`#` starts a comment line).
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum OimStatus oim_graph_from_edge_list(const char *text, bool symmetrize, struct OimGraph **out);

/**
 * Builds a graph from parallel source/target arrays.
 *
 * # Safety
 * `sources` and `targets` must each hold `len` elements; `out` must be valid.
 */
enum OimStatus oim_graph_from_edges(size_t node_count,
                                    const size_t *sources,
                                    const size_t *targets,
                                    size_t len,
                                    struct OimGraph **out);

/**
 * # Safety
 * `graph` must come from this library and not be used afterwards.
 */
void oim_graph_free(struct OimGraph *graph);

/**
 * # Safety
 * `graph` must be a valid handle or null (which yields 0).
 */
size_t oim_graph_node_count(const struct OimGraph *graph);

/**
 * # Safety
 * `graph` must be a valid handle or null (which yields 0).
 */
size_t oim_graph_edge_count(const struct OimGraph *graph);

/**
 * Writes `1 / in_degree(target)` for every edge into `out`, which must
 * hold exactly `edge_count` values.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum OimStatus oim_graph_weighted_cascade(const struct OimGraph *graph, double *out, size_t len);

/**
 * Exact expected spread by enumerating live-edge patterns (small graphs).
 *
 * # Safety
 * Array arguments must hold the stated number of elements; `out` must be valid.
 */
enum OimStatus oim_exact_spread(const struct OimGraph *graph,
                                const double *probs,
                                size_t probs_len,
                                const size_t *seeds,
                                size_t seeds_len,
                                double *out);

/**
 * Monte-Carlo spread estimate; identical for a given `seed` regardless of
 * the thread count.
 *
 * # Safety
 * Array arguments must hold the stated number of elements; output pointers
 * must be valid (`out_std_error` may be null).
 */
enum OimStatus oim_monte_carlo_spread(const struct OimGraph *graph,
                                      const double *probs,
                                      size_t probs_len,
                                      const size_t *seeds,
                                      size_t seeds_len,
                                      size_t samples,
                                      uint64_t seed,
                                      double *out_mean,
                                      double *out_std_error);

/**
 * Creates an EXP3 learner over `n` strategies.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum OimStatus oim_exp3_new(size_t n, double gamma, uint64_t seed, struct OimExp3 **out);

/**
 * # Safety
 * `exp3` must come from this library and not be used afterwards.
 */
void oim_exp3_free(struct OimExp3 *exp3);

/**
 * # Safety
 * `exp3` and `out` must be valid pointers.
 */
enum OimStatus oim_exp3_sample(struct OimExp3 *exp3, size_t *out);

/**
 * Rewards `chosen` with `spread / node_count`.
 *
 * # Safety
 * `exp3` must be a valid handle.
 */
enum OimStatus oim_exp3_update(struct OimExp3 *exp3,
                               size_t spread,
                               size_t node_count,
                               size_t chosen);

/**
 * Copies the current selection distribution into `out` (`len` = strategy count).
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum OimStatus oim_exp3_probabilities(const struct OimExp3 *exp3, double *out, size_t len);

/**
 * Runs an experiment from TOML configuration text and returns the
 * per-round CSV. Release the string with [`oim_string_free`].
 *
 * # Safety
 * `config_toml` must be a valid NUL-terminated string; `out_csv` must be valid.
 */
enum OimStatus oim_run_experiment(const char *config_toml, char **out_csv);

/**
 * # Safety
 * `s` must be a string returned by this library, or null.
 */
void oim_string_free(char *s);

#endif  /* OIM_H */
