#ifndef TRILAB_H
#define TRILAB_H

/* This header is generated by cbindgen from trilab-ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call in this ABI.
 */
typedef enum {
  TRILAB_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  TRILAB_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  TRILAB_STATUS_INVALID_UTF8 = 2,
  /**
   * Configuration rejected (parse or validation failure).
   */
  TRILAB_STATUS_INVALID_CONFIG = 3,
  /**
   * The operation itself failed; see `trilab_last_error`.
   */
  TRILAB_STATUS_RUNTIME_ERROR = 4,
  /**
   * The library panicked; the call did nothing.
   */
  TRILAB_STATUS_PANIC = 5,
} TrilabStatus;

/**
 * Opaque peer-topology handle.
 */
typedef struct TrilabGraph TrilabGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *trilab_version(void);

/**
 * The last error message raised on this thread, or null if none. The caller
 * owns the returned string; release it with `trilab_string_free`.
 */
char *trilab_last_error(void);

/**
 * Release a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `ptr` must be a pointer previously returned by this library and not yet
 * freed.
 */
void trilab_string_free(char *ptr);

/**
 * Generate a topology from a JSON generator spec (the `topology` object of
 * scenario files) and a seed.
 *
 * # Safety
 * `spec_json` must be a valid NUL-terminated string and `out` a valid
 * pointer.
 */
TrilabStatus trilab_graph_generate(const char *spec_json, uint64_t seed, TrilabGraph **out);

/**
 * Parse a graph from the edge-list interchange text format.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
TrilabStatus trilab_graph_from_text(const char *text, TrilabGraph **out);

/**
 * Node count of a graph handle; zero if the handle is null.
 *
 * # Safety
 * `graph` must be null or a live handle from this library.
 */
uint64_t trilab_graph_node_count(const TrilabGraph *graph);

/**
 * Exact connectivity metrics of a graph as a JSON report.
 *
 * # Safety
 * `graph` must be a live handle and `out_json` a valid pointer.
 */
TrilabStatus trilab_graph_metrics_json(const TrilabGraph *graph, char **out_json);

/**
 * Release a graph handle. Null is a no-op.
 *
 * # Safety
 * `graph` must be null or a live handle from this library, not yet freed.
 */
void trilab_graph_free(TrilabGraph *graph);

/**
 * Merkle root over `leaf_count` 32-byte leaves stored contiguously.
 *
 * # Safety
 * `leaves` must point to `leaf_count * 32` readable bytes and `out_root` to
 * 32 writable bytes.
 */
TrilabStatus trilab_merkle_root(const uint8_t *leaves, uintptr_t leaf_count, uint8_t *out_root);

/**
 * Inclusion proof for the leaf at `index`, returned as JSON.
 *
 * # Safety
 * `leaves` must point to `leaf_count * 32` readable bytes and `out_json`
 * must be a valid pointer.
 */
TrilabStatus trilab_merkle_prove_json(const uint8_t *leaves,
                                      uintptr_t leaf_count,
                                      uintptr_t index,
                                      char **out_json);

/**
 * SPV acceptance of a transaction id against a 120-byte canonical block
 * header and a JSON proof. `result` receives the verdict.
 *
 * # Safety
 * `txid` must point to 32 readable bytes, `header_bytes` to `header_len`
 * readable bytes; `proof_json` must be a valid NUL-terminated string and
 * `result` a valid pointer.
 */
TrilabStatus trilab_spv_verify(const uint8_t *txid,
                               const uint8_t *header_bytes,
                               uintptr_t header_len,
                               const char *proof_json,
                               bool *result);

/**
 * The reference counterexample configuration as JSON.
 *
 * # Safety
 * `out_json` must be a valid pointer.
 */
TrilabStatus trilab_counterexample_config_json(char **out_json);

/**
 * Evaluate the three trilemma predicates on a JSON protocol configuration;
 * the full report is returned as JSON.
 *
 * # Safety
 * `config_json` must be a valid NUL-terminated string and `out_json` a
 * valid pointer.
 */
TrilabStatus trilab_evaluate_trilemma_json(const char *config_json, char **out_json);

/**
 * Run a full scenario file (same schema as the CLI) and return the emitted
 * files as one JSON object `{ "files": {name: contents}, "summary": [..] }`.
 *
 * # Safety
 * `scenario_json` must be a valid NUL-terminated string and `out_json` a
 * valid pointer. `seed_override` may be null.
 */
TrilabStatus trilab_run_scenario_json(const char *scenario_json,
                                      const uint64_t *seed_override,
                                      char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRILAB_H */
