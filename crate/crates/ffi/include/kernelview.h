/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef KERNELVIEW_H
#define KERNELVIEW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  KV_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  KV_STATUS_NULL_ARGUMENT = 1,
  /**
   * Malformed input file or kernel.
   */
  KV_STATUS_PARSE = 2,
  /**
   * The views share no units.
   */
  KV_STATUS_EMPTY_INTERSECTION = 3,
  /**
   * Not enough data for the requested analysis.
   */
  KV_STATUS_INSUFFICIENT = 4,
  /**
   * The query has no usable terms.
   */
  KV_STATUS_EMPTY_QUERY = 5,
  KV_STATUS_INVALID_ARGUMENT = 6,
  KV_STATUS_IO = 7,
  /**
   * A string argument was not valid UTF-8.
   */
  KV_STATUS_UTF8 = 8,
  /**
   * The output buffer is too small.
   */
  KV_STATUS_BUFFER_TOO_SMALL = 9,
  /**
   * Internal failure; the library caught a panic.
   */
  KV_STATUS_INTERNAL = 10,
} KvStatus;

/**
 * A square similarity matrix over the units of a system.
 */
typedef struct KvKernel KvKernel;

/**
 * A fitted cross-modal search model.
 */
typedef struct KvRetrieval KvRetrieval;

/**
 * An ingested system: its aligned views plus the text preprocessor.
 */
typedef struct KvSystem KvSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *kv_last_error(void);

/**
 * Library version as a static string.
 */
const char *kv_version(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void kv_string_free(char *s);

/**
 * Loads a workspace previously created by `kernelview ingest`.
 *
 * # Safety
 * `workspace` must be a nul-terminated string; `out` a valid pointer.
 */
KvStatus kv_system_load(const char *workspace, KvSystem **out);

/**
 * Reads the three views from raw inputs with the bundled word lists.
 *
 * # Safety
 * String arguments must be nul-terminated; `out` a valid pointer.
 */
KvStatus kv_system_from_files(const char *calls,
                              const char *transactions,
                              const char *corpus_dir,
                              KvSystem **out);

/**
 * # Safety
 * `system` must come from this library and not have been freed.
 */
void kv_system_free(KvSystem *system);

/**
 * # Safety
 * Pointers must be valid.
 */
KvStatus kv_system_unit_count(const KvSystem *system, size_t *out);

/**
 * Name of unit `index`; release with `kv_string_free`.
 *
 * # Safety
 * Pointers must be valid.
 */
KvStatus kv_system_unit_name(const KvSystem *system, size_t index, char **out);

/**
 * Computes a kernel of one view. `view` is `struct`, `evol` or `lex`;
 * `kernel` a family name (`ed`, `led`, `poly`, `rbf`, `bow`, `cons`,
 * `spec`, `exp`). `param` is ignored unless `has_param` is true.
 *
 * # Safety
 * Pointers must be valid; strings nul-terminated.
 */
KvStatus kv_kernel_compute(const KvSystem *system,
                           const char *view,
                           const char *kernel,
                           double param,
                           bool has_param,
                           KvKernel **out);

/**
 * # Safety
 * `kernel` must come from this library and not have been freed.
 */
void kv_kernel_free(KvKernel *kernel);

/**
 * # Safety
 * Pointers must be valid.
 */
KvStatus kv_kernel_size(const KvKernel *kernel, size_t *out);

/**
 * Copies the kernel into `buffer` in row-major order. `len` is the
 * buffer length in doubles and must be at least `n * n`.
 *
 * # Safety
 * `buffer` must point to `len` writable doubles.
 */
KvStatus kv_kernel_values(const KvKernel *kernel, double *buffer, size_t len);

/**
 * Sums trace-normalized kernels.
 *
 * # Safety
 * `kernels` must point to `count` valid kernel handles.
 */
KvStatus kv_kernel_add(const KvKernel *const *kernels, size_t count, KvKernel **out);

/**
 * Clusters the units with average linkage and scores the result against
 * the package hierarchy. Writes the path difference to `pd` and, if
 * `newick` is not null, the dendrogram (release with `kv_string_free`).
 *
 * # Safety
 * Pointers must be valid; `newick` may be null.
 */
KvStatus kv_cluster(const KvSystem *system, const KvKernel *kernel, double *pd, char **newick);

/**
 * Fits the search model on exponential diffusion (alpha 1) of the call
 * graph, a linear kernel of the change history and bag-of-words text.
 *
 * # Safety
 * Pointers must be valid.
 */
KvStatus kv_retrieval_fit(const KvSystem *system, size_t dims, double kappa, KvRetrieval **out);

/**
 * # Safety
 * `model` must come from this library and not have been freed.
 */
void kv_retrieval_free(KvRetrieval *model);

/**
 * Ranks units for a free-text query. Up to `capacity` unit indices and
 * distances are written; `count` receives the number written.
 *
 * # Safety
 * `units` and `distances` must each hold `capacity` elements.
 */
KvStatus kv_retrieval_search(const KvRetrieval *model,
                             const KvSystem *system,
                             const char *query,
                             size_t capacity,
                             size_t *units,
                             double *distances,
                             size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KERNELVIEW_H */
