#ifndef LFGCN_H
#define LFGCN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes; the first four match the command-line exit codes.
typedef enum LfgcnStatus {
  LFGCN_STATUS_OK = 0,
  LFGCN_STATUS_INVALID_ARGUMENT = 1,
  LFGCN_STATUS_DATA_ERROR = 2,
  LFGCN_STATUS_NUMERICAL_ERROR = 3,
  LFGCN_STATUS_NULL_POINTER = 4,
  LFGCN_STATUS_BUFFER_TOO_SMALL = 5,
  LFGCN_STATUS_PANIC = 6,
} LfgcnStatus;

// Opaque graph handle.
typedef struct LfgcnGraph LfgcnGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the next call.
const char *lfgcn_last_error(void);

// Builds an undirected graph from parallel edge arrays; `weights` may be null for unit weights.
//
// # Safety
// `us`, `vs` (and `weights` if non-null) must point to `num_edges` values; `out` must be writable.
enum LfgcnStatus lfgcn_graph_new(size_t num_nodes,
                                 const size_t *us,
                                 const size_t *vs,
                                 const double *weights,
                                 size_t num_edges,
                                 struct LfgcnGraph **out);

// Loads an edge-list file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum LfgcnStatus lfgcn_graph_load(const char *path, struct LfgcnGraph **out);

// Releases a handle; null is ignored.
//
// # Safety
// `g` must come from this library and not be used afterwards.
void lfgcn_graph_free(struct LfgcnGraph *g);

// # Safety
// `g` must be a live handle or null.
size_t lfgcn_graph_num_nodes(const struct LfgcnGraph *g);

// # Safety
// `g` must be a live handle or null.
size_t lfgcn_graph_num_edges(const struct LfgcnGraph *g);

// Hop-count edge betweenness, one score per edge in input order.
//
// # Safety
// `scores` must hold `capacity` doubles.
enum LfgcnStatus lfgcn_edge_betweenness(const struct LfgcnGraph *g,
                                        double *scores,
                                        size_t capacity);

// Closed-form fractional G-SSL. `labels[v]` is a class in `0..num_classes` or negative
// for unlabeled. Writes the `N x num_classes` score matrix and, if `predicted` is
// non-null, the argmax class per node.
//
// # Safety
// `labels` must hold `N` values, `scores` `N * num_classes`, `predicted` `N` or be null.
enum LfgcnStatus lfgcn_gssl_classify(const struct LfgcnGraph *g,
                                     const int64_t *labels,
                                     size_t num_classes,
                                     double alpha,
                                     double sigma,
                                     double gamma,
                                     double *scores,
                                     size_t *predicted);

// Truncated FGS filter `(1-α) Σ_{i≤order} (αL̃)^i X` on the fractional operator of `g`.
// `order == 0` selects the default `⌈4α⌉`.
//
// # Safety
// `x` and `out` must each hold `N * cols` doubles.
enum LfgcnStatus lfgcn_fgs_apply(const struct LfgcnGraph *g,
                                 double alpha,
                                 double sigma,
                                 double gamma,
                                 size_t order,
                                 const double *x,
                                 size_t cols,
                                 double *out);

// Relaxation time of the Lévy-flight walk from the normalized-Laplacian spectrum.
//
// # Safety
// `out` must be writable.
enum LfgcnStatus lfgcn_relaxation_time(const struct LfgcnGraph *g, double gamma, double *out);

// One P-DropEdge round. Writes the removed edge ids in draw order and their count.
//
// # Safety
// `removed` must hold `capacity` values; `count` must be writable.
enum LfgcnStatus lfgcn_pdropedge_sample(const struct LfgcnGraph *g,
                                        double p_pde,
                                        double tau,
                                        uint64_t seed,
                                        size_t *removed,
                                        size_t capacity,
                                        size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LFGCN_H */
