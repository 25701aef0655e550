#ifndef PLAP_H
#define PLAP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PlapStatus {
  PLAP_STATUS_OK = 0,
  PLAP_STATUS_CERTIFICATE_FAILURE = 1,
  PLAP_STATUS_INVALID_INPUT = 2,
  PLAP_STATUS_NON_CONVERGENCE = 3,
  PLAP_STATUS_NULL_POINTER = 4,
  PLAP_STATUS_IO = 5,
  PLAP_STATUS_PANIC = 6,
} PlapStatus;

typedef enum PlapMu {
  PLAP_MU_UNIT = 0,
  PLAP_MU_DEGREE = 1,
  PLAP_MU_EXPLICIT = 2,
} PlapMu;

// Opaque graph handle.
typedef struct PlapGraph PlapGraph;

// Opaque spectrum handle.
typedef struct PlapSpectrum PlapSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *plap_last_error(void);

// Parses an edge-list document (NUL-terminated UTF-8).
//
// # Safety
// `text` must be a valid C string and `out` writable.
enum PlapStatus plap_graph_parse(const char *text, enum PlapMu mu, struct PlapGraph **out);

// Builds a graph from `m` edges `(u[i], v[i], w[i])`. With
// `PLAP_MU_EXPLICIT`, `measure` must hold `n` values; otherwise it is
// ignored and may be NULL.
//
// # Safety
// `u`, `v`, `w` must point to `m` elements, `measure` to `n` elements when
// used, and `out` must be writable.
enum PlapStatus plap_graph_new(size_t n,
                               const size_t *u,
                               const size_t *v,
                               const double *w,
                               size_t m,
                               enum PlapMu mu,
                               const double *measure,
                               struct PlapGraph **out);

// # Safety
// `g` must come from this library and not be used afterwards. NULL is a
// no-op.
void plap_graph_free(struct PlapGraph *g);

// Vertex count, or 0 for NULL.
//
// # Safety
// `g` must be NULL or a live graph handle.
size_t plap_graph_n(const struct PlapGraph *g);

// Eigenpairs at exponent `p` in ascending order.
//
// # Safety
// `g` must be a live graph handle and `out` writable.
enum PlapStatus plap_solve(const struct PlapGraph *g, double p, struct PlapSpectrum **out);

// # Safety
// `s` must come from [`plap_solve`] and not be used afterwards. NULL is a
// no-op.
void plap_spectrum_free(struct PlapSpectrum *s);

// Number of eigenpairs, or 0 for NULL.
//
// # Safety
// `s` must be NULL or a live spectrum handle.
size_t plap_spectrum_len(const struct PlapSpectrum *s);

// Eigenvalue and residual of pair `k` (0-based). `residual` may be NULL.
//
// # Safety
// `s` must be a live spectrum handle, `lambda` writable and `residual`
// NULL or writable.
enum PlapStatus plap_spectrum_pair(const struct PlapSpectrum *s,
                                   size_t k,
                                   double *lambda,
                                   double *residual);

// Copies the eigenfunction of pair `k` into `buf`, which must hold `len`
// values with `len` equal to the vertex count.
//
// # Safety
// `s` must be a live spectrum handle and `buf` writable for `len` values.
enum PlapStatus plap_spectrum_eigenfunction(const struct PlapSpectrum *s,
                                            size_t k,
                                            double *buf,
                                            size_t len);

// Strong and weak nodal domain counts of `f` with the default zero
// tolerance.
//
// # Safety
// `g` must be a live graph handle, `f` readable for `len` values and the
// outputs writable.
enum PlapStatus plap_nodal_counts(const struct PlapGraph *g,
                                  const double *f,
                                  size_t len,
                                  size_t *strong,
                                  size_t *weak);

// Exact `h_1 .. h_k` into `h[0..k]`.
//
// # Safety
// `g` must be a live graph handle and `h` writable for `k` values.
enum PlapStatus plap_cheeger(const struct PlapGraph *g, size_t k, double *h);

// Best sweep cut of `f` at exponent `p`: its cut ratio, the guaranteed
// bound, and the set as a 0/1 mask in `mask` (may be NULL).
//
// # Safety
// `g` must be a live graph handle, `f` readable and `mask` NULL or
// writable for `len` values, and the scalar outputs writable.
enum PlapStatus plap_sweep(const struct PlapGraph *g,
                           const double *f,
                           size_t len,
                           double p,
                           double *cut_ratio,
                           double *bound,
                           uint8_t *mask);

// Runs the certification pipeline at the `np` exponents in `p_list` and
// returns the JSON report in `json` (release with [`plap_string_free`]).
// The status is `PLAP_STATUS_OK`, `PLAP_STATUS_CERTIFICATE_FAILURE` or
// `PLAP_STATUS_NON_CONVERGENCE` when a report was produced.
//
// # Safety
// `g` must be a live graph handle, `p_list` readable for `np` values and
// `json` writable.
enum PlapStatus plap_certify_json(const struct PlapGraph *g,
                                  const double *p_list,
                                  size_t np,
                                  uint64_t seed,
                                  char **json);

// # Safety
// `s` must come from this library and not be used afterwards. NULL is a
// no-op.
void plap_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLAP_H */
