#ifndef ORBICELL_H
#define ORBICELL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum OcMode {
  OC_MODE_COMPLEX = 0,
  OC_MODE_REAL = 1,
} OcMode;

typedef enum OcStatus {
  OC_STATUS_OK = 0,
  /**
   * A check failed or no cellular form exists.
   */
  OC_STATUS_VERIFICATION_FAILED = 1,
  OC_STATUS_INVALID_INPUT = 2,
  /**
   * Parameters outside what is implemented (m = 1 rings, oversized oracles).
   */
  OC_STATUS_UNSUPPORTED = 3,
  OC_STATUS_NULL_POINTER = 4,
  OC_STATUS_INTERNAL = 5,
} OcStatus;

/**
 * Opaque handle to a computed cohomology presentation.
 */
typedef struct OcPresentation OcPresentation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build the presentation for a graph on `n_vertices` vertices with
 * `n_edges` edges given as 1-based pairs in `edges[2*i], edges[2*i+1]`.
 * With `with_products` set, `m` must exceed 1.
 *
 * # Safety
 * `edges` must point to `2 * n_edges` readable values; `out` must be writable.
 */
enum OcStatus oc_presentation_new(size_t n_vertices,
                                  const uint32_t *edges,
                                  size_t n_edges,
                                  uint32_t k,
                                  uint32_t m,
                                  enum OcMode mode,
                                  bool with_products,
                                  struct OcPresentation **out);

/**
 * # Safety
 * `p` must come from [`oc_presentation_new`] and not be freed already.
 */
void oc_presentation_free(struct OcPresentation *p);

/**
 * Number of additive basis elements.
 *
 * # Safety
 * `p` must be a live presentation and `len` writable.
 */
enum OcStatus oc_presentation_len(const struct OcPresentation *p, size_t *len);

/**
 * Betti numbers by degree. Writes at most `cap` values to `buf` and the
 * full length to `len`; call with `cap = 0` to size the buffer.
 *
 * # Safety
 * `buf` must hold `cap` values; `len` must be writable.
 */
enum OcStatus oc_presentation_poincare(const struct OcPresentation *p,
                                       size_t *buf,
                                       size_t cap,
                                       size_t *len);

/**
 * Degree of basis element `i`.
 *
 * # Safety
 * `p` must be a live presentation and `degree` writable.
 */
enum OcStatus oc_presentation_degree(const struct OcPresentation *p, size_t i, size_t *degree);

/**
 * Product of basis elements `i` and `j` as sparse terms
 * `coeffs[t] * e_{indices[t]}`. Same sizing protocol as
 * [`oc_presentation_poincare`]. Coefficients beyond 64 bits are reported
 * as `Internal`.
 *
 * # Safety
 * `coeffs` and `indices` must hold `cap` values; `len` must be writable.
 */
enum OcStatus oc_presentation_product(const struct OcPresentation *p,
                                      size_t i,
                                      size_t j,
                                      int64_t *coeffs,
                                      size_t *indices,
                                      size_t cap,
                                      size_t *len);

/**
 * Full presentation as JSON; free with [`oc_string_free`].
 *
 * # Safety
 * `p` must be a live presentation and `out` writable.
 */
enum OcStatus oc_presentation_to_json(const struct OcPresentation *p, char **out);

/**
 * Run every oracle check that fits in `oracle_limit` poset elements.
 * Returns `VerificationFailed` if any check fails; the report (one
 * PASS/FAIL line per check) is written to `report` in both cases.
 *
 * # Safety
 * As for [`oc_presentation_new`]; `report` must be writable.
 */
enum OcStatus oc_verify(size_t n_vertices,
                        const uint32_t *edges,
                        size_t n_edges,
                        uint32_t k,
                        uint32_t m,
                        enum OcMode mode,
                        size_t oracle_limit,
                        char **report);

/**
 * Cellular form of a copresheaf on a poset, both as JSON. A null
 * `copresheaf_json` means the constant copresheaf Z. On success `out`
 * holds the form; when no form exists the status is `VerificationFailed`
 * and `out` holds the reason.
 *
 * # Safety
 * Non-null strings must be nul-terminated; `out` must be writable.
 */
enum OcStatus oc_cellular_form(const char *poset_json, const char *copresheaf_json, char **out);

/**
 * Message for the last failing call on this thread, or null. Owned by the
 * library and valid until the next call on the same thread.
 */
const char *oc_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void oc_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* ORBICELL_H */
