#ifndef SBM_GFT_H
#define SBM_GFT_H

/* Generated by cbindgen. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum SbmGftStatus {
  SBM_GFT_STATUS_OK = 0,
  // Null pointer or undersized buffer.
  SBM_GFT_STATUS_INVALID_ARGUMENT = 1,
  // Input rejected by validation.
  SBM_GFT_STATUS_VALIDATION = 2,
  // Eigensolver did not converge.
  SBM_GFT_STATUS_NO_CONVERGENCE = 3,
  // Internal panic; the handle arguments are left untouched.
  SBM_GFT_STATUS_PANIC = 4,
} SbmGftStatus;

// Opaque SBM Fourier basis.
typedef struct SbmGftBasis SbmGftBasis;

// Opaque SBM specification.
typedef struct SbmGftSpec SbmGftSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next call into the library on this thread.
const char *sbm_gft_last_error(void);

// Library version as a static nul-terminated string.
const char *sbm_gft_version(void);

// Creates a spec from a row-major `n×n` probability matrix, a measure of
// length `n` and the vertex count.
//
// # Safety
// `a` must point to `n*n` doubles, `mu` to `n` doubles and `out` to a
// writable handle slot.
enum SbmGftStatus sbm_gft_spec_new(const double *a,
                                   size_t n,
                                   const double *mu,
                                   size_t n_vertices,
                                   struct SbmGftSpec **out);

// Creates a spec from a JSON config (`{"A","mu","N"}` or a Cayley config).
//
// # Safety
// `json` must be a nul-terminated string and `out` a writable handle slot.
enum SbmGftStatus sbm_gft_spec_from_json(const char *json, struct SbmGftSpec **out);

// # Safety
// `spec` must be null or a handle from this library not yet freed.
void sbm_gft_spec_free(struct SbmGftSpec *spec);

// Number of blocks, or 0 for a null handle.
//
// # Safety
// `spec` must be null or a live handle.
size_t sbm_gft_spec_n_blocks(const struct SbmGftSpec *spec);

// Number of vertices, or 0 for a null handle.
//
// # Safety
// `spec` must be null or a live handle.
size_t sbm_gft_spec_n_vertices(const struct SbmGftSpec *spec);

// Writes the `n` block sizes to `out`.
//
// # Safety
// `spec` must be a live handle and `out` must hold `len` entries.
enum SbmGftStatus sbm_gft_spec_block_sizes(const struct SbmGftSpec *spec, size_t *out, size_t len);

// Builds the SBM Fourier basis with default tolerances.
//
// # Safety
// `spec` must be a live handle and `out` a writable handle slot.
enum SbmGftStatus sbm_gft_basis_new(const struct SbmGftSpec *spec, struct SbmGftBasis **out);

// # Safety
// `basis` must be null or a handle from this library not yet freed.
void sbm_gft_basis_free(struct SbmGftBasis *basis);

// Number of basis vectors (rank of `W`), or 0 for a null handle.
//
// # Safety
// `basis` must be null or a live handle.
size_t sbm_gft_basis_rank(const struct SbmGftBasis *basis);

// Writes the `rank` eigenvalues of `W` in decreasing order.
//
// # Safety
// `basis` must be a live handle and `out` must hold `len` doubles.
enum SbmGftStatus sbm_gft_basis_w_eigenvalues(const struct SbmGftBasis *basis,
                                              double *out,
                                              size_t len);

// Writes basis vector `index` (length `N`).
//
// # Safety
// `basis` must be a live handle and `out` must hold `len` doubles.
enum SbmGftStatus sbm_gft_basis_vector(const struct SbmGftBasis *basis,
                                       size_t index,
                                       double *out,
                                       size_t len);

// Transforms a real signal of length `N`: writes the `rank` coefficients
// `⟨x, u_j⟩` to `coefficients` and `‖x̂(0)‖` to `zero_norm` (if non-null).
//
// # Safety
// `basis` must be a live handle, `x` must point to `x_len` doubles and
// `coefficients` must hold `len` doubles.
enum SbmGftStatus sbm_gft_basis_transform(const struct SbmGftBasis *basis,
                                          const double *x,
                                          size_t x_len,
                                          double *coefficients,
                                          size_t len,
                                          double *zero_norm);

// Eigenvalues `Σ_x f(x) conj(χ(x))` of the Cayley matrix of `f` on
// `Z_{orders[0]} × … × Z_{orders[n_factors-1]}`, in character order.
// `f` is indexed like the group elements (last factor fastest).
//
// # Safety
// `orders` must point to `n_factors` entries, `f` to `f_len` doubles and
// `out` must hold `len` doubles.
enum SbmGftStatus sbm_gft_cayley_eigenvalues(const size_t *orders,
                                             size_t n_factors,
                                             const double *f,
                                             size_t f_len,
                                             double *out,
                                             size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SBM_GFT_H */
