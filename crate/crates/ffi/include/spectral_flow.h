#ifndef SPECTRAL_FLOW_H
#define SPECTRAL_FLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SfMethod {
  SF_METHOD_WINDING = 0,
  SF_METHOD_ANALYTIC = 1,
  SF_METHOD_CROSSING = 2,
  SF_METHOD_INTEGRAL_CHI = 3,
  SF_METHOD_HEAT = 4,
  SF_METHOD_RESOLVENT_POWER = 5,
} SfMethod;

typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_POINTER = 1,
  SF_STATUS_INVALID_ARGUMENT = 2,
  SF_STATUS_NUMERICAL_FAILURE = 3,
  SF_STATUS_DISAGREEMENT = 4,
  SF_STATUS_INVALID_UTF8 = 5,
  SF_STATUS_PANIC = 6,
} SfStatus;

// A tracial algebra.
typedef struct SfAlgebra SfAlgebra;

// An element of an algebra.
typedef struct SfElement SfElement;

// A path of Hermitian elements over `[0, 1]`.
typedef struct SfPath SfPath;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a successful call.
// The pointer stays valid until the next call into this library on the same thread.
const char *sf_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *sf_version(void);

// Block-matrix algebra: block `k` has dimension `dims[k]` and weight `weights[k]`.
//
// # Safety
// `dims` and `weights` must point to `n` readable values; `out` must be writable.
enum SfStatus sf_algebra_blocks_new(const size_t *dims,
                                    const double *weights,
                                    size_t n,
                                    struct SfAlgebra **out);

// Grid algebra with sample points and measure weights.
//
// # Safety
// `points` and `weights` must point to `n` readable values; `out` must be writable.
enum SfStatus sf_algebra_grid_new(const double *points,
                                  const double *weights,
                                  size_t n,
                                  struct SfAlgebra **out);

// `τ(1)`.
//
// # Safety
// `alg` must be a live handle and `out` writable.
enum SfStatus sf_algebra_unit_trace(const struct SfAlgebra *alg, double *out);

// # Safety
// `alg` must be null or a handle from this library that has not been freed.
void sf_algebra_free(struct SfAlgebra *alg);

// Diagonal element; `diag` lists the diagonal across all blocks, or the grid values.
//
// # Safety
// `alg` must be a live handle, `diag` must point to `n` values and `out` must be writable.
enum SfStatus sf_element_diagonal_new(const struct SfAlgebra *alg,
                                      const double *diag,
                                      size_t n,
                                      struct SfElement **out);

// General element of a block algebra from row-major blocks laid out consecutively.
// `im` may be null for real matrices; `len` must equal the sum of the squared block dimensions.
//
// # Safety
// `alg` must be a live handle, `re` (and `im` if non-null) must point to `len` values
// and `out` must be writable.
enum SfStatus sf_element_blocks_new(const struct SfAlgebra *alg,
                                    const double *re,
                                    const double *im,
                                    size_t len,
                                    struct SfElement **out);

// `τ(A)` as a complex number.
//
// # Safety
// `el` must be a live handle; `re` and `im` must be writable.
enum SfStatus sf_element_trace(const struct SfElement *el, double *re, double *im);

// # Safety
// `el` must be null or a handle from this library that has not been freed.
void sf_element_free(struct SfElement *el);

// `t ↦ (1 − t)A + tB` for Hermitian `A`, `B` in the same algebra.
//
// # Safety
// `a` and `b` must be live handles and `out` writable.
enum SfStatus sf_path_affine_new(const struct SfElement *a,
                                 const struct SfElement *b,
                                 struct SfPath **out);

// Loop `t ↦ tan(π(t − x − offset))` on a grid algebra.
//
// # Safety
// `grid` must be a live handle and `out` writable.
enum SfStatus sf_path_tan_wrap_new(const struct SfAlgebra *grid,
                                   double offset,
                                   struct SfPath **out);

// # Safety
// `path` must be null or a handle from this library that has not been freed.
void sf_path_free(struct SfPath *path);

// Spectral flow of `path` by one method with default parameters.
//
// # Safety
// `path` must be a live handle and `out` writable.
enum SfStatus sf_spectral_flow(const struct SfPath *path, enum SfMethod method, double *out);

// Executes a JSON run specification. The JSON report (or error body) is written to
// `*out_json`, to be released with [`sf_string_free`], and the command line exit code
// to `*exit_code`. The returned status mirrors that exit code.
//
// # Safety
// `spec` must be a NUL-terminated string; `out_json` and `exit_code` must be writable.
enum SfStatus sf_run_spec_json(const char *spec, char **out_json, int32_t *exit_code);

// # Safety
// `s` must be null or a string returned by this library that has not been freed.
void sf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECTRAL_FLOW_H */
