#ifndef SGL_MIXING_H
#define SGL_MIXING_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SglStatus {
  SGL_STATUS_OK = 0,
  SGL_STATUS_NULL_POINTER = 1,
  SGL_STATUS_INVALID_ARGUMENT = 2,
  SGL_STATUS_PARSE_ERROR = 3,
  SGL_STATUS_ASSUMPTION_VIOLATION = 4,
  SGL_STATUS_BLOW_UP = 5,
  SGL_STATUS_NOT_FOUND = 6,
  SGL_STATUS_NON_UNIQUE_STATIONARY = 7,
  SGL_STATUS_BUFFER_TOO_SMALL = 8,
  SGL_STATUS_IO = 9,
  SGL_STATUS_PANIC = 10,
} SglStatus;

/**
 * A minorization certificate `(K, m, δ, ν, δ')`.
 */
typedef struct SglCertificate SglCertificate;

/**
 * A finite Markov kernel.
 */
typedef struct SglKernel SglKernel;

/**
 * A validated SPDE model with precomputed step operators.
 */
typedef struct SglSimulator SglSimulator;

typedef struct SglContraction {
  /**
   * `1 - δδ'`.
   */
  double factor;
  /**
   * Worst two-step ratio over Dirac pairs.
   */
  double worst_ratio;
  double lower_bound_slack;
  bool holds;
} SglContraction;

typedef struct SglOdeComparison {
  double y;
  double literal_bound;
  double corrected_bound;
  bool literal_holds;
  bool corrected_holds;
} SglOdeComparison;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (nul-terminated,
 * truncated to `len`). Returns the full message length without the nul, or
 * 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t sgl_last_error_message(char *buf, size_t len);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer returned by this library and not yet freed.
 */
void sgl_string_free(char *s);

/**
 * Builds a kernel from `n * n` row-major probabilities.
 *
 * # Safety
 * `entries` must point to `n * n` doubles and `out` to a writable handle slot.
 */
enum SglStatus sgl_kernel_new(size_t n, const double *entries, struct SglKernel **out);

/**
 * Parses a kernel file body (first line `n`, then `n` rows).
 *
 * # Safety
 * `text` must be a nul-terminated string and `out` a writable handle slot.
 */
enum SglStatus sgl_kernel_parse(const char *text, struct SglKernel **out);

/**
 * # Safety
 * `kernel` must be null or a live handle from this library.
 */
void sgl_kernel_free(struct SglKernel *kernel);

/**
 * Number of states, 0 for a null handle.
 *
 * # Safety
 * `kernel` must be null or a live handle.
 */
size_t sgl_kernel_size(const struct SglKernel *kernel);

/**
 * Writes the unique stationary distribution into `out[..n]`.
 *
 * # Safety
 * `kernel` must be a live handle and `out` point to `len` doubles.
 */
enum SglStatus sgl_invariant_measure(const struct SglKernel *kernel, double *out, size_t len);

/**
 * Column-minima certificate for `P^m` on `set`. Returns
 * [`SglStatus::NotFound`] when the rows share no mass.
 *
 * # Safety
 * `kernel` must be live, `set` point to `set_len` indices, `out` be writable.
 */
enum SglStatus sgl_minorization(const struct SglKernel *kernel,
                                const size_t *set,
                                size_t set_len,
                                size_t m,
                                struct SglCertificate **out);

/**
 * One-step certificate on `set` together with `δ' = min_x P(x, set)`.
 *
 * # Safety
 * As for [`sgl_minorization`].
 */
enum SglStatus sgl_doeblin_certificate(const struct SglKernel *kernel,
                                       const size_t *set,
                                       size_t set_len,
                                       struct SglCertificate **out);

/**
 * Two-step small set from densities against the reference weights `mu0[..n]`.
 *
 * # Safety
 * `kernel` must be live, `mu0` point to `n` doubles, `out` be writable.
 */
enum SglStatus sgl_small_set_search(const struct SglKernel *kernel,
                                    const double *mu0,
                                    struct SglCertificate **out);

/**
 * Parses a `key = value` certificate block.
 *
 * # Safety
 * `text` must be nul-terminated and `out` writable.
 */
enum SglStatus sgl_certificate_parse(const char *text, struct SglCertificate **out);

/**
 * # Safety
 * `cert` must be null or a live handle.
 */
void sgl_certificate_free(struct SglCertificate *cert);

/**
 * `δ`, or NaN for a null handle.
 *
 * # Safety
 * `cert` must be null or a live handle.
 */
double sgl_certificate_delta(const struct SglCertificate *cert);

/**
 * `δ'`, or NaN when absent.
 *
 * # Safety
 * `cert` must be null or a live handle.
 */
double sgl_certificate_delta_prime(const struct SglCertificate *cert);

/**
 * Step count `m`, 0 for a null handle.
 *
 * # Safety
 * `cert` must be null or a live handle.
 */
size_t sgl_certificate_steps(const struct SglCertificate *cert);

/**
 * Copies `ν` into `out`.
 *
 * # Safety
 * `cert` must be live and `out` point to `len` doubles.
 */
enum SglStatus sgl_certificate_nu(const struct SglCertificate *cert, double *out, size_t len);

/**
 * Exact elementwise validation of `cert` against `kernel`.
 *
 * # Safety
 * Both handles must be live.
 */
enum SglStatus sgl_certificate_verify(const struct SglCertificate *cert,
                                      const struct SglKernel *kernel);

/**
 * The certificate as a `key = value` block; free with [`sgl_string_free`].
 * Returns null for a null handle.
 *
 * # Safety
 * `cert` must be null or a live handle.
 */
char *sgl_certificate_format(const struct SglCertificate *cert);

/**
 * Two-step contraction check for a one-step certificate carrying `δ'`.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum SglStatus sgl_contraction_check(const struct SglKernel *kernel,
                                     const struct SglCertificate *cert,
                                     struct SglContraction *out);

/**
 * `y' = -c y^q + f` with constant forcing `f`, integrated to `t`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SglStatus sgl_ode_comparison(uint32_t q,
                                  double c,
                                  double y0,
                                  double forcing,
                                  double t,
                                  struct SglOdeComparison *out);

/**
 * The default model (`P(u) = u³ - u`, `h = 1/256`, degenerate spectrum)
 * with `n_modes` modes, horizon `t_final` and `seed`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SglStatus sgl_simulator_new_default(size_t n_modes,
                                         double t_final,
                                         uint64_t seed,
                                         struct SglSimulator **out);

/**
 * Builds the model from the `[model]` section of a configuration text.
 *
 * # Safety
 * `config` must be nul-terminated and `out` writable.
 */
enum SglStatus sgl_simulator_from_config(const char *config, struct SglSimulator **out);

/**
 * # Safety
 * `sim` must be null or a live handle.
 */
void sgl_simulator_free(struct SglSimulator *sim);

/**
 * Coefficients per state, `2N + 1`; 0 for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
size_t sgl_simulator_state_len(const struct SglSimulator *sim);

/**
 * Runs trajectory `trajectory` from `x` and writes the states at integer
 * times `0..=⌊T⌋` back to back into `out` (`(⌊T⌋ + 1) · (2N + 1)` doubles).
 *
 * # Safety
 * `sim` must be live, `x` point to `2N + 1` doubles and `out` to `len` doubles.
 */
enum SglStatus sgl_simulator_run(const struct SglSimulator *sim,
                                 const double *x,
                                 uint64_t trajectory,
                                 double *out,
                                 size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SGL_MIXING_H */
