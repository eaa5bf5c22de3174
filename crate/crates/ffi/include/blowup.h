#ifndef BLOWUP_H
#define BLOWUP_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SblAlphaBranch {
  SBL_ALPHA_BRANCH_MINUS_ONE_OVER_S = 0,
  SBL_ALPHA_BRANCH_SMALL_ORDER = 1,
  SBL_ALPHA_BRANCH_AMBIGUOUS = 2,
  SBL_ALPHA_BRANCH_BLOWUP = 3,
} SblAlphaBranch;

typedef enum SblPerturbation {
  SBL_PERTURBATION_ZERO = 0,
  SBL_PERTURBATION_LOG_DAMPED = 1,
  SBL_PERTURBATION_POWER_SUB = 2,
} SblPerturbation;

typedef enum SblProfileKind {
  SBL_PROFILE_KIND_QUADRATIC_F = 0,
  SBL_PROFILE_KIND_HIGHER_PSI = 1,
} SblProfileKind;

typedef enum SblStatus {
  SBL_STATUS_OK = 0,
  SBL_STATUS_NULL_POINTER = 1,
  SBL_STATUS_INVALID_ARGUMENT = 2,
  SBL_STATUS_DOMAIN = 3,
  SBL_STATUS_NUMERICAL = 4,
  SBL_STATUS_INCONCLUSIVE = 5,
  SBL_STATUS_UNSUPPORTED = 6,
  SBL_STATUS_PANIC = 7,
} SblStatus;

/**
 * Opaque parameter set.
 */
typedef struct SblParams SblParams;

/**
 * Opaque Gauss–Hermite rule.
 */
typedef struct SblQuadrature SblQuadrature;

/**
 * Values of the weighted functionals at one state.
 */
typedef struct SblFunctionals {
  double e0;
  double i;
  double e;
  double j;
  double l2;
  double lp1;
  double h1;
} SblFunctionals;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t sbl_last_error(char *buf, size_t len);

/**
 * Creates a parameter set; `q` is read only for `PowerSub`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SblStatus sbl_params_new(size_t n,
                              double p,
                              double a,
                              double m,
                              double mu,
                              enum SblPerturbation kind,
                              double q,
                              struct SblParams **out_handle);

/**
 * # Safety
 * `handle` must come from [`sbl_params_new`] and not be used afterwards.
 */
void sbl_params_free(struct SblParams *handle);

/**
 * # Safety
 * Pointers must be valid.
 */
enum SblStatus sbl_params_set_theta(struct SblParams *handle, double theta);

/**
 * 1-D Hermite polynomial h_m(y) (h_2 = y² − 2).
 *
 * # Safety
 * `value` must be valid.
 */
enum SblStatus sbl_hermite_eval(size_t m, double y, double *value);

/**
 * Tensor Hermite polynomial H_α(y) for α, y of length `n`.
 *
 * # Safety
 * `alpha` and `y` must point to `n` elements.
 */
enum SblStatus sbl_hermite_eval_multi(const size_t *alpha,
                                      const double *y,
                                      size_t n,
                                      double *value);

/**
 * Tensor Gauss–Hermite rule for ρ in dimension `n` with `order` nodes per axis.
 *
 * # Safety
 * `out_handle` must be valid.
 */
enum SblStatus sbl_quadrature_new(size_t n, size_t order, struct SblQuadrature **out_handle);

/**
 * # Safety
 * `handle` must come from [`sbl_quadrature_new`] and not be used afterwards.
 */
void sbl_quadrature_free(struct SblQuadrature *handle);

/**
 * Number of nodes.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SblStatus sbl_quadrature_len(const struct SblQuadrature *handle, size_t *len);

/**
 * Copies nodes (row-major, len·n values) and weights (len values).
 *
 * # Safety
 * `nodes` must hold `nodes_len` and `weights` `weights_len` doubles.
 */
enum SblStatus sbl_quadrature_copy(const struct SblQuadrature *handle,
                                   double *nodes,
                                   size_t nodes_len,
                                   double *weights,
                                   size_t weights_len);

/**
 * Blow-up time and rate constant (T−t)^{1/(p−1)}v of v′ = v^p + h(v), v(0) = v0.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SblStatus sbl_blowup_ode(const struct SblParams *handle,
                              double v0,
                              double *blowup_time,
                              double *rate);

/**
 * Truncated asymptotic series of φ(s) with `k` terms.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SblStatus sbl_phi_series(const struct SblParams *handle, double s, size_t k, double *value);

/**
 * Integrates α′ = α² + c s^{−q} from α(s_begin) = alpha0 to s_end.
 * A blow-up run reports `Blowup` with status Ok.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SblStatus sbl_alpha_dichotomy(double q,
                                   double c,
                                   double alpha0,
                                   double s_begin,
                                   double s_end,
                                   enum SblAlphaBranch *branch,
                                   double *s_alpha_end,
                                   double *residual);

/**
 * Evaluates f_l (kind QuadraticF, `order` = l) or ψ_m (kind HigherPsi,
 * `order` = m, with `count` coefficients: `alphas` holds count·n exponents
 * row-major and `coeffs` the c_α) at ξ of length n.
 *
 * # Safety
 * Buffers must hold the stated number of elements.
 */
enum SblStatus sbl_profile_eval(const struct SblParams *handle,
                                enum SblProfileKind kind,
                                size_t order,
                                const size_t *alphas,
                                const double *coeffs,
                                size_t count,
                                const double *xi,
                                double *value);

/**
 * Weighted functionals of w sampled on the uniform grid [−L, L]^n with
 * spacing dy (row-major in 2-D) at time s.
 *
 * # Safety
 * `values` must hold `len` doubles; `report` must be valid.
 */
enum SblStatus sbl_functionals(const struct SblParams *handle,
                               double half_width,
                               double dy,
                               double s,
                               const double *values,
                               size_t len,
                               struct SblFunctionals *report);

/**
 * Blow-up criterion margin; `triggered` is set to 1 when the margin is positive.
 *
 * # Safety
 * `values` must hold `len` doubles; outputs must be valid.
 */
enum SblStatus sbl_criterion(const struct SblParams *handle,
                             double half_width,
                             double dy,
                             double s,
                             const double *values,
                             size_t len,
                             double *margin,
                             int32_t *triggered);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLOWUP_H */
