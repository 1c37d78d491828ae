#ifndef STEALTHLP_H
#define STEALTHLP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlpStatus {
  SLP_STATUS_OK = 0,
  SLP_STATUS_NULL_POINTER = 1,
  SLP_STATUS_INVALID_ARGUMENT = 2,
  SLP_STATUS_DIMENSION = 3,
  SLP_STATUS_STABILITY = 4,
  SLP_STATUS_NUMERICAL = 5,
  SLP_STATUS_PARSE = 6,
  SLP_STATUS_BUFFER_TOO_SMALL = 7,
  SLP_STATUS_PANIC = 8,
} SlpStatus;

typedef enum SlpLpStatus {
  SLP_LP_STATUS_OPTIMAL = 0,
  SLP_LP_STATUS_INFEASIBLE = 1,
  SLP_LP_STATUS_UNBOUNDED = 2,
} SlpLpStatus;

typedef enum SlpVerdict {
  SLP_VERDICT_SAFE = 0,
  SLP_VERDICT_UNBOUNDED_ATTACK_EXISTS = 2,
  SLP_VERDICT_MARGINAL = 3,
} SlpVerdict;

typedef enum SlpAttackStatus {
  SLP_ATTACK_STATUS_BOUNDED = 0,
  SLP_ATTACK_STATUS_UNBOUNDED_ATTACK = 1,
} SlpAttackStatus;

typedef struct SlpAttackProblem SlpAttackProblem;

typedef struct SlpAttackSolution SlpAttackSolution;

/**
 * A closed loop read from a system document.
 */
typedef struct SlpSystem SlpSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or null. Valid until the next call.
 */
const char *slp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *slp_version(void);

/**
 * Maximize `c'x` subject to `A x <= b` and `lower <= x <= upper`.
 *
 * `a` is `m x n` row-major. Infinite bounds are allowed. On `Optimal`, `x`
 * (length `n`) and `value` are written; otherwise `value` receives `+inf`
 * for unbounded and NaN for infeasible and `x` is untouched.
 *
 * # Safety
 * All array pointers must be valid for the stated lengths.
 */
enum SlpStatus slp_lp_solve(size_t n,
                            const double *c,
                            size_t m,
                            const double *a,
                            const double *b,
                            const double *lower,
                            const double *upper,
                            double *x,
                            double *value,
                            enum SlpLpStatus *status);

/**
 * Actuator-channel verdict for `P = num/den`, coefficients in descending powers of `z`.
 *
 * # Safety
 * `num` and `den` must be valid for their lengths; `verdict` must be writable.
 */
enum SlpStatus slp_actuator_verdict(const double *num,
                                    size_t num_len,
                                    const double *den,
                                    size_t den_len,
                                    double tol,
                                    enum SlpVerdict *verdict);

/**
 * Sensor-channel verdict for `P = num/den`.
 *
 * # Safety
 * As for [`slp_actuator_verdict`].
 */
enum SlpStatus slp_sensor_verdict(const double *num,
                                  size_t num_len,
                                  const double *den,
                                  size_t den_len,
                                  double tol,
                                  enum SlpVerdict *verdict);

/**
 * Parse a system document (NUL-terminated JSON) and close its loop.
 * A missing controller is an error unless `open_loop` is nonzero.
 *
 * # Safety
 * `json` must be a valid C string; `system` must be writable.
 */
enum SlpStatus slp_system_from_json(const char *json, int32_t open_loop, struct SlpSystem **system);

/**
 * # Safety
 * `system` must come from [`slp_system_from_json`] or be null.
 */
void slp_system_free(struct SlpSystem *system);

/**
 * Attack problem on a closed loop with explicit windows.
 *
 * # Safety
 * `system` must be a live handle, `theta` valid for `theta_len`, and
 * `problem` writable.
 */
enum SlpStatus slp_attack_problem_from_system(const struct SlpSystem *system,
                                              uint32_t scenario_number,
                                              size_t t_a,
                                              size_t t_zd,
                                              size_t t_psi_d,
                                              const double *theta,
                                              size_t theta_len,
                                              double alpha,
                                              struct SlpAttackProblem **problem);

/**
 * Attack problem from Markov parameters.
 *
 * `phi_zd` holds `horizon + 1` samples of `p_z x m_d`, `phi_psi_d` the same
 * count of `q x m_d`, each sample row-major.
 *
 * # Safety
 * Arrays must be valid for the stated sizes and `problem` writable.
 */
enum SlpStatus slp_attack_problem_from_markov(size_t m_d,
                                              size_t p_z,
                                              size_t q,
                                              size_t horizon,
                                              const double *phi_zd,
                                              const double *phi_psi_d,
                                              uint32_t scenario_number,
                                              size_t t_a,
                                              size_t t_zd,
                                              size_t t_psi_d,
                                              const double *theta,
                                              size_t theta_len,
                                              double alpha,
                                              struct SlpAttackProblem **problem);

/**
 * # Safety
 * `problem` must come from an `slp_attack_problem_*` constructor or be null.
 */
void slp_attack_problem_free(struct SlpAttackProblem *problem);

/**
 * Solve with `jobs` worker threads (0 means 1).
 *
 * # Safety
 * `problem` must be a live handle and `solution` writable.
 */
enum SlpStatus slp_attack_solve(const struct SlpAttackProblem *problem,
                                size_t jobs,
                                struct SlpAttackSolution **solution);

/**
 * # Safety
 * `solution` must come from [`slp_attack_solve`] or be null.
 */
void slp_attack_solution_free(struct SlpAttackSolution *solution);

/**
 * Worst-case impact; `+inf` for an unbounded attack, NaN for a null handle.
 *
 * # Safety
 * `solution` must be a live handle or null.
 */
double slp_attack_solution_mu(const struct SlpAttackSolution *solution);

/**
 * Status, critical row and critical component of a solution.
 *
 * # Safety
 * `solution` must be a live handle; the out pointers must be writable.
 */
enum SlpStatus slp_attack_solution_summary(const struct SlpAttackSolution *solution,
                                           enum SlpAttackStatus *status,
                                           size_t *n_star,
                                           size_t *component);

/**
 * Copy the worst attack into `buf` as `len x width` samples, sample-major.
 *
 * `*written` always receives the required length; a short buffer returns
 * `BufferTooSmall` without writing, so a null `buf` with `cap = 0` queries
 * the size.
 *
 * # Safety
 * `solution` must be a live handle, `buf` valid for `cap` doubles, and
 * `written` and `width` writable.
 */
enum SlpStatus slp_attack_solution_d_hat(const struct SlpAttackSolution *solution,
                                         double *buf,
                                         size_t cap,
                                         size_t *written,
                                         size_t *width);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STEALTHLP_H */
