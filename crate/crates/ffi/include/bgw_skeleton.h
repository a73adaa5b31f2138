/* C interface to the bgw-skeleton branching-process toolkit.
* Generated by cbindgen; do not edit by hand. */

#ifndef BGW_SKELETON_H
#define BGW_SKELETON_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum bgwsk_status {
  BGWSK_OK = 0,
  /**
   * A scalar argument was outside its domain.
   */
  BGWSK_INVALID_ARGUMENT = 1,
  /**
   * The model (pmf or marking table) failed validation.
   */
  BGWSK_INVALID_MODEL = 2,
  /**
   * mu = 0 and epsilon = 0: no regime.
   */
  BGWSK_DEGENERATE_REGIME = 3,
  /**
   * Conditioning on a null event (survival probability is zero).
   */
  BGWSK_NULL_CONDITIONING = 4,
  /**
   * A numerical routine failed to converge.
   */
  BGWSK_NUMERICAL = 5,
  /**
   * A required pointer was null.
   */
  BGWSK_NULL_POINTER = 6,
  /**
   * The JSON document could not be parsed.
   */
  BGWSK_PARSE_ERROR = 7,
} bgwsk_status;

/**
 * Opaque escape-time law handle.
 */
typedef struct bgwsk_escape_law bgwsk_escape_law;

/**
 * Opaque marked offspring model: a finite-support law plus marking rule.
 */
typedef struct bgwsk_model bgwsk_model;

/**
 * Regime classification result. `regime` is 0 for the supercritical
 * pure-birth limit, 1 for the balanced binary birth-death limit, 2 for the
 * subcritical single-lineage limit.
 */
typedef struct bgwsk_regime_report {
  double c;
  int32_t regime;
  double lambda;
  double tau;
  double q_asymptotic;
  bool via_threshold;
} bgwsk_regime_report;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *bgwsk_status_message(enum bgwsk_status status);

/**
 * Parses a model from a JSON document
 * `{ "pmf": [...], "marking": { "kind": ... } }` (see
 * `schemas/model.schema.json`). On success stores a handle in `out`; free
 * it with `bgwsk_model_free`.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum bgwsk_status bgwsk_model_from_json(const char *json, struct bgwsk_model **out);

/**
 * Builds the binary law with mean `1 + epsilon` and constant marking
 * probability. Free with `bgwsk_model_free`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum bgwsk_status bgwsk_model_binary_marked(double epsilon,
                                            double marking,
                                            struct bgwsk_model **out);

/**
 * Releases a model handle. Null is accepted.
 *
 * # Safety
 * `model` must have come from a `bgwsk_model_*` constructor and not have
 * been freed already.
 */
void bgwsk_model_free(struct bgwsk_model *model);

/**
 * Exact skeleton survival probability `Q` solving `Q = 1 - f(0, 1 - Q)`.
 * With `include_surviving_lineages` false, the skeleton consists of marked
 * lineages only.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum bgwsk_status bgwsk_model_survival(const struct bgwsk_model *model,
                                       bool include_surviving_lineages,
                                       double *out);

/**
 * Joint probability generating function `f(r, s)` of (mark, offspring).
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum bgwsk_status bgwsk_model_joint_pgf(const struct bgwsk_model *model,
                                        double r,
                                        double s,
                                        double *out);

/**
 * Cached model moments: drift `epsilon = mean - 1`, marking probability
 * `mu`, marked mean `M`, second factorial moment `sigma2`. Any output
 * pointer may be null to skip that value.
 *
 * # Safety
 * `model` must be a valid pointer; non-null outputs must be writable.
 */
enum bgwsk_status bgwsk_model_moments(const struct bgwsk_model *model,
                                      double *epsilon,
                                      double *mu,
                                      double *marked_mean,
                                      double *sigma2);

/**
 * Classifies the model's asymptotic regime. `c_threshold <= 0` selects the
 * default threshold 50.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum bgwsk_status bgwsk_model_regime(const struct bgwsk_model *model,
                                     double c_threshold,
                                     struct bgwsk_regime_report *out);

/**
 * Monte Carlo estimate of the skeleton survival probability:
 * `replicas` trees on counter-indexed streams of `seed`, horizon
 * `horizon` generations (0 selects `ceil(10 / tau)` from the regime).
 * Writes the estimate and its binomial standard error.
 *
 * # Safety
 * `model`, `estimate` and `se` must be valid pointers.
 */
enum bgwsk_status bgwsk_model_survival_mc(const struct bgwsk_model *model,
                                          uint32_t horizon,
                                          uint64_t replicas,
                                          uint64_t seed,
                                          double *estimate,
                                          double *se);

/**
 * Creates an escape-time law handle for balance constant `c` and variance
 * `sigma2`. Free with `bgwsk_escape_law_free`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum bgwsk_status bgwsk_escape_law_new(double c, double sigma2, struct bgwsk_escape_law **out);

/**
 * Releases an escape-law handle. Null is accepted.
 *
 * # Safety
 * `law` must have come from `bgwsk_escape_law_new` and not have been freed.
 */
void bgwsk_escape_law_free(struct bgwsk_escape_law *law);

/**
 * Tail `Q(t) = 1 / (lambda + (1 - lambda) e^t)` on the kappa-scaled clock.
 *
 * # Safety
 * `law` and `out` must be valid pointers.
 */
enum bgwsk_status bgwsk_escape_tail(const struct bgwsk_escape_law *law, double t, double *out);

/**
 * Escape-time density on the sqrt(mu)-scaled clock.
 *
 * # Safety
 * `law` and `out` must be valid pointers.
 */
enum bgwsk_status bgwsk_escape_density(const struct bgwsk_escape_law *law, double t, double *out);

/**
 * Density mode on the sqrt(mu)-scaled clock (0 for `c <= 0`); NaN on a
 * null handle.
 *
 * # Safety
 * `law` must be a valid pointer or null.
 */
double bgwsk_escape_mode(const struct bgwsk_escape_law *law);

/**
 * Split probability `lambda = 1/2 + c/(2 kappa)` of the limit skeleton;
 * NaN on a null handle.
 *
 * # Safety
 * `law` must be a valid pointer or null.
 */
double bgwsk_escape_lambda(const struct bgwsk_escape_law *law);

/**
 * Fills `out[0..len]` with the leaf-count law `P(W = 1), ..., P(W = len)`
 * of the critical limit skeleton.
 *
 * # Safety
 * `out` must point to at least `len` writable doubles.
 */
enum bgwsk_status bgwsk_leaf_count_pmf(double *out, uintptr_t len);

/**
 * Eventual extinction probability `min(1, (1 - lambda)/lambda)` of the
 * binary birth-death limit process.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum bgwsk_status bgwsk_extinction_probability(double lambda, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BGW_SKELETON_H */
