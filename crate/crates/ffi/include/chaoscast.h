#ifndef CHAOSCAST_H
#define CHAOSCAST_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum ChaoscastStatus {
  CHAOSCAST_STATUS_OK = 0,
  CHAOSCAST_STATUS_NULL_POINTER = 1,
  CHAOSCAST_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Blow-up, filter divergence or a failed linear solve.
   */
  CHAOSCAST_STATUS_NUMERICAL = 3,
  CHAOSCAST_STATUS_IO = 4,
  CHAOSCAST_STATUS_FORMAT = 5,
  CHAOSCAST_STATUS_PANIC = 6,
} ChaoscastStatus;

typedef enum ChaoscastFilterMethod {
  /**
   * Unscented Kalman filter, Gaussian observation noise.
   */
  CHAOSCAST_FILTER_METHOD_UKF = 0,
  /**
   * Particle filter, Laplace observation noise.
   */
  CHAOSCAST_FILTER_METHOD_PF = 1,
} ChaoscastFilterMethod;

/**
 * A running filter.
 */
typedef struct ChaoscastFilter ChaoscastFilter;

/**
 * A trained LS-SVM forecaster.
 */
typedef struct ChaoscastSvmModel ChaoscastSvmModel;

/**
 * A simulated trajectory with its noisy observations.
 */
typedef struct ChaoscastTrajectory ChaoscastTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *chaoscast_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *chaoscast_version(void);

/**
 * Simulates `n_states` states of a built-in system (`"DS1"` … `"DS6"`)
 * after burn-in and observes them with the system's noise.
 *
 * # Safety
 * `system` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ChaoscastStatus chaoscast_trajectory_generate(const char *system,
                                                   size_t n_states,
                                                   uint64_t seed,
                                                   struct ChaoscastTrajectory **out);

/**
 * Number of states; 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t chaoscast_trajectory_len(const struct ChaoscastTrajectory *traj);

/**
 * Copies the noiseless states into `out` (`capacity` doubles).
 *
 * # Safety
 * `traj` must be a live handle and `out` writable for `capacity` doubles.
 */
enum ChaoscastStatus chaoscast_trajectory_states(const struct ChaoscastTrajectory *traj,
                                                 double *out,
                                                 size_t capacity);

/**
 * Copies the noisy observations into `out` (`capacity` doubles).
 *
 * # Safety
 * `traj` must be a live handle and `out` writable for `capacity` doubles.
 */
enum ChaoscastStatus chaoscast_trajectory_observations(const struct ChaoscastTrajectory *traj,
                                                       double *out,
                                                       size_t capacity);

/**
 * # Safety
 * `traj` must be null or a handle not yet freed.
 */
void chaoscast_trajectory_free(struct ChaoscastTrajectory *traj);

/**
 * Selects `(M, λ, σ)` by cross validation on `n` observations and trains
 * a direct `horizon`-step forecaster. `max_embedding` 0 means the default.
 *
 * # Safety
 * `observations` must hold `3 * n` doubles and `out` be a valid pointer.
 */
enum ChaoscastStatus chaoscast_svm_train(const double *observations,
                                         size_t n,
                                         size_t horizon,
                                         size_t max_embedding,
                                         struct ChaoscastSvmModel **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ChaoscastStatus chaoscast_svm_load(const char *path, struct ChaoscastSvmModel **out);

/**
 * # Safety
 * `model` must be a live handle and `path` a NUL-terminated string.
 */
enum ChaoscastStatus chaoscast_svm_save(const struct ChaoscastSvmModel *model, const char *path);

/**
 * Embedding length of the model; 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t chaoscast_svm_embedding(const struct ChaoscastSvmModel *model);

/**
 * Forecast from the last `M` of `n` recent observations into `out[3]`.
 *
 * # Safety
 * `model` must be a live handle, `window` hold `3 * n` doubles and `out`
 * be writable for 3 doubles.
 */
enum ChaoscastStatus chaoscast_svm_predict(const struct ChaoscastSvmModel *model,
                                           const double *window,
                                           size_t n,
                                           double *out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void chaoscast_svm_free(struct ChaoscastSvmModel *model);

/**
 * Creates a filter with the default configuration. With `known_params`
 * (`sigma, b, r`) non-null the filter is state-only; otherwise it learns
 * the parameters by dual estimation. `particles` 0 means the default.
 *
 * # Safety
 * `known_params` must be null or hold 3 doubles; `out` must be valid.
 */
enum ChaoscastStatus chaoscast_filter_new(enum ChaoscastFilterMethod method,
                                          const double *known_params,
                                          double dt,
                                          size_t particles,
                                          uint64_t seed,
                                          struct ChaoscastFilter **out);

/**
 * Assimilates one observation `obs[3]`.
 *
 * # Safety
 * `filter` must be a live handle and `obs` hold 3 doubles.
 */
enum ChaoscastStatus chaoscast_filter_assimilate(struct ChaoscastFilter *filter, const double *obs);

/**
 * Number of observations assimilated; 0 for a null handle.
 *
 * # Safety
 * `filter` must be null or a live handle.
 */
size_t chaoscast_filter_steps(const struct ChaoscastFilter *filter);

/**
 * Writes the filtered state and parameter estimates; either output may
 * be null.
 *
 * # Safety
 * `filter` must be a live handle; non-null outputs must hold 3 doubles.
 */
enum ChaoscastStatus chaoscast_filter_estimate(const struct ChaoscastFilter *filter,
                                               double *state_out,
                                               double *params_out);

/**
 * Propagates the current estimate `steps` steps through the noiseless model.
 *
 * # Safety
 * `filter` must be a live handle and `out` hold 3 doubles.
 */
enum ChaoscastStatus chaoscast_filter_forecast(const struct ChaoscastFilter *filter,
                                               size_t steps,
                                               double *out);

/**
 * # Safety
 * `filter` must be null or a handle not yet freed.
 */
void chaoscast_filter_free(struct ChaoscastFilter *filter);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHAOSCAST_H */
