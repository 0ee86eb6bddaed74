#ifndef LRB_H
#define LRB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes shared by every function.
typedef enum LrbStatus {
  LRB_STATUS_OK = 0,
  // Null pointer, invalid UTF-8, short buffer or malformed configuration.
  LRB_STATUS_INVALID_ARGUMENT = 1,
  // Argument outside the domain, or terminal law inconsistent with the family.
  LRB_STATUS_DOMAIN = 2,
  LRB_STATUS_UNSUPPORTED = 3,
  // A series, quadrature or sampler missed its tolerance.
  LRB_STATUS_NUMERIC = 4,
  // A Rust panic was caught at the boundary.
  LRB_STATUS_PANIC = 5,
} LrbStatus;

// Opaque model handle.
typedef struct LrbModel LrbModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *lrb_version(void);

// Message for the last failed call on this thread, or null. Valid until
// the next call into the library from the same thread.
const char *lrb_last_error(void);

// Frees a string returned through an out-pointer. Null is ignored.
//
// # Safety
// `s` must come from this library and must not be freed twice.
void lrb_string_free(char *s);

// Builds a model from a JSON configuration.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum LrbStatus lrb_model_from_json(const char *json, struct LrbModel **out);

// Releases a model. Null is ignored.
//
// # Safety
// `m` must come from [`lrb_model_from_json`] and must not be used afterwards.
void lrb_model_free(struct LrbModel *m);

// Horizon `T` of the model.
//
// # Safety
// `m` must be a live handle and `out` writable.
enum LrbStatus lrb_model_horizon(const struct LrbModel *m, double *out);

// `psi_t(xi)`, the likelihood ratio of the bridge against the Lévy process.
//
// # Safety
// `m` must be a live handle and `out` writable.
enum LrbStatus lrb_model_psi(const struct LrbModel *m, double t, double xi, double *out);

// Density of `xi_t` at `y` given `xi_s = x`.
//
// # Safety
// `m` must be a live handle and `out` writable.
enum LrbStatus lrb_model_transition_density(const struct LrbModel *m,
                                            double s,
                                            double x,
                                            double t,
                                            double y,
                                            double *out);

// Density of `xi_t` at `y` from the origin.
//
// # Safety
// `m` must be a live handle and `out` writable.
enum LrbStatus lrb_model_marginal_density(const struct LrbModel *m,
                                          double t,
                                          double y,
                                          double *out);

// `E[xi_T | xi_s = xi]`.
//
// # Safety
// `m` must be a live handle and `out` writable.
enum LrbStatus lrb_model_terminal_mean(const struct LrbModel *m, double s, double xi, double *out);

// Samples `n_paths` paths on `grid` into `values`, row-major with one row per
// path. Path `i` uses stream `i` of `seed`, so output matches `lrb simulate`.
//
// # Safety
// `grid` must hold `n_grid` values and `values` room for `n_paths * n_grid`.
enum LrbStatus lrb_model_sample_paths(const struct LrbModel *m,
                                      const double *grid,
                                      size_t n_grid,
                                      size_t n_paths,
                                      uint64_t seed,
                                      double *values,
                                      size_t values_len);

// Prices the configured instrument; the result is the JSON document that
// `lrb price` prints.
//
// # Safety
// `m` must be a live handle and `out` writable. Free the string with
// [`lrb_string_free`].
enum LrbStatus lrb_model_price_json(const struct LrbModel *m, uint64_t seed, char **out);

// Reserve report for a paid-claims history of `n` points `(times[i], paid[i])`;
// `n` may be zero. The result is the JSON document that `lrb reserve` prints.
//
// # Safety
// `times` and `paid` must hold `n` values and `out` be writable.
enum LrbStatus lrb_model_reserve_json(const struct LrbModel *m,
                                      const double *times,
                                      const double *paid,
                                      size_t n,
                                      char **out);

// CDF of the stable-1/2 bridge from 0 to `z` over `[0, horizon]`, at time `t`.
//
// # Safety
// `out` must be writable.
enum LrbStatus lrb_stable_half_bridge_cdf(double t,
                                          double horizon,
                                          double y,
                                          double z,
                                          double c,
                                          double *out);

// Density of the Cauchy bridge from 0 to `z` over `[0, horizon]`, at time `t`.
//
// # Safety
// `out` must be writable.
enum LrbStatus lrb_cauchy_bridge_density(double t,
                                         double horizon,
                                         double y,
                                         double z,
                                         double c,
                                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LRB_H */
