#ifndef PSICV_H
#define PSICV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PsicvStatus {
  PSICV_STATUS_OK = 0,
  PSICV_STATUS_INVALID_ARGUMENT = 1,
  PSICV_STATUS_DEGENERATE_SAMPLE = 2,
  PSICV_STATUS_UNSUPPORTED_ORDER = 3,
  PSICV_STATUS_NUMERIC_FAILURE = 4,
  PSICV_STATUS_NOT_BRACKETED = 5,
  PSICV_STATUS_IO = 6,
  PSICV_STATUS_PARSE = 7,
  PSICV_STATUS_NULL_POINTER = 8,
  PSICV_STATUS_PANIC = 9,
} PsicvStatus;

// Opaque normal-mixture density.
typedef struct PsicvMixture PsicvMixture;

// Opaque sample of real observations.
typedef struct PsicvSample PsicvSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
const char *psicv_last_error(void);

// Copies `len` values into a new sample. At least two finite values are required.
//
// # Safety
// `values` must point to `len` readable doubles; `out` must be writable.
enum PsicvStatus psicv_sample_new(const double *values, size_t len, struct PsicvSample **out);

// # Safety
// `s` must come from this library and not be freed twice. Null is ignored.
void psicv_sample_free(struct PsicvSample *s);

// # Safety
// `s` must be a live sample handle.
size_t psicv_sample_len(const struct PsicvSample *s);

// Catalog density `id` in 1..=16.
//
// # Safety
// `out` must be writable.
enum PsicvStatus psicv_mixture_catalog(uint32_t id, struct PsicvMixture **out);

// Mixture from `k` (weight, mean, sd) triples stored in three arrays.
//
// # Safety
// Each array must hold `k` doubles; `out` must be writable.
enum PsicvStatus psicv_mixture_new(const double *weights,
                                   const double *means,
                                   const double *sds,
                                   size_t k,
                                   struct PsicvMixture **out);

// # Safety
// `m` must come from this library and not be freed twice. Null is ignored.
void psicv_mixture_free(struct PsicvMixture *m);

// ∫f² in closed form.
//
// # Safety
// `m` must be a live handle; `out` writable.
enum PsicvStatus psicv_mixture_psi(const struct PsicvMixture *m, double *out);

// Density-estimation difficulty Q(f).
//
// # Safety
// `m` must be a live handle; `out` writable.
enum PsicvStatus psicv_mixture_difficulty(const struct PsicvMixture *m, double *out);

// Draws `n` observations with a seeded generator.
//
// # Safety
// `m` must be a live handle; `out` writable.
enum PsicvStatus psicv_mixture_sample(const struct PsicvMixture *m,
                                      size_t n,
                                      uint64_t seed,
                                      struct PsicvSample **out);

// Exact bias, variance and MSE of the no-diagonals estimator, and the kde MISE, at bandwidth g.
// Any output pointer may be null.
//
// # Safety
// `m` must be a live handle.
enum PsicvStatus psicv_exact_error(const struct PsicvMixture *m,
                                   size_t n,
                                   double g,
                                   double *bias,
                                   double *variance,
                                   double *mse,
                                   double *mise);

// CV(g) for one bandwidth.
//
// # Safety
// `s` must be a live handle; `out` writable.
enum PsicvStatus psicv_cv(const struct PsicvSample *s, double g, double *out);

// ψ̂ = −min_g CV(g). `g_cv` may be null.
//
// # Safety
// `s` must be a live handle; `estimate` writable.
enum PsicvStatus psicv_psi_hat(const struct PsicvSample *s, double *estimate, double *g_cv);

// Two-stage direct plug-in estimate; `g` (final bandwidth) may be null.
//
// # Safety
// `s` must be a live handle; `estimate` writable.
enum PsicvStatus psicv_psi_js(const struct PsicvSample *s, double *estimate, double *g);

// Solve-the-equation plug-in estimate; `g` may be null. `fallback` (may be
// null) is set to 1 when the rule fell back to the direct plug-in bandwidth.
//
// # Safety
// `s` must be a live handle; `estimate` writable.
enum PsicvStatus psicv_psi_shd(const struct PsicvSample *s,
                               double *estimate,
                               double *g,
                               int32_t *fallback);

// Smoothed cross-validation kernel bandwidth.
//
// # Safety
// `s` must be a live handle; `h` writable.
enum PsicvStatus psicv_h_hat(const struct PsicvSample *s, double *h);

// Histogram binwidth: `smoothed` = 0 for plain CV, 1 for smoothed CV.
//
// # Safety
// `s` must be a live handle; `b` writable.
enum PsicvStatus psicv_hist_binwidth(const struct PsicvSample *s, int32_t smoothed, double *b);

// Differential entropy by likelihood cross-validation.
//
// # Safety
// `s` must be a live handle; `estimate` writable.
enum PsicvStatus psicv_entropy_hat(const struct PsicvSample *s, double *estimate);

// θ̂_r = −min_g CV_r(g) for r ∈ {1, 2}.
//
// # Safety
// `s` must be a live handle; `estimate` writable.
enum PsicvStatus psicv_theta_hat(const struct PsicvSample *s, uint32_t r, double *estimate);

// ψ̂ for angles in [0, 2π) with the von Mises kernel.
//
// # Safety
// `angles` must point to `len` doubles; `estimate` writable.
enum PsicvStatus psicv_circular_psi_hat(const double *angles, size_t len, double *estimate);

// Library version as a static string.
const char *psicv_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PSICV_H */
