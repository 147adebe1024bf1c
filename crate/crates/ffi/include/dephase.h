#ifndef DEPHASE_H
#define DEPHASE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DphStatus {
  DPH_STATUS_OK = 0,
  DPH_STATUS_NULL_POINTER = 1,
  DPH_STATUS_INVALID_ARGUMENT = 2,
  DPH_STATUS_NUMERICAL = 3,
  DPH_STATUS_BUFFER_TOO_SMALL = 4,
  DPH_STATUS_INVALID_UTF8 = 5,
  DPH_STATUS_PANIC = 6,
} DphStatus;

/**
 * Opaque probe handle.
 */
typedef struct DphProbe DphProbe;

typedef struct DphQfi {
  double f_theta;
  /**
   * `+inf` when the diffusion information diverges (pure state).
   */
  double f_delta;
  /**
   * `Im Tr(ρ L_θ L_Δ)`.
   */
  double cross_im;
} DphQfi;

typedef struct DphPrediction {
  double inv_f_theta;
  double inv_f_delta;
  double mass;
  double gradient_integral;
  /**
   * Nonzero when the mass is above the validity threshold.
   */
  int32_t valid;
} DphPrediction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *dph_last_error_message(void);

/**
 * Builds a named probe (`cosine`, `noon`, `flat`, `gaussian:<w>`,
 * `coherent`, `holland-burnett`) with `twice_j + 1` amplitudes.
 *
 * # Safety
 * `label` must be a NUL-terminated string; `out` must be writable.
 */
enum DphStatus dph_probe_new(const char *label, uint32_t twice_j, struct DphProbe **out);

/**
 * Builds a probe from `len = twice_j + 1` real amplitudes in ascending `m`.
 * The profile is normalized.
 *
 * # Safety
 * `amplitudes` must point to `len` doubles; `out` must be writable.
 */
enum DphStatus dph_probe_from_amplitudes(const double *amplitudes,
                                         size_t len,
                                         struct DphProbe **out);

/**
 * Releases a probe. Null is ignored.
 *
 * # Safety
 * `probe` must come from this library and not be used afterwards.
 */
void dph_probe_free(struct DphProbe *probe);

/**
 * Number of amplitudes (`2j + 1`).
 *
 * # Safety
 * `probe` must be a live handle; `out` must be writable.
 */
enum DphStatus dph_probe_len(const struct DphProbe *probe, size_t *out);

/**
 * Copies the amplitudes into `buf`. Fails with `DPH_STATUS_BUFFER_TOO_SMALL`
 * when `capacity` is short.
 *
 * # Safety
 * `buf` must have room for `capacity` doubles.
 */
enum DphStatus dph_probe_amplitudes(const struct DphProbe *probe, double *buf, size_t capacity);

/**
 * Exact phase and diffusion QFI and the compatibility term.
 *
 * # Safety
 * `probe` must be a live handle; `out` must be writable.
 */
enum DphStatus dph_qfi(const struct DphProbe *probe,
                       double delta,
                       double theta,
                       struct DphQfi *out);

/**
 * Large-`j` continuum predictions.
 *
 * # Safety
 * `probe` must be a live handle; `out` must be writable.
 */
enum DphStatus dph_predict(const struct DphProbe *probe, double delta, struct DphPrediction *out);

/**
 * Optimal symmetric probe for the phase QFI. `value` may be null.
 *
 * # Safety
 * `out` must be writable; `value`, if non-null, too.
 */
enum DphStatus dph_optimize(uint32_t twice_j, double delta, double *value, struct DphProbe **out);

/**
 * Dephasing rate at which clusters of `n_small` and `n_large` particles
 * give the same QFI per particle.
 *
 * # Safety
 * `out` must be writable.
 */
enum DphStatus dph_crossover(uint32_t n_small, uint32_t n_large, double *out);

/**
 * Full QFI report as a JSON string; release it with [`dph_string_free`].
 *
 * # Safety
 * `probe` must be a live handle; `out` must be writable.
 */
enum DphStatus dph_qfi_report_json(const struct DphProbe *probe,
                                   double delta,
                                   double theta,
                                   char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void dph_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEPHASE_H */
