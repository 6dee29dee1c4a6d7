#ifndef PULSEPAIR_H
#define PULSEPAIR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible entry point.
enum PpStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  PP_STATUS_OK = 0,
  PP_STATUS_NULL_POINTER = 1,
  PP_STATUS_INVALID_ARGUMENT = 2,
  PP_STATUS_INVALID_STATE = 3,
  PP_STATUS_FULLY_BLOCKED = 4,
  PP_STATUS_DEGENERATE_SOURCE = 5,
  PP_STATUS_EPSILON_UNDEFINED = 6,
  PP_STATUS_UNDERDETERMINED_FIT = 7,
  PP_STATUS_DEGENERATE_FRINGE = 8,
  PP_STATUS_PANIC = 99,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum PpStatus PpStatus;
#else
typedef int32_t PpStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum PpBellKind
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  PP_BELL_KIND_PHI_PLUS = 0,
  PP_BELL_KIND_PHI_MINUS = 1,
  PP_BELL_KIND_PSI_PLUS = 2,
  PP_BELL_KIND_PSI_MINUS = 3,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum PpBellKind PpBellKind;
#else
typedef int32_t PpBellKind;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Opaque two-photon density matrix.
typedef struct PpState PpState;

typedef struct PpSourceConfig {
  double pump_angle;
  double gain_up;
  double gain_down;
  double relative_phase;
  double overlap_mu;
  double mean_pairs_per_pulse;
} PpSourceConfig;

typedef struct PpDetectorConfig {
  double efficiency1;
  double efficiency2;
  double background_prob1;
  double background_prob2;
} PpDetectorConfig;

typedef struct PpExpectedRates {
  double p_single1;
  double p_single2;
  double p_coinc;
  double p_accidental;
} PpExpectedRates;

typedef struct PpRunConfig {
  uint64_t n_pulses;
  uint64_t seed;
  uint32_t workers;
} PpRunConfig;

typedef struct PpCountRecord {
  uint64_t n_pulses;
  uint64_t singles1;
  uint64_t singles2;
  uint64_t coincidences;
  uint64_t accidentals;
} PpCountRecord;

typedef struct PpFringeFit {
  double offset;
  double amplitude;
  // Angle of the fringe maximum in `[0, π)`.
  double phase;
  double visibility;
  double rms_residual;
  double visibility_err;
  double phase_err;
} PpFringeFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *pp_version(void);

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length without the NUL, or
// 0 when there is no error.
//
// # Safety
// `buf` must be null or valid for `len` bytes of writes.
size_t pp_last_error_message(char *buf, size_t len);

// # Safety
// `out` must be valid for writes.
PpStatus pp_state_bell(PpBellKind kind, struct PpState **out);

// State emitted by the two-crystal source.
//
// # Safety
// `cfg` must be valid for reads and `out` for writes.
PpStatus pp_state_from_source(const struct PpSourceConfig *cfg, struct PpState **out);

// `cos²Θ |HH⟩⟨HH| + sin²Θ |VV⟩⟨VV|`
//
// # Safety
// `out` must be valid for writes.
PpStatus pp_state_mixed(double theta, struct PpState **out);

// Validates a row-major 4×4 matrix given as separate real and imaginary
// parts (16 doubles each, basis HH, HV, VH, VV).
//
// # Safety
// `re` and `im` must each point to 16 readable doubles; `out` must be valid
// for writes.
PpStatus pp_state_from_matrix(const double *re, const double *im, struct PpState **out);

// Releases a state handle. Null is ignored.
//
// # Safety
// `state` must be null or a handle from a `pp_state_*` constructor that has
// not been freed yet.
void pp_state_free(struct PpState *state);

// Copies the row-major matrix entries into `re` and `im` (16 doubles each).
//
// # Safety
// `state` must be a live handle; `re` and `im` must be valid for 16 writes.
PpStatus pp_state_entries(const struct PpState *state, double *re, double *im);

// # Safety
// `state` must be a live handle; `out` valid for writes.
PpStatus pp_state_concurrence(const struct PpState *state, double *out);

// # Safety
// `state` must be a live handle; `out` valid for writes.
PpStatus pp_state_purity(const struct PpState *state, double *out);

// # Safety
// `state` must be a live handle; `out` valid for writes.
PpStatus pp_coincidence_probability(const struct PpState *state,
                                    double theta1,
                                    double theta2,
                                    double *out);

// # Safety
// `state` must be a live handle; `out` valid for writes.
PpStatus pp_correlation_e(const struct PpState *state, double theta1, double theta2, double *out);

// # Safety
// `state` must be a live handle; `out` valid for writes.
PpStatus pp_chsh(const struct PpState *state,
                 double a,
                 double a_prime,
                 double b,
                 double b_prime,
                 double *out);

// Phase shifter then (if `has_plate`) a half-wave plate on arm 1 or 2.
// Writes a new handle to `out`.
//
// # Safety
// `state` must be a live handle; `out` valid for writes.
PpStatus pp_state_bell_transform(const struct PpState *state,
                                 bool has_plate,
                                 double hwp_angle,
                                 double shifter_phase,
                                 uint32_t arm,
                                 struct PpState **out);

// # Safety
// `state` and `det` must be valid for reads; `out` for writes.
PpStatus pp_expected_rates(const struct PpState *state,
                           double theta1,
                           double theta2,
                           double mean_pairs_per_pulse,
                           const struct PpDetectorConfig *det,
                           struct PpExpectedRates *out);

// Seeded Monte Carlo counting run; deterministic in the seed regardless of
// `run->workers`.
//
// # Safety
// `cfg`, `det`, `run` must be valid for reads; `out` for writes.
PpStatus pp_simulate_run(const struct PpSourceConfig *cfg,
                         double theta1,
                         double theta2,
                         const struct PpDetectorConfig *det,
                         const struct PpRunConfig *run,
                         struct PpCountRecord *out);

// Fits `c₀ + c₁cos2θ + c₂sin2θ` to `n` points. `accidentals` may be null
// (treated as zero).
//
// # Safety
// `theta1` and `coincidences` must hold `n` doubles; `accidentals` must be
// null or hold `n` doubles; `out` must be valid for writes.
PpStatus pp_fit_fringe(const double *theta1,
                       const double *coincidences,
                       const double *accidentals,
                       size_t n,
                       bool subtract_accidentals,
                       bool weighted,
                       struct PpFringeFit *out);

// `(r_max − r_min) / (r_max + r_min)`
//
// # Safety
// `out` must be valid for writes.
PpStatus pp_visibility(double r_max, double r_min, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PULSEPAIR_H */
