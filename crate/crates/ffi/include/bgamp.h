#ifndef BGAMP_H
#define BGAMP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BgampFeedback {
  BGAMP_FEEDBACK_OPEN_LOOP = 0,
  BGAMP_FEEDBACK_BACK_GATE = 1,
} BgampFeedback;

typedef enum BgampKind {
  BGAMP_KIND_CCS_OL = 0,
  BGAMP_KIND_CCS_BG = 1,
  BGAMP_KIND_DIFF_SCMFB = 2,
  BGAMP_KIND_DIFF_DCMFB = 3,
} BgampKind;

typedef enum BgampPolarity {
  BGAMP_POLARITY_N = 0,
  BGAMP_POLARITY_P = 1,
} BgampPolarity;

typedef enum BgampStatus {
  BGAMP_STATUS_OK = 0,
  BGAMP_STATUS_NULL_POINTER = 1,
  BGAMP_STATUS_INVALID_UTF8 = 2,
  BGAMP_STATUS_DOMAIN = 3,
  BGAMP_STATUS_UNBOUNDED = 4,
  BGAMP_STATUS_SYNTAX = 5,
  BGAMP_STATUS_TOPOLOGY = 6,
  BGAMP_STATUS_CONVERGENCE = 7,
  BGAMP_STATUS_SINGULAR = 8,
  BGAMP_STATUS_FIT = 9,
  BGAMP_STATUS_BIAS_MATCH = 10,
  BGAMP_STATUS_IO = 11,
  BGAMP_STATUS_PANIC = 12,
} BgampStatus;

typedef struct BgampCircuit BgampCircuit;

typedef struct BgampOperatingPoint BgampOperatingPoint;

/**
 * Model card plus geometry. Lengths and widths in um.
 */
typedef struct BgampDeviceParams {
  enum BgampPolarity polarity;
  double vt0;
  double kprime;
  double n_slope;
  double lambda0;
  double vclm;
  double chi_mag;
  double gamma_noise;
  double k_flicker;
  double cox_area;
  double dvt;
  double width;
  double length;
} BgampDeviceParams;

/**
 * Normalized Taylor coefficients, `coeffs[p][q][r]` for
 * d^(p+q+r) I / dv_gs^p dv_ds^q dv_bs^r / (p! q! r!), total order <= 3.
 * `coeffs[0][0][0]` is the drain current.
 */
typedef struct BgampDerivatives {
  double coeffs[4][4][4];
} BgampDerivatives;

typedef struct BgampGain {
  /**
   * Differential (single-ended for CCS) gain from the nodal network.
   */
  double a_dm;
  double a_dm_closed;
  /**
   * Common-mode gain; NaN for complementary stages.
   */
  double a_cm;
  double a_cm_closed;
  /**
   * Back-gate loop gain (sum g_mb)(r_o par).
   */
  double loop_gain;
} BgampGain;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`) and returns the full length including
 * the terminator. Pass a null `buf` to query the length.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t bgamp_last_error(char *buf, size_t len);

/**
 * Default card of the given polarity at channel length `length` (um).
 *
 * # Safety
 * `out` must be null or point to writable memory for one struct.
 */
enum BgampStatus bgamp_default_device(enum BgampPolarity polarity,
                                      double length,
                                      struct BgampDeviceParams *out);

/**
 * Drain-to-source current (A) at the given terminal voltages.
 *
 * # Safety
 * `params` and `out` must be null or valid.
 */
enum BgampStatus bgamp_drain_current(const struct BgampDeviceParams *params,
                                     double vgs,
                                     double vds,
                                     double vbs,
                                     double *out);

/**
 * Taylor coefficients of the drain current up to third order.
 *
 * # Safety
 * `params` and `out` must be null or valid.
 */
enum BgampStatus bgamp_derivatives(const struct BgampDeviceParams *params,
                                   double vgs,
                                   double vds,
                                   double vbs,
                                   struct BgampDerivatives *out);

/**
 * Parses netlist text into a circuit handle.
 *
 * # Safety
 * `text` must be null or a NUL-terminated string; `out` null or writable.
 */
enum BgampStatus bgamp_circuit_from_netlist(const char *text, struct BgampCircuit **out);

/**
 * Designs a template with the default cards at channel length `length`
 * (um) and g_m/I_D target `gm_over_id` (S/A).
 *
 * # Safety
 * `out` must be null or writable.
 */
enum BgampStatus bgamp_circuit_template(enum BgampKind kind,
                                        enum BgampFeedback feedback,
                                        double length,
                                        double gm_over_id,
                                        struct BgampCircuit **out);

/**
 * # Safety
 * `c` must be null or a handle from this library not yet freed.
 */
void bgamp_circuit_free(struct BgampCircuit *c);

/**
 * Solves the DC operating point.
 *
 * # Safety
 * `c` must be null or a live circuit handle; `out` null or writable.
 */
enum BgampStatus bgamp_solve_op(const struct BgampCircuit *c, struct BgampOperatingPoint **out);

/**
 * # Safety
 * `op` must be null or a handle from this library not yet freed.
 */
void bgamp_op_free(struct BgampOperatingPoint *op);

/**
 * Voltage of the named node at an operating point of `c`.
 *
 * # Safety
 * Handles must be live; `node` a NUL-terminated string; `out` writable.
 */
enum BgampStatus bgamp_op_voltage(const struct BgampCircuit *c,
                                  const struct BgampOperatingPoint *op,
                                  const char *node,
                                  double *out);

/**
 * Small-signal gains of a template circuit at `op`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum BgampStatus bgamp_gain(const struct BgampCircuit *c,
                            const struct BgampOperatingPoint *op,
                            struct BgampGain *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BGAMP_H */
