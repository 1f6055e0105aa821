#ifndef TBFID_H
#define TBFID_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every function.
 */
typedef enum TbfidStatus {
  TBFID_STATUS_OK = 0,
  TBFID_STATUS_VALIDATION = 1,
  TBFID_STATUS_NUMERICAL = 2,
  TBFID_STATUS_POSTSELECTION = 3,
  TBFID_STATUS_CAPACITY = 4,
  TBFID_STATUS_MAPPING = 5,
  TBFID_STATUS_NULL_POINTER = 6,
  TBFID_STATUS_PANIC = 7,
} TbfidStatus;

typedef enum TbfidTarget {
  TBFID_TARGET_GHZ = 0,
  TBFID_TARGET_CLUSTER = 1,
} TbfidTarget;

/**
 * Opaque parameter set built from a JSON parameter object.
 */
typedef struct TbfidParams TbfidParams;

/**
 * Unconditional fidelity, success probability and their ratio.
 */
typedef struct TbfidFidelity {
  double unconditional;
  double success;
  double conditional;
} TbfidFidelity;

/**
 * Combined fidelity and its channel factors.
 */
typedef struct TbfidCombined {
  double phonon;
  double excitation;
  double branching;
  double product;
} TbfidCombined;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failing call on this thread, or null.
 */
const char *tbfid_last_error(void);

/**
 * Parses a JSON parameter object. Free the result with `tbfid_params_free`.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out_params` writable.
 */
enum TbfidStatus tbfid_params_from_json(const char *json, struct TbfidParams **out_params);

/**
 * # Safety
 * `p` must come from `tbfid_params_from_json` and not be freed twice.
 */
void tbfid_params_free(struct TbfidParams *p);

/**
 * Exact pure-dephasing fidelity for rates in 1/ns.
 *
 * # Safety
 * `out_value` must be writable.
 */
enum TbfidStatus tbfid_phonon_fidelity(double gamma,
                                       double gamma_d,
                                       enum TbfidTarget target,
                                       size_t n,
                                       double *out_value);

/**
 * Exact branching fidelity of the parameter set.
 *
 * # Safety
 * `p` must be a live handle and `out_value` writable.
 */
enum TbfidStatus tbfid_branching_fidelity(const struct TbfidParams *p,
                                          enum TbfidTarget target,
                                          size_t n,
                                          struct TbfidFidelity *out_value);

/**
 * Conditional excitation fidelity for a Gaussian pulse of width `t_fwhm` ns.
 * `grid` is the number of solver steps; 0 selects the default.
 *
 * # Safety
 * `p` must be a live handle and `out_value` writable.
 */
enum TbfidStatus tbfid_excitation_fidelity(const struct TbfidParams *p,
                                           double t_fwhm,
                                           enum TbfidTarget target,
                                           size_t n,
                                           size_t grid,
                                           double *out_value);

/**
 * Product of phonon, excitation and branching fidelities.
 *
 * # Safety
 * `p` must be a live handle and `out_value` writable.
 */
enum TbfidStatus tbfid_combined_fidelity(const struct TbfidParams *p,
                                         double t_fwhm,
                                         enum TbfidTarget target,
                                         size_t n,
                                         size_t grid,
                                         struct TbfidCombined *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TBFID_H */
