#ifndef IPSIM_H
#define IPSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a C API call.
 */
typedef enum {
  IpsimStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  IpsimStatus_NullArgument = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  IpsimStatus_InvalidUtf8 = 2,
  /**
   * The configuration document failed to parse or validate.
   */
  IpsimStatus_InvalidConfig = 3,
  /**
   * The handle is not in the right state (e.g. stats before run).
   */
  IpsimStatus_InvalidState = 4,
  /**
   * The simulation failed at runtime.
   */
  IpsimStatus_RuntimeError = 5,
} IpsimStatus;

/**
 * Opaque simulation handle.
 */
typedef struct IpsimSim IpsimSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ipsim_version(void);

/**
 * Message for the last error on this thread, or null if none occurred.
 */
const char *ipsim_last_error_message(void);

/**
 * Create a simulation from a JSON run configuration.
 *
 * On success writes a handle to `out_sim`; release it with
 * [`ipsim_sim_free`].
 *
 * # Safety
 * `config_json` must be a valid NUL-terminated string and `out_sim` a
 * valid pointer.
 */
IpsimStatus ipsim_sim_new(const char *config_json, IpsimSim **out_sim);

/**
 * Execute the simulation to completion. Running again replaces the stats
 * with a fresh, identical run.
 *
 * # Safety
 * `sim` must be a live handle from [`ipsim_sim_new`].
 */
IpsimStatus ipsim_sim_run(IpsimSim *sim);

/**
 * Serialize the completed run's statistics as JSON.
 *
 * # Safety
 * `sim` must be a live handle; `out_json` must be valid. The returned
 * string is freed with [`ipsim_string_free`].
 */
IpsimStatus ipsim_sim_stats_json(const IpsimSim *sim, char **out_json);

/**
 * Fraction of adversary allocations returning a never-seen IP; NaN when
 * the scenario had no adversary allocations.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be valid.
 */
IpsimStatus ipsim_sim_unique_ip_yield(const IpsimSim *sim, double *out);

/**
 * Fraction of adversary allocations returning a never-seen IP with live
 * latent configuration; NaN when the scenario had no adversary.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be valid.
 */
IpsimStatus ipsim_sim_lc_yield(const IpsimSim *sim, double *out);

/**
 * Maximum pool allocation ratio observed over the run.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be valid.
 */
IpsimStatus ipsim_sim_ar_max(const IpsimSim *sim, double *out);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must have come from this library and not have been freed already.
 */
void ipsim_string_free(char *s);

/**
 * Release a simulation handle.
 *
 * # Safety
 * `sim` must have come from [`ipsim_sim_new`] and not have been freed
 * already.
 */
void ipsim_sim_free(IpsimSim *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IPSIM_H */
