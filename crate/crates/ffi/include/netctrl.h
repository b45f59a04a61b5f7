#ifndef NETCTRL_H
#define NETCTRL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  NETCTRL_STATUS_OK = 0,
  NETCTRL_STATUS_NULL_POINTER = 1,
  NETCTRL_STATUS_INVALID_UTF8 = 2,
  NETCTRL_STATUS_PARSE = 3,
  NETCTRL_STATUS_INVALID_SYSTEM = 4,
  NETCTRL_STATUS_INVALID_ARGUMENT = 5,
  NETCTRL_STATUS_NUMERICAL = 6,
  NETCTRL_STATUS_PANIC = 7,
} NetctrlStatus;

typedef enum {
  NETCTRL_METHOD_THEOREM = 0,
  NETCTRL_METHOD_KALMAN = 1,
  NETCTRL_METHOD_PBH = 2,
  /**
   * All methods; the verdict is the agreed one, or not applicable.
   */
  NETCTRL_METHOD_ALL = 3,
} NetctrlMethod;

typedef enum {
  NETCTRL_VERDICT_CONTROLLABLE = 0,
  NETCTRL_VERDICT_UNCONTROLLABLE = 1,
  NETCTRL_VERDICT_NOT_APPLICABLE = 2,
} NetctrlVerdict;

/**
 * Opaque system handle.
 */
typedef struct NetctrlSystem NetctrlSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a NUL-terminated JSON system document into a new handle.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out` must be writable.
 */
NetctrlStatus netctrl_system_from_json(const char *json, NetctrlSystem **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `sys` must come from [`netctrl_system_from_json`] and not be freed twice.
 */
void netctrl_system_free(NetctrlSystem *sys);

/**
 * Writes N (nodes), n (node state dimension) and m (inputs per node).
 *
 * # Safety
 * `sys` must be a live handle; output pointers must be writable.
 */
NetctrlStatus netctrl_system_dims(const NetctrlSystem *sys,
                                  size_t *nodes,
                                  size_t *state,
                                  size_t *input);

/**
 * Runs `method` and returns the JSON report as a new string, to be
 * released with [`netctrl_string_free`].
 *
 * # Safety
 * `sys` must be a live handle; `report` must be writable.
 */
NetctrlStatus netctrl_check(const NetctrlSystem *sys, NetctrlMethod method, char **report);

/**
 * Numerical rank of the controllability matrix of the lifted pair.
 *
 * # Safety
 * `sys` must be a live handle; `rank` must be writable.
 */
NetctrlStatus netctrl_kalman_rank(const NetctrlSystem *sys, size_t *rank);

/**
 * Verdict of `method`. For [`NetctrlMethod::All`] this is the verdict all
 * decided methods agree on, or not applicable if none decide.
 *
 * # Safety
 * `sys` must be a live handle; `verdict` must be writable.
 */
NetctrlStatus netctrl_verdict(const NetctrlSystem *sys,
                              NetctrlMethod method,
                              NetctrlVerdict *verdict);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void netctrl_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into this library on the same thread.
 */
const char *netctrl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *netctrl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETCTRL_H */
