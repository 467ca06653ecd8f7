#ifndef ROUTED_MPST_H
#define ROUTED_MPST_H

/* Generated by cbindgen from the routed-mpst-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum RmStatus {
  RM_STATUS_OK = 0,
  RM_STATUS_NULL_ARGUMENT = 1,
  RM_STATUS_INVALID_UTF8 = 2,
  RM_STATUS_INVALID_ARGUMENT = 3,
  RM_STATUS_PARSE = 4,
  RM_STATUS_ELABORATION = 5,
  RM_STATUS_PROJECTION = 6,
  RM_STATUS_ENCODING = 7,
  RM_STATUS_ANALYSIS = 8,
  RM_STATUS_SIMULATION = 9,
  RM_STATUS_PANIC = 10,
} RmStatus;

/**
 * The state machine of one role.
 */
typedef struct RmEfsm RmEfsm;

/**
 * A parsed Scribble module.
 */
typedef struct RmModule RmModule;

/**
 * An elaborated global protocol.
 */
typedef struct RmProtocol RmProtocol;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *rm_last_error(void);

/**
 * Release a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void rm_string_free(char *s);

/**
 * Parse Scribble source. `file` names the source in diagnostics and may be
 * NULL.
 *
 * # Safety
 * `text` and `file` must be NULL or nul-terminated; `out` must be writable.
 */
enum RmStatus rm_module_parse(const char *text, const char *file, struct RmModule **out);

/**
 * # Safety
 * `m` must be NULL or a module from [`rm_module_parse`] not yet freed.
 */
void rm_module_free(struct RmModule *m);

/**
 * Elaborate protocol `name` of a module.
 *
 * # Safety
 * Handles and strings must be valid; `out` must be writable.
 */
enum RmStatus rm_module_elaborate(const struct RmModule *m,
                                  const char *name,
                                  struct RmProtocol **out);

/**
 * # Safety
 * `p` must be NULL or a protocol from this library not yet freed.
 */
void rm_protocol_free(struct RmProtocol *p);

/**
 * Render a protocol as text.
 *
 * # Safety
 * `p` must be a valid handle; `out` must be writable.
 */
enum RmStatus rm_protocol_to_string(const struct RmProtocol *p, char **out);

/**
 * Project onto `role` and render the local type as text.
 *
 * # Safety
 * Handles and strings must be valid; `out` must be writable.
 */
enum RmStatus rm_protocol_project(const struct RmProtocol *p, const char *role, char **out);

/**
 * Route a canonical protocol through `router`.
 *
 * # Safety
 * Handles and strings must be valid; `out` must be writable.
 */
enum RmStatus rm_protocol_encode(const struct RmProtocol *p,
                                 const char *router,
                                 struct RmProtocol **out);

/**
 * Check well-formedness, with respect to `router` unless it is NULL. A
 * protocol that is not well-formed is reported through `ok`, not the status.
 *
 * # Safety
 * Handles and strings must be valid; `ok` must be writable.
 */
enum RmStatus rm_protocol_check(const struct RmProtocol *p, const char *router, bool *ok);

/**
 * Run trace equivalence, deadlock freedom and encoding correspondence at
 * `depth` on a canonical protocol. Writes the key-value report to `report`
 * and the overall result to `passed`.
 *
 * # Safety
 * Handles and strings must be valid; outputs must be writable.
 */
enum RmStatus rm_protocol_verify(const struct RmProtocol *p,
                                 const char *router,
                                 size_t depth,
                                 char **report,
                                 bool *passed);

/**
 * Simulate one routed session with seeded choices and write its log.
 *
 * # Safety
 * Handles and strings must be valid; `out` must be writable.
 */
enum RmStatus rm_protocol_simulate(const struct RmProtocol *p,
                                   const char *router,
                                   uint64_t seed,
                                   char **out);

/**
 * Build the state machine of `role`.
 *
 * # Safety
 * Handles and strings must be valid; `out` must be writable.
 */
enum RmStatus rm_protocol_efsm(const struct RmProtocol *p, const char *role, struct RmEfsm **out);

/**
 * # Safety
 * `e` must be NULL or a machine from [`rm_protocol_efsm`] not yet freed.
 */
void rm_efsm_free(struct RmEfsm *e);

/**
 * Number of states, or 0 for NULL.
 *
 * # Safety
 * `e` must be NULL or a valid handle.
 */
size_t rm_efsm_state_count(const struct RmEfsm *e);

/**
 * Number of transitions, or 0 for NULL.
 *
 * # Safety
 * `e` must be NULL or a valid handle.
 */
size_t rm_efsm_transition_count(const struct RmEfsm *e);

/**
 * Render as a DOT digraph.
 *
 * # Safety
 * `e` must be a valid handle; `out` must be writable.
 */
enum RmStatus rm_efsm_to_dot(const struct RmEfsm *e, char **out);

/**
 * Render as the JSON IR with sorted keys.
 *
 * # Safety
 * `e` must be a valid handle; `out` must be writable.
 */
enum RmStatus rm_efsm_to_json(const struct RmEfsm *e, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROUTED_MPST_H */
