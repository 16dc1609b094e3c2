#ifndef MDPMON_H
#define MDPMON_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MdpmonMethod {
  /**
   * Belief-set filtering with hull reduction.
   */
  MDPMON_METHOD_FILTER_HULL = 0,
  MDPMON_METHOD_FILTER_NO_HULL = 1,
  /**
   * Support tracking, for models without probabilities that matter.
   */
  MDPMON_METHOD_FILTER_SUPPORT = 2,
  /**
   * Single belief, for models with one action per state.
   */
  MDPMON_METHOD_FILTER_CHAIN = 3,
  MDPMON_METHOD_UNROLL_EXACT = 4,
  MDPMON_METHOD_UNROLL_INTERVAL = 5,
} MdpmonMethod;

typedef enum MdpmonStatus {
  MDPMON_STATUS_OK = 0,
  MDPMON_STATUS_NULL_POINTER = 1,
  MDPMON_STATUS_INVALID_UTF8 = 2,
  /**
   * Model text or risk specification did not parse or validate.
   */
  MDPMON_STATUS_INVALID_INPUT = 3,
  MDPMON_STATUS_UNKNOWN_OBSERVATION = 4,
  MDPMON_STATUS_TRACE_IMPOSSIBLE = 5,
  MDPMON_STATUS_TIMEOUT = 6,
  /**
   * The monitor failed earlier and accepts no more observations.
   */
  MDPMON_STATUS_CLOSED = 7,
  MDPMON_STATUS_UNSUPPORTED = 8,
  MDPMON_STATUS_INTERNAL = 9,
} MdpmonStatus;

typedef struct MdpmonModel MdpmonModel;

typedef struct MdpmonMonitor MdpmonMonitor;

/**
 * Risk after one observation. Exact methods report `lower == upper`.
 */
typedef struct MdpmonRisk {
  double lower;
  double upper;
  bool exact;
  /**
   * Number of observations consumed so far.
   */
  size_t step;
} MdpmonRisk;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library from this thread.
 */
const char *mdpmon_last_error(void);

/**
 * Parses and validates a model in the text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum MdpmonStatus mdpmon_model_parse(const char *text, struct MdpmonModel **out);

/**
 * # Safety
 * `model` must come from [`mdpmon_model_parse`] and not be freed already.
 * Monitors created from it stay valid.
 */
void mdpmon_model_free(struct MdpmonModel *model);

/**
 * # Safety
 * `model` must be a live handle or null.
 */
size_t mdpmon_model_num_states(const struct MdpmonModel *model);

/**
 * # Safety
 * `model` must be a live handle or null.
 */
size_t mdpmon_model_num_observations(const struct MdpmonModel *model);

/**
 * Looks up an observation symbol by name.
 *
 * # Safety
 * `model` must be a live handle, `name` NUL-terminated and `out` writable.
 */
enum MdpmonStatus mdpmon_model_observation_id(const struct MdpmonModel *model,
                                              const char *name,
                                              size_t *out);

/**
 * Creates a monitor. `risk` is a specification such as
 * `reach-max(crash,8)`; null selects the risk embedded in the model.
 * `step_limit_ms` bounds each observation, 0 for no limit.
 *
 * # Safety
 * `model` must be a live handle, `risk` null or NUL-terminated, and `out`
 * writable.
 */
enum MdpmonStatus mdpmon_monitor_new(const struct MdpmonModel *model,
                                     const char *risk,
                                     enum MdpmonMethod method,
                                     uint64_t step_limit_ms,
                                     struct MdpmonMonitor **out);

/**
 * # Safety
 * `monitor` must come from [`mdpmon_monitor_new`] and not be freed already.
 */
void mdpmon_monitor_free(struct MdpmonMonitor *monitor);

/**
 * Feeds one observation by id. `out` may be null.
 *
 * # Safety
 * `monitor` must be a live handle and `out` writable or null.
 */
enum MdpmonStatus mdpmon_monitor_feed(struct MdpmonMonitor *monitor,
                                      size_t observation,
                                      struct MdpmonRisk *out);

/**
 * Feeds one observation by name. `out` may be null.
 *
 * # Safety
 * `monitor` must be a live handle, `name` NUL-terminated and `out`
 * writable or null.
 */
enum MdpmonStatus mdpmon_monitor_feed_name(struct MdpmonMonitor *monitor,
                                           const char *name,
                                           struct MdpmonRisk *out);

/**
 * Exact risk after the latest observation as `p/q`, or null when there is
 * none yet or the method only gives bounds. Release with
 * [`mdpmon_string_free`].
 *
 * # Safety
 * `monitor` must be a live handle or null.
 */
char *mdpmon_monitor_exact_risk(const struct MdpmonMonitor *monitor);

/**
 * # Safety
 * `s` must come from this library and not be freed already, or be null.
 */
void mdpmon_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MDPMON_H */
