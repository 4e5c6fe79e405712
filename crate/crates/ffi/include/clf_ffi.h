#ifndef CLF_FFI_H
#define CLF_FFI_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum ClfStatus {
  CLF_STATUS_OK = 0,
  // A required pointer argument was null.
  CLF_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  CLF_STATUS_INVALID_UTF8 = 2,
  // The configuration JSON was malformed or violates an invariant.
  CLF_STATUS_INVALID_CONFIG = 3,
  // Width or height outside `1..=2048`.
  CLF_STATUS_INVALID_GEOMETRY = 4,
  // An event lies outside the sensor, or has a polarity other than 0 or 1.
  CLF_STATUS_INVALID_EVENT = 5,
  // Timestamps of a batch decrease.
  CLF_STATUS_NON_MONOTONIC = 6,
  // The configuration is valid but the requested model does not support it.
  CLF_STATUS_UNSUPPORTED = 7,
  // A panic was caught at the boundary. The handle involved, if any,
  // should be freed.
  CLF_STATUS_INTERNAL = 8,
} ClfStatus;

// Filter family selected at creation.
typedef enum ClfFilterKind {
  CLF_FILTER_KIND_CLF = 0,
  CLF_FILTER_KIND_BAF = 1,
  CLF_FILTER_KIND_STCF = 2,
  CLF_FILTER_KIND_RCF = 3,
  CLF_FILTER_KIND_SSM = 4,
  CLF_FILTER_KIND_ORACLE = 5,
} ClfFilterKind;

// Opaque filter handle.
typedef struct ClfFilter ClfFilter;

typedef struct ClfEvent {
  // Microseconds.
  uint64_t t;
  uint16_t x;
  uint16_t y;
  // 1 for ON, 0 for OFF.
  uint8_t polarity;
} ClfEvent;

typedef struct ClfDecision {
  bool is_signal;
  // Correlated entries found.
  uint32_t count;
} ClfDecision;

typedef struct ClfPipelineStats {
  uint64_t total_cycles;
  uint64_t reads_issued;
  uint64_t reads_cancelled;
  uint64_t writes;
  uint64_t stalls;
  uint64_t latency_min;
  uint64_t latency_max;
  double latency_mean;
} ClfPipelineStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static nul-terminated string.
const char *clf_version(void);

// Message of the last failing call on this thread, or null if none failed
// yet. The string stays valid until the next failing call on this thread.
const char *clf_last_error_message(void);

// Smallest valid bank count for a window of `window_side` lines: the next
// power of two. Returns 0 for a side of 0.
uint32_t clf_required_banks(uint32_t window_side);

// Creates a filter. `config_json` holds a configuration object (null for
// the defaults); baseline filters use its `params` and, for RCF, `bw_t` and
// `quant_unit`. `ssm_r` is the SSM cell size and is ignored by other kinds.
//
// # Safety
// `config_json` must be null or a valid nul-terminated string; `out` must be
// null or writable.
enum ClfStatus clf_filter_new(enum ClfFilterKind kind,
                              uint32_t ssm_r,
                              const char *config_json,
                              uint32_t width,
                              uint32_t height,
                              struct ClfFilter **out);

// Releases a filter. Null is ignored.
//
// # Safety
// `filter` must be null or a handle from [`clf_filter_new`] not yet freed.
void clf_filter_free(struct ClfFilter *filter);

// Sensor width and height the filter was created for.
//
// # Safety
// `filter` must be a live handle; `width` and `height` must be writable.
enum ClfStatus clf_filter_geometry(const struct ClfFilter *filter,
                                   uint32_t *width,
                                   uint32_t *height);

// Classifies one event and stores it.
//
// # Safety
// `filter` must be a live handle, `event` readable and `decision` writable.
enum ClfStatus clf_filter_process(struct ClfFilter *filter,
                                  const struct ClfEvent *event,
                                  struct ClfDecision *decision);

// Classifies `len` events in order. Processing stops at the first invalid
// event; `processed` (if not null) receives the number of events handled,
// whose decisions are valid.
//
// # Safety
// `filter` must be a live handle, `events` readable and `decisions` writable
// for `len` elements, and `processed` null or writable.
enum ClfStatus clf_filter_process_batch(struct ClfFilter *filter,
                                        const struct ClfEvent *events,
                                        size_t len,
                                        struct ClfDecision *decisions,
                                        size_t *processed);

// Clears the filter's memory.
//
// # Safety
// `filter` must be a live handle.
enum ClfStatus clf_filter_reset(struct ClfFilter *filter);

// Storage bits of a CLF configuration on a `width x height` sensor.
//
// # Safety
// `config_json` must be null or a valid nul-terminated string; `bits` must be
// writable.
enum ClfStatus clf_memory_footprint_bits(const char *config_json,
                                         uint32_t width,
                                         uint32_t height,
                                         uint64_t *bits);

// Runs the cycle-level datapath model over `len` events with
// non-decreasing timestamps. The configuration's `pipelined` flag selects
// the two-stage or the sequential model. `decisions` may be null; otherwise
// it receives `len` decisions.
//
// # Safety
// `config_json` must be null or a valid nul-terminated string, `events`
// readable for `len` elements, `decisions` null or writable for `len`
// elements, and `stats` writable.
enum ClfStatus clf_pipeline_run(const char *config_json,
                                uint32_t width,
                                uint32_t height,
                                const struct ClfEvent *events,
                                size_t len,
                                struct ClfDecision *decisions,
                                struct ClfPipelineStats *stats);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLF_FFI_H */
