#ifndef RECRUIT_H
#define RECRUIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum RcStatus {
  RC_STATUS_OK = 0,
  RC_STATUS_NULL_POINTER = 1,
  RC_STATUS_INVALID_UTF8 = 2,
  RC_STATUS_PARSE = 3,
  RC_STATUS_INVALID_SCENARIO = 4,
  RC_STATUS_IMPOSSIBLE_HISTORY = 5,
  RC_STATUS_HORIZON_INSUFFICIENT = 6,
  RC_STATUS_ORACLE_INAPPLICABLE = 7,
  RC_STATUS_INVALID_ARGUMENT = 8,
  RC_STATUS_PANIC = 9,
} RcStatus;

typedef enum RcCategory {
  RC_CATEGORY_A = 0,
  RC_CATEGORY_B = 1,
} RcCategory;

typedef enum RcVerdict {
  RC_VERDICT_BACKFIRES = 0,
  RC_VERDICT_HELPS = 1,
  RC_VERDICT_INDETERMINATE = 2,
} RcVerdict;

// Opaque scenario handle.
typedef struct RcScenario RcScenario;

typedef struct RcIndex {
  double value;
  double achieved_tol;
} RcIndex;

typedef struct RcMyopicValues {
  double blank_a;
  double blank_b;
  double search;
} RcMyopicValues;

// Certified bounds on the hiring outcome.
typedef struct RcOutcome {
  double pa_lo;
  double pa_hi;
  double pb_lo;
  double pb_hi;
  double pnone_lo;
  double pnone_hi;
  double truncation_mass;
} RcOutcome;

typedef struct RcEstimate {
  double pa;
  double pb;
  double pnone;
  double stderr_a;
  double stderr_b;
  double stderr_none;
  uint64_t trials;
  uint64_t censored;
} RcEstimate;

typedef struct RcComparison {
  struct RcOutcome before;
  struct RcOutcome after;
  double diff_a_lo;
  double diff_a_hi;
  enum RcVerdict verdict;
} RcComparison;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static string.
const char *rc_version(void);

// Message of the last failed call on this thread. Valid until the next
// failing call on the same thread.
const char *rc_last_error(void);

// # Safety
// `id` must be a NUL-terminated string and `out` a valid pointer.
enum RcStatus rc_scenario_builtin(const char *id, struct RcScenario **out);

// Parses a scenario document.
//
// # Safety
// `doc` must be a NUL-terminated string and `out` a valid pointer.
enum RcStatus rc_scenario_parse(const char *doc, struct RcScenario **out);

// # Safety
// `s` must come from this library and not be used afterwards. Null is a no-op.
void rc_scenario_free(struct RcScenario *s);

// Serializes a scenario; release the string with `rc_string_free`.
//
// # Safety
// `s` must be a live handle and `out` a valid pointer.
enum RcStatus rc_scenario_to_string(const struct RcScenario *s, char **out);

// # Safety
// `p` must come from this library and not be used afterwards. Null is a no-op.
void rc_string_free(char *p);

// Reads a numeric parameter by document key, e.g. `"A.qH"`.
//
// # Safety
// `s` must be a live handle, `key` a NUL-terminated string, `out` valid.
enum RcStatus rc_scenario_get(const struct RcScenario *s, const char *key, double *out);

// Sets a numeric parameter by document key. Invalid values are reported
// by `rc_validate` and refused by the evaluators.
//
// # Safety
// `s` must be a live handle and `key` a NUL-terminated string.
enum RcStatus rc_scenario_set(struct RcScenario *s, const char *key, double value);

// Counts invariant and assumption violations. When there are any, their
// messages are available from `rc_last_error`.
//
// # Safety
// `s` must be a live handle; output pointers must be valid.
enum RcStatus rc_validate(const struct RcScenario *s, size_t *invariants, size_t *assumptions);

// # Safety
// `s` must be a live handle and `out` valid.
enum RcStatus rc_posterior(const struct RcScenario *s,
                           enum RcCategory category,
                           uint32_t n1,
                           uint32_t n0,
                           double *out);

// # Safety
// `s` must be a live handle and `out` valid.
enum RcStatus rc_gittins_index(const struct RcScenario *s,
                               enum RcCategory category,
                               uint32_t n1,
                               uint32_t n0,
                               struct RcIndex *out);

// # Safety
// `s` must be a live handle and `out` valid.
enum RcStatus rc_search_index(const struct RcScenario *s, struct RcIndex *out);

// # Safety
// `s` must be a live handle and `out` valid.
enum RcStatus rc_myopic_values(const struct RcScenario *s, struct RcMyopicValues *out);

// Certified outcome bounds using the scenario's tolerances. On
// `RC_STATUS_HORIZON_INSUFFICIENT` the bounds reached are still written.
//
// # Safety
// `s` must be a live handle and `out` valid.
enum RcStatus rc_exact_outcome(const struct RcScenario *s, struct RcOutcome *out);

// Seeded Monte Carlo estimate; trials longer than `horizon` periods are
// counted as no hire.
//
// # Safety
// `s` must be a live handle and `out` valid.
enum RcStatus rc_monte_carlo(const struct RcScenario *s,
                             uint64_t trials,
                             uint64_t seed,
                             uint64_t horizon,
                             struct RcEstimate *out);

// Compares two scenarios that differ only in arrival probabilities.
//
// # Safety
// Both handles must be live and `out` valid.
enum RcStatus rc_compare(const struct RcScenario *before,
                         const struct RcScenario *after,
                         struct RcComparison *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RECRUIT_H */
