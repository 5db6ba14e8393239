#ifndef TICKSIZE_H
#define TICKSIZE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TsStatus {
  TS_STATUS_OK = 0,
  TS_STATUS_NULL_POINTER = 1,
  TS_STATUS_INVALID_ARGUMENT = 2,
  TS_STATUS_EMPTY_INPUT = 3,
  TS_STATUS_DEGENERATE = 4,
  TS_STATUS_FIT_FAILED = 5,
  TS_STATUS_MEMORY_BUDGET = 6,
  TS_STATUS_IO = 7,
  TS_STATUS_PANIC = 8,
  TS_STATUS_OUT_OF_RANGE = 9,
} TsStatus;

typedef struct TsExperiment TsExperiment;

typedef struct TsReport TsReport;

typedef struct TsReturnSeries TsReturnSeries;

typedef struct TsBounds {
  double min;
  double max;
  double spacing;
} TsBounds;

typedef struct TsEppsPoint {
  uint32_t dt;
  double raw;
  double compensated;
  double raw_price_changes;
  double compensated_price_changes;
  double ground_truth_c;
} TsEppsPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The caller
// owns the returned string.
char *ts_last_error_message(void);

void ts_string_free(char *s);

// Density of the difference of two uniform rounding errors on `[-q/2, q/2]`,
// centered at `center`.
enum TsStatus ts_triangular_density(double x, double center, double q, double *out);

// Support interval and band spacing of the returns with price change `n`.
enum TsStatus ts_subset_bounds(int64_t n,
                               double q,
                               double s_min,
                               double s_max,
                               struct TsBounds *out);

// Non-overlapping returns of a price path given in ticks on a unit grid.
// `q` is the tick size as a decimal string.
enum TsStatus ts_returns_from_prices(const int64_t *prices,
                                     uintptr_t len,
                                     const char *q,
                                     uint32_t dt,
                                     struct TsReturnSeries **out);

enum TsStatus ts_returns_len(const struct TsReturnSeries *h, uintptr_t *out);

void ts_returns_free(struct TsReturnSeries *h);

// Run the simulated Epps experiment. `config_json` may be null for the
// default configuration; unknown keys are rejected.
enum TsStatus ts_simulate(const char *config_json, struct TsExperiment **out);

enum TsStatus ts_experiment_len(const struct TsExperiment *h, uintptr_t *out);

enum TsStatus ts_experiment_point(const struct TsExperiment *h,
                                  uintptr_t index,
                                  struct TsEppsPoint *out);

void ts_experiment_free(struct TsExperiment *h);

// Compensated return correlation. `options_json` may be null.
enum TsStatus ts_correct_returns(const struct TsReturnSeries *r1,
                                 const struct TsReturnSeries *r2,
                                 const char *options_json,
                                 struct TsReport **out);

// Compensated price-change correlation. `options_json` may be null.
enum TsStatus ts_correct_price_changes(const struct TsReturnSeries *r1,
                                       const struct TsReturnSeries *r2,
                                       const char *options_json,
                                       struct TsReport **out);

enum TsStatus ts_report_raw(const struct TsReport *h, double *out);

enum TsStatus ts_report_compensated(const struct TsReport *h, double *out);

// Value of one named correction term.
enum TsStatus ts_report_term(const struct TsReport *h, const char *name, double *out);

// The full report as JSON; the caller owns the string.
enum TsStatus ts_report_json(const struct TsReport *h, char **out);

void ts_report_free(struct TsReport *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TICKSIZE_H */
