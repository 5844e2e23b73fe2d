#ifndef READORDER_H
#define READORDER_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ReadorderStatus {
  READORDER_STATUS_OK = 0,
  READORDER_STATUS_NULL_ARGUMENT = 1,
  READORDER_STATUS_INVALID_UTF8 = 2,
  // Malformed or out-of-range input data.
  READORDER_STATUS_INVALID_INPUT = 3,
  // The pipeline failed on otherwise valid input.
  READORDER_STATUS_PIPELINE_ERROR = 4,
  READORDER_STATUS_PANIC = 5,
} ReadorderStatus;

// Pipeline configuration.
typedef struct ReadorderConfig ReadorderConfig;

// Result of processing one page.
typedef struct ReadorderPage ReadorderPage;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after success.
const char *readorder_last_error(void);

// A configuration holding the defaults.
struct ReadorderConfig *readorder_config_new(void);

// # Safety
// `config` must come from [`readorder_config_new`] or be null.
void readorder_config_free(struct ReadorderConfig *config);

// Sets one key as it would appear in a config file. The config is left
// unchanged on error.
//
// # Safety
// `config` must be a live handle; `key` and `value` NUL-terminated.
enum ReadorderStatus readorder_config_set(struct ReadorderConfig *config,
                                          const char *key,
                                          const char *value);

// Runs the pipeline on one page.
//
// `detections_json` is a JSON array of `{"box": [l, t, r, b], "label",
// "score"}`. `mask` holds `mask_width * mask_height` bytes in row-major
// order, nonzero marking boundary-line pixels, at `1 / mask_scale` of page
// resolution. `line_json` is optional (null to skip) line recognition:
// a JSON array of `{"column", "symbols", "probs"}`.
//
// # Safety
// Pointers must be valid for the stated sizes; `out` must be writable.
enum ReadorderStatus readorder_parse_page(const struct ReadorderConfig *config,
                                          const char *detections_json,
                                          const uint8_t *mask,
                                          uintptr_t mask_width,
                                          uintptr_t mask_height,
                                          uint32_t mask_scale,
                                          const char *line_json,
                                          struct ReadorderPage **out);

// # Safety
// `page` must come from [`readorder_parse_page`] or be null.
void readorder_page_free(struct ReadorderPage *page);

// Reading-order text: columns separated by `\n`, regions by `\n\n`.
//
// # Safety
// `page` must be a live handle or null (returns null).
const char *readorder_page_text(const struct ReadorderPage *page);

// Text after line-recognition fusion, or null when none was supplied.
//
// # Safety
// `page` must be a live handle or null.
const char *readorder_page_fused_text(const struct ReadorderPage *page);

// Full result (lines, layout, document, text) as JSON.
//
// # Safety
// `page` must be a live handle or null.
const char *readorder_page_json(const struct ReadorderPage *page);

// # Safety
// `page` must be a live handle or null (returns 0).
uintptr_t readorder_page_line_count(const struct ReadorderPage *page);

// # Safety
// `page` must be a live handle or null (returns 0).
uintptr_t readorder_page_region_count(const struct ReadorderPage *page);

// # Safety
// `page` must be a live handle or null (returns 0).
uintptr_t readorder_page_column_count(const struct ReadorderPage *page);

// Correct rate and accuracy rate of `pred` against `gt`, whitespace
// ignored. Fails when `gt` has no characters.
//
// # Safety
// Strings must be NUL-terminated; outputs writable.
enum ReadorderStatus readorder_eval_text(const char *pred,
                                         const char *gt,
                                         double *out_cr,
                                         double *out_ar);

// IoU of two convex quadrilaterals, each given as 8 doubles
// `x0, y0, ..., x3, y3` in either winding.
//
// # Safety
// `a` and `b` must point to 8 doubles; `out` writable.
enum ReadorderStatus readorder_iou_quad(const double *a, const double *b, double *out);

// Library version, static storage.
const char *readorder_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* READORDER_H */
