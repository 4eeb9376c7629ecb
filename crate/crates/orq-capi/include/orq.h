#ifndef ORQ_H
#define ORQ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Index flavor selectors for `orq_build`.
 */
#define ORQ_KIND_REPORT 0

#define ORQ_KIND_SUCC 1

#define ORQ_KIND_SORTED 2

/**
 * Status code returned by every fallible entry point.
 */
typedef enum OrqStatus {
  ORQ_STATUS_OK = 0,
  ORQ_STATUS_NULL_ARGUMENT = 1,
  ORQ_STATUS_INVALID_ARGUMENT = 2,
  ORQ_STATUS_DUPLICATE_POINT = 3,
  ORQ_STATUS_IO_ERROR = 4,
  ORQ_STATUS_CORRUPT_INDEX = 5,
  ORQ_STATUS_WRONG_INDEX_TYPE = 6,
  ORQ_STATUS_PANIC = 7,
} OrqStatus;

/**
 * Opaque index handle.
 */
typedef struct OrqIndex OrqIndex;

/**
 * A point, C layout.
 */
typedef struct OrqPoint {
  uint64_t x;
  uint64_t y;
} OrqPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build an index over `len` points given as parallel coordinate arrays.
 *
 * # Safety
 * `xs` and `ys` must point to `len` readable u64 values; `out` must be a
 * valid location to store the handle.
 */
enum OrqStatus orq_build(uint8_t kind,
                         const uint64_t *xs,
                         const uint64_t *ys,
                         uintptr_t len,
                         struct OrqIndex **out);

/**
 * Release a handle returned by `orq_build` or `orq_load`.
 *
 * # Safety
 * `idx` must be a handle from this library, not yet freed; null is a no-op.
 */
void orq_index_free(struct OrqIndex *idx);

/**
 * Index kind tag (ORQ_KIND_*) of a handle.
 *
 * # Safety
 * `idx` must be a live handle.
 */
uint8_t orq_index_kind(const struct OrqIndex *idx);

/**
 * Number of indexed points.
 *
 * # Safety
 * `idx` must be a live handle.
 */
uint64_t orq_index_len(const struct OrqIndex *idx);

/**
 * Store the index in the ORQ1 file format.
 *
 * # Safety
 * `idx` must be a live handle and `path` a NUL-terminated UTF-8 string.
 */
enum OrqStatus orq_save(const struct OrqIndex *idx, const char *path);

/**
 * Load an ORQ1 file into a fresh handle.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` a valid location.
 */
enum OrqStatus orq_load(const char *path, struct OrqIndex **out);

/**
 * Release a point buffer returned by a query call.
 *
 * # Safety
 * `pts`/`len` must come from one query call; null is a no-op.
 */
void orq_points_free(struct OrqPoint *pts, uintptr_t len);

/**
 * All points in `[x1,x2] x [y1,y2]`; requires a report index.
 *
 * # Safety
 * `idx` must be a live handle; `out_points`/`out_len` valid locations.
 */
enum OrqStatus orq_report(const struct OrqIndex *idx,
                          uint64_t x1,
                          uint64_t x2,
                          uint64_t y1,
                          uint64_t y2,
                          struct OrqPoint **out_points,
                          uintptr_t *out_len);

/**
 * Lowest point of the rectangle; requires a successor index. `found` is 0
 * when the rectangle is empty.
 *
 * # Safety
 * `idx` must be a live handle; `out_point`/`found` valid locations.
 */
enum OrqStatus orq_successor(const struct OrqIndex *idx,
                             uint64_t x1,
                             uint64_t x2,
                             uint64_t y1,
                             uint64_t y2,
                             struct OrqPoint *out_point,
                             uint8_t *found);

/**
 * Up to `limit` rectangle points in increasing y (`UINT64_MAX` = all);
 * requires a sorted index.
 *
 * # Safety
 * `idx` must be a live handle; `out_points`/`out_len` valid locations.
 */
enum OrqStatus orq_sorted(const struct OrqIndex *idx,
                          uint64_t x1,
                          uint64_t x2,
                          uint64_t y1,
                          uint64_t y2,
                          uint64_t limit,
                          struct OrqPoint **out_points,
                          uintptr_t *out_len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *orq_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORQ_H */
