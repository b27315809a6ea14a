#ifndef TENPERF_H
#define TENPERF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TpStatus {
  TP_STATUS_OK = 0,
  TP_STATUS_NULL_POINTER = 1,
  TP_STATUS_INVALID_UTF8 = 2,
  TP_STATUS_PARSE_ERROR = 3,
  TP_STATUS_NOT_CANONICAL = 4,
  TP_STATUS_INVALID_ARGUMENT = 5,
  TP_STATUS_BUFFER_TOO_SMALL = 6,
  TP_STATUS_PANIC = 7,
} TpStatus;

typedef enum TpVerdict {
  TP_VERDICT_PERFECT_CERTIFIED = 0,
  TP_VERDICT_FULL_RANK_FAILED = 1,
  TP_VERDICT_NOT_APPLICABLE = 2,
} TpVerdict;

/**
 * The result of certifying one format.
 */
typedef struct TpCertificate TpCertificate;

/**
 * A canonical tensor format.
 */
typedef struct TpFormat TpFormat;

typedef struct TpBounds {
  uint64_t lower;
  uint64_t upper;
  uint64_t q;
} TpBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses and canonicalizes a format string such as `"2x2x3"`.
 *
 * # Safety
 * `text` must be null or a NUL-terminated string; `out` must be null or
 * writable.
 */
enum TpStatus tp_format_parse(const char *text, struct TpFormat **out);

/**
 * # Safety
 * `f` must be null or a handle from [`tp_format_parse`] not yet freed.
 */
void tp_format_free(struct TpFormat *f);

/**
 * Number of modes of `f`, or 0 for a null handle.
 *
 * # Safety
 * `f` must be null or a live format handle.
 */
size_t tp_format_order(const struct TpFormat *f);

/**
 * Copies the sorted dims into `buf`, which holds `cap` entries.
 *
 * # Safety
 * `f` must be a live handle and `buf` valid for `cap` writes.
 */
enum TpStatus tp_format_dims(const struct TpFormat *f, size_t *buf, size_t cap);

/**
 * # Safety
 * `f` must be a live handle and `out` writable.
 */
enum TpStatus tp_bounds(const struct TpFormat *f, struct TpBounds *out);

/**
 * # Safety
 * `f` must be a live handle and `perfect` writable; `q` may be null.
 */
enum TpStatus tp_is_perfect(const struct TpFormat *f, bool *perfect, uint64_t *q);

/**
 * # Safety
 * `f` must be a live handle and `out` writable.
 */
enum TpStatus tp_certify(const struct TpFormat *f, struct TpCertificate **out);

/**
 * # Safety
 * `c` must be null or a handle from [`tp_certify`] not yet freed.
 */
void tp_certificate_free(struct TpCertificate *c);

/**
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
enum TpStatus tp_certificate_verdict(const struct TpCertificate *c, enum TpVerdict *out);

/**
 * Exact Jacobian rank, or -1 when no Jacobian was evaluated.
 *
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
enum TpStatus tp_certificate_rank(const struct TpCertificate *c, int64_t *out);

/**
 * The certificate as JSON. Release the string with [`tp_string_free`].
 *
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
enum TpStatus tp_certificate_json(const struct TpCertificate *c, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void tp_string_free(char *s);

/**
 * Smallest `r` in `[lower bound, max_r]` whose Jacobian at random integer
 * points has full rank; `*found` is false when none did.
 *
 * # Safety
 * `f` must be a live handle; `rank` and `found` writable.
 */
enum TpStatus tp_generic_rank(const struct TpFormat *f,
                              size_t max_r,
                              size_t trials,
                              uint64_t seed,
                              size_t *rank,
                              bool *found);

/**
 * Static description of a status code; unknown codes get a generic text.
 */
const char *tp_status_message(int32_t status);

/**
 * Message for the last failure on this thread; valid until the next call
 * into this library from the same thread.
 */
const char *tp_last_error(void);

/**
 * Library version as a static string.
 */
const char *tp_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TENPERF_H */
