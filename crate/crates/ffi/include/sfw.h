/* C interface to the sfw watermarking toolkit. Generated; do not edit. */

#ifndef SFW_H
#define SFW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SfwStatus {
  SFW_STATUS_OK = 0,
  SFW_STATUS_NULL_POINTER = 1,
  SFW_STATUS_INVALID_UTF8 = 2,
  SFW_STATUS_DIMENSION = 3,
  SFW_STATUS_SIZE = 4,
  SFW_STATUS_INVALID_PARAMETER = 5,
  SFW_STATUS_NON_FINITE = 6,
  SFW_STATUS_MASK_MISMATCH = 7,
  SFW_STATUS_UNRECOVERABLE = 8,
  SFW_STATUS_FORMAT_INFO = 9,
  SFW_STATUS_EMPTY = 10,
  SFW_STATUS_MALFORMED = 11,
  SFW_STATUS_IO = 12,
  SFW_STATUS_JSON = 13,
  SFW_STATUS_PANIC = 14,
} SfwStatus;

/**
 * Opaque watermark key.
 */
typedef struct SfwKey SfwKey;

/**
 * Opaque latent tensor.
 */
typedef struct SfwLatent SfwLatent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *sfw_last_error_message(void);

void sfw_clear_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sfw_version(void);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void sfw_string_free(char *s);

/**
 * Standard 4x64x64 N(0, 1) latent from `seed`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SfwStatus sfw_latent_gaussian(uint64_t seed, struct SfwLatent **out);

/**
 * Copies `len = c * h * w` finite values, channel-major, into a new latent.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `out` must be valid.
 */
enum SfwStatus sfw_latent_from_values(uint32_t channels,
                                      uint32_t height,
                                      uint32_t width,
                                      const double *values,
                                      size_t len,
                                      struct SfwLatent **out);

/**
 * Reads a latent file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid.
 */
enum SfwStatus sfw_latent_load(const char *path, struct SfwLatent **out);

/**
 * Writes a latent file.
 *
 * # Safety
 * `latent` must be a live handle; `path` a NUL-terminated string.
 */
enum SfwStatus sfw_latent_save(const struct SfwLatent *latent, const char *path);

/**
 * Writes the shape through any non-NULL pointer.
 *
 * # Safety
 * `latent` must be a live handle; non-NULL outputs must be valid.
 */
enum SfwStatus sfw_latent_dims(const struct SfwLatent *latent,
                               uint32_t *channels,
                               uint32_t *height,
                               uint32_t *width);

/**
 * Copies all values into `buf`, which must hold exactly `c * h * w`.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum SfwStatus sfw_latent_copy_values(const struct SfwLatent *latent, double *buf, size_t len);

/**
 * Releases a latent. NULL is ignored.
 *
 * # Safety
 * `latent` must come from this library and not be freed twice.
 */
void sfw_latent_free(struct SfwLatent *latent);

/**
 * Hermitian symmetric Tree-Ring key.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SfwStatus sfw_key_hstr(uint32_t channel,
                            uint32_t radius,
                            bool center_aware,
                            uint64_t seed,
                            struct SfwKey **out);

/**
 * Tree-Ring baseline key.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SfwStatus sfw_key_tree_ring(uint32_t channel,
                                 uint32_t radius,
                                 bool center_aware,
                                 uint64_t seed,
                                 struct SfwKey **out);

/**
 * HSQR key carrying the 9-byte `payload`, with default cell size,
 * amplitude and mask.
 *
 * # Safety
 * `payload` must point to 9 readable bytes; `out` must be valid.
 */
enum SfwStatus sfw_key_hsqr(uint32_t channel,
                            const uint8_t *payload,
                            bool center_aware,
                            uint64_t seed,
                            struct SfwKey **out);

/**
 * Seeded Gaussian noise key.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SfwStatus sfw_key_noise(uint32_t channel,
                             bool center_aware,
                             uint64_t seed,
                             struct SfwKey **out);

/**
 * Parses a key document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid.
 */
enum SfwStatus sfw_key_from_json(const char *json, struct SfwKey **out);

/**
 * Key document as a new string; release it with [`sfw_string_free`].
 *
 * # Safety
 * `key` must be a live handle; `out` must be valid.
 */
enum SfwStatus sfw_key_to_json(const struct SfwKey *key, char **out);

/**
 * Releases a key. NULL is ignored.
 *
 * # Safety
 * `key` must come from this library and not be freed twice.
 */
void sfw_key_free(struct SfwKey *key);

/**
 * Embeds `key` into a copy of `latent`.
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum SfwStatus sfw_embed(const struct SfwLatent *latent,
                         const struct SfwKey *key,
                         struct SfwLatent **out);

/**
 * Surrogate channel with one attack given as JSON, e.g.
 * `{"kind":"jpeg","quality":25}`, followed by inversion noise of standard
 * deviation `inversion_sigma`.
 *
 * # Safety
 * `latent` must be live; `attack_json` NUL-terminated; `out` valid.
 */
enum SfwStatus sfw_attack(const struct SfwLatent *latent,
                          const char *attack_json,
                          double inversion_sigma,
                          uint64_t seed,
                          struct SfwLatent **out);

/**
 * L1 key-region distance; `noise_key` may be NULL. With `real_only` only
 * real components are compared.
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum SfwStatus sfw_distance(const struct SfwLatent *latent,
                            const struct SfwKey *key,
                            const struct SfwKey *noise_key,
                            bool real_only,
                            double *out);

/**
 * Decodes an HSQR payload into the 9 bytes at `payload`; `corrected` (may
 * be NULL) receives the number of repaired symbols.
 *
 * # Safety
 * Handles must be live; `payload` must point to 9 writable bytes.
 */
enum SfwStatus sfw_decode_hsqr(const struct SfwLatent *latent,
                               const struct SfwKey *key,
                               uint8_t *payload,
                               uint32_t *corrected);

/**
 * One-sample KS test of all values against N(0, 1).
 *
 * # Safety
 * `latent` must be live; outputs must be valid.
 */
enum SfwStatus sfw_ks_test(const struct SfwLatent *latent, double *statistic, double *p_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SFW_H */
