#ifndef ENTITY_LINKER_H
#define ENTITY_LINKER_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ElStatus {
  EL_STATUS_OK = 0,
  EL_STATUS_NULL_ARGUMENT = 1,
  EL_STATUS_INVALID_UTF8 = 2,
  /*
   Unknown setting, out-of-range value, or unknown request type.
   */
  EL_STATUS_INVALID_ARGUMENT = 3,
  EL_STATUS_UNBALANCED_TAG = 4,
  /*
   Other tagged-text problems, such as an empty annotation.
   */
  EL_STATUS_INVALID_TEXT = 5,
  /*
   Malformed KB line, duplicate redirect or bad index config.
   */
  EL_STATUS_MALFORMED_INPUT = 6,
  EL_STATUS_IO = 7,
  /*
   Corrupt bundle or format version mismatch.
   */
  EL_STATUS_BUNDLE = 8,
  EL_STATUS_PANIC = 99,
} ElStatus;

/*
 A loaded, immutable index bundle. Safe to share between threads.
 */
typedef struct ElBundle ElBundle;

/*
 Linker settings, initialised to the defaults.
 */
typedef struct ElConfig ElConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *el_version(void);

/*
 Message for the last failed call on this thread, or NULL. Valid until the
 next call into the library from the same thread.
 */
const char *el_last_error_message(void);

/*
 Builds a bundle directory from a triple dump. `config_path` may be NULL.

 # Safety
 String arguments must be NULL or valid NUL-terminated strings.
 */
enum ElStatus el_index_build(const char *kb_path, const char *out_dir, const char *config_path);

/*
 Loads a bundle directory into `*out`.

 # Safety
 `dir` must be NULL or a valid NUL-terminated string; `out` must be NULL or
 writable.
 */
enum ElStatus el_bundle_load(const char *dir, struct ElBundle **out);

/*
 Number of entities in the bundle; 0 for NULL.

 # Safety
 `bundle` must be NULL or a live handle from [`el_bundle_load`].
 */
uintptr_t el_bundle_entity_count(const struct ElBundle *bundle);

/*
 # Safety
 `bundle` must be NULL or a handle from [`el_bundle_load`] not yet freed.
 */
void el_bundle_free(struct ElBundle *bundle);

/*
 Default linker settings into `*out`.

 # Safety
 `out` must be NULL or writable.
 */
enum ElStatus el_config_new(struct ElConfig **out);

/*
 Sets one linker setting using the properties-file key names
 (`acronym`, `depth`, `ngramDistance`, ...).

 # Safety
 `config` must be NULL or a live handle; strings NULL or NUL-terminated.
 */
enum ElStatus el_config_set(struct ElConfig *config, const char *key, const char *value);

/*
 # Safety
 `config` must be NULL or a handle from [`el_config_new`] not yet freed.
 */
void el_config_free(struct ElConfig *config);

/*
 Links `<entity>`-tagged `text`. `kind` is `"agdistis"` or `"candidates"`;
 `config` may be NULL for the defaults. On success `*out_json` receives the
 same JSON the HTTP service returns.

 # Safety
 Handles must be live or NULL; strings NULL or NUL-terminated; `out_json`
 NULL or writable.
 */
enum ElStatus el_annotate(const struct ElBundle *bundle,
                          const struct ElConfig *config,
                          const char *text_in,
                          const char *kind,
                          char **out_json);

/*
 Releases a string returned by this library.

 # Safety
 `s` must be NULL or a pointer obtained from [`el_annotate`] not yet freed.
 */
void el_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ENTITY_LINKER_H */
