#ifndef ARCHDELTA_H
#define ARCHDELTA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum ArchdeltaStatus {
  ARCHDELTA_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  ARCHDELTA_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  ARCHDELTA_STATUS_INVALID_UTF8 = 2,
  /**
   * A document failed to parse or validate.
   */
  ARCHDELTA_STATUS_DOCUMENT = 3,
  ARCHDELTA_STATUS_EXTRACT = 4,
  ARCHDELTA_STATUS_LINK = 5,
  /**
   * Delta computation or merge failed.
   */
  ARCHDELTA_STATUS_DELTA = 6,
  ARCHDELTA_STATUS_RULE = 7,
  ARCHDELTA_STATUS_HISTORY = 8,
  /**
   * An internal error; the library state is unaffected.
   */
  ARCHDELTA_STATUS_INTERNAL = 9,
} ArchdeltaStatus;

/**
 * A per-service delta.
 */
typedef struct ArchdeltaDelta ArchdeltaDelta;

/**
 * One microservice IR.
 */
typedef struct ArchdeltaService ArchdeltaService;

/**
 * A linked system IR.
 */
typedef struct ArchdeltaSystem ArchdeltaSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *archdelta_version(void);

/**
 * Message of the last failure on this thread; empty after a success.
 * The pointer stays valid until the next archdelta call on this thread.
 */
const char *archdelta_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void archdelta_string_free(char *s);

/**
 * Scans a service tree. `service` defaults to the directory name and
 * `profile_json` to the built-in marker profile when null.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum ArchdeltaStatus archdelta_service_extract(const char *tree,
                                               const char *service,
                                               const char *version,
                                               const char *profile_json,
                                               struct ArchdeltaService **out);

/**
 * # Safety
 * `json` must be NUL-terminated; `out` must be writable.
 */
enum ArchdeltaStatus archdelta_service_from_json(const char *json, struct ArchdeltaService **out);

/**
 * # Safety
 * `svc` must be a live handle; `out` must be writable.
 */
enum ArchdeltaStatus archdelta_service_to_json(const struct ArchdeltaService *svc, char **out);

/**
 * # Safety
 * `svc` must be null or a handle from this library, freed once.
 */
void archdelta_service_free(struct ArchdeltaService *svc);

/**
 * Links `n` services into a system IR.
 *
 * # Safety
 * `services` must point to `n` live handles; `out` must be writable.
 */
enum ArchdeltaStatus archdelta_system_link(const struct ArchdeltaService *const *services,
                                           size_t n,
                                           double overlap_threshold,
                                           struct ArchdeltaSystem **out);

/**
 * # Safety
 * `json` must be NUL-terminated; `out` must be writable.
 */
enum ArchdeltaStatus archdelta_system_from_json(const char *json, struct ArchdeltaSystem **out);

/**
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum ArchdeltaStatus archdelta_system_to_json(const struct ArchdeltaSystem *sys, char **out);

/**
 * Number of services in the system.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
size_t archdelta_system_service_count(const struct ArchdeltaSystem *sys);

/**
 * # Safety
 * `sys` must be null or a handle from this library, freed once.
 */
void archdelta_system_free(struct ArchdeltaSystem *sys);

/**
 * Diffs two versions of one service.
 *
 * # Safety
 * `old` and `new` must be live handles; `out` must be writable.
 */
enum ArchdeltaStatus archdelta_delta_compute(const struct ArchdeltaService *old,
                                             const struct ArchdeltaService *new_,
                                             struct ArchdeltaDelta **out);

/**
 * # Safety
 * `json` must be NUL-terminated; `out` must be writable.
 */
enum ArchdeltaStatus archdelta_delta_from_json(const char *json, struct ArchdeltaDelta **out);

/**
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
enum ArchdeltaStatus archdelta_delta_to_json(const struct ArchdeltaDelta *d, char **out);

/**
 * Number of component changes in the delta.
 *
 * # Safety
 * `d` must be null or a live handle.
 */
size_t archdelta_delta_change_count(const struct ArchdeltaDelta *d);

/**
 * # Safety
 * `d` must be null or a handle from this library, freed once.
 */
void archdelta_delta_free(struct ArchdeltaDelta *d);

/**
 * Applies `d` to `baseline`, producing a new system handle.
 *
 * # Safety
 * `baseline` and `d` must be live handles; `out` must be writable.
 */
enum ArchdeltaStatus archdelta_system_apply_delta(const struct ArchdeltaSystem *baseline,
                                                  const struct ArchdeltaDelta *d,
                                                  double overlap_threshold,
                                                  struct ArchdeltaSystem **out);

/**
 * Evaluates rules over (baseline, deltas, increment) and returns a
 * violations document. `rules_json` null selects the built-in rules.
 *
 * # Safety
 * Handles must be live; `deltas` must point to `n` handles; `out` must be
 * writable.
 */
enum ArchdeltaStatus archdelta_evaluate(const struct ArchdeltaSystem *baseline,
                                        const struct ArchdeltaDelta *const *deltas,
                                        size_t n,
                                        const struct ArchdeltaSystem *increment,
                                        const char *rules_json,
                                        char **out);

/**
 * Impact report of `d` over `baseline`. Negative hop bounds mean
 * unlimited.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum ArchdeltaStatus archdelta_impact(const struct ArchdeltaSystem *baseline,
                                      const struct ArchdeltaDelta *d,
                                      int64_t max_hops,
                                      int64_t max_cross_service_hops,
                                      bool include_data_overlap,
                                      char **out);

/**
 * Replays the history described by a TOML config, writing artifacts to
 * `out_dir` (or the config's `out` when null), and returns the summary
 * document.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum ArchdeltaStatus archdelta_replay(const char *config_path, const char *out_dir, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARCHDELTA_H */
