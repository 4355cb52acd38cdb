/* SPDX-License-Identifier: Apache-2.0 */

#ifndef MUDKIT_H
#define MUDKIT_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a call across the C boundary.
 */
typedef enum MudkitStatus {
  MUDKIT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  MUDKIT_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string or document argument was not valid UTF-8.
   */
  MUDKIT_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed input, such as an unparsable context or query.
   */
  MUDKIT_STATUS_INVALID_INPUT = 3,
  /**
   * The referenced file or device does not exist.
   */
  MUDKIT_STATUS_NOT_FOUND = 4,
  /**
   * The context refers to devices it does not declare.
   */
  MUDKIT_STATUS_CONFLICT = 5,
  /**
   * An internal panic was caught at the boundary.
   */
  MUDKIT_STATUS_PANIC = 6,
} MudkitStatus;

/**
 * Opaque workspace handle.
 */
typedef struct MudkitWorkspace MudkitWorkspace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mudkit_version(void);

/**
 * Message for the most recent failed call on this thread, or null.
 *
 * The pointer stays valid until the next mudkit call on the same thread.
 */
const char *mudkit_last_error(void);

/**
 * Release a string returned through an `out` parameter. Null is ignored.
 */
void mudkit_string_free(char *s);

/**
 * Parse and validate one MUD document.
 *
 * Writes `{"errors": n, "findings": [...]}` to `out_json`.
 */
enum MudkitStatus mudkit_validate(const uint8_t *data, size_t len, char **out_json);

/**
 * Create an empty workspace. Free it with `mudkit_workspace_free`.
 */
struct MudkitWorkspace *mudkit_workspace_new(void);

void mudkit_workspace_free(struct MudkitWorkspace *ws);

/**
 * Current revision; zero for a null handle.
 */
uint64_t mudkit_workspace_revision(const struct MudkitWorkspace *ws);

/**
 * Store a MUD document. Documents with errors are kept but left out of the merge.
 *
 * `out_id` receives the new file id. `out_findings`, when not null, receives the parse findings.
 */
enum MudkitStatus mudkit_workspace_add_file(struct MudkitWorkspace *ws,
                                            const uint8_t *data,
                                            size_t len,
                                            uint64_t *out_id,
                                            char **out_findings);

enum MudkitStatus mudkit_workspace_remove_file(struct MudkitWorkspace *ws, uint64_t id);

/**
 * Replace the deployment context with a JSON document. Null clears it.
 */
enum MudkitStatus mudkit_workspace_set_context(struct MudkitWorkspace *ws,
                                               const char *context_json);

/**
 * Writes `{"revision", "nodes", "edges"}`.
 */
enum MudkitStatus mudkit_workspace_graph(struct MudkitWorkspace *ws, char **out_json);

/**
 * Writes `{"revision", "findings"}` covering every file and the merge.
 */
enum MudkitStatus mudkit_workspace_findings(struct MudkitWorkspace *ws, char **out_json);

/**
 * Decide a packet given as a JSON query. Writes `{"revision", "decision", "refs"}`.
 */
enum MudkitStatus mudkit_workspace_query(struct MudkitWorkspace *ws,
                                         const char *query_json,
                                         char **out_json);

/**
 * Writes the summary of one device.
 */
enum MudkitStatus mudkit_workspace_summary(struct MudkitWorkspace *ws,
                                           const char *device,
                                           char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MUDKIT_H */
