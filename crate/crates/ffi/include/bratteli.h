#ifndef BRATTELI_H
#define BRATTELI_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum BratteliStatus {
  BRATTELI_STATUS_OK = 0,
  BRATTELI_STATUS_NULL_POINTER = 1,
  BRATTELI_STATUS_INVALID_UTF8 = 2,
  BRATTELI_STATUS_PARSE = 3,
  BRATTELI_STATUS_INVALID_INPUT = 4,
  BRATTELI_STATUS_LEVEL_OUT_OF_RANGE = 5,
  BRATTELI_STATUS_DIAGRAM_MISMATCH = 6,
  BRATTELI_STATUS_PRECONDITION = 7,
  BRATTELI_STATUS_EXHAUSTED = 8,
  BRATTELI_STATUS_BUFFER_TOO_SMALL = 9,
  BRATTELI_STATUS_PANIC = 10,
} BratteliStatus;

/**
 * Opaque diagram handle.
 */
typedef struct BratteliDiagramHandle BratteliDiagramHandle;

/**
 * Opaque full-group element handle.
 */
typedef struct BratteliElementHandle BratteliElementHandle;

/**
 * Opaque invariant-measure handle.
 */
typedef struct BratteliMeasureHandle BratteliMeasureHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or NULL. The pointer
 * stays valid until the next failing call.
 */
const char *bratteli_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void bratteli_string_free(char *s);

/**
 * The `k`-odometer: one vertex per level, `k` edges between levels.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BratteliStatus bratteli_diagram_odometer(uint64_t k, struct BratteliDiagramHandle **out);

/**
 * Stationary diagram with incidence matrix `[[1, 1], [1, 0]]`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BratteliStatus bratteli_diagram_fibonacci(struct BratteliDiagramHandle **out);

/**
 * Diagram from its JSON file format (`levels`, `edges`, `stationary`).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BratteliStatus bratteli_diagram_from_json(const char *json,
                                               struct BratteliDiagramHandle **out);

/**
 * # Safety
 * `d` must come from this library and not be freed twice.
 */
void bratteli_diagram_free(struct BratteliDiagramHandle *d);

/**
 * Number of vertices at `level`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum BratteliStatus bratteli_diagram_num_vertices(const struct BratteliDiagramHandle *d,
                                                  size_t level,
                                                  size_t *out);

/**
 * Writes the path counts `h_v` at `level` into `buf`. `len` is the buffer
 * capacity; the number of vertices is stored in `out_len` even when the
 * buffer is too small.
 *
 * # Safety
 * `buf` must hold `len` values; other pointers must be valid.
 */
enum BratteliStatus bratteli_diagram_path_counts(const struct BratteliDiagramHandle *d,
                                                 size_t level,
                                                 uint64_t *buf,
                                                 size_t len,
                                                 size_t *out_len);

/**
 * The ergodic measure of a stationary diagram with primitive tail.
 *
 * # Safety
 * Pointers must be valid.
 */
enum BratteliStatus bratteli_measure_ergodic(const struct BratteliDiagramHandle *d,
                                             struct BratteliMeasureHandle **out);

/**
 * # Safety
 * `m` must come from this library and not be freed twice.
 */
void bratteli_measure_free(struct BratteliMeasureHandle *m);

/**
 * Weight `p_v` of one cylinder into `vertex` at `level`, as a double.
 *
 * # Safety
 * Pointers must be valid.
 */
enum BratteliStatus bratteli_measure_weight(const struct BratteliMeasureHandle *m,
                                            size_t level,
                                            size_t vertex,
                                            double *out);

/**
 * Element from its JSON literal `{"level": n, "perms": {"v": [...]}}`.
 *
 * # Safety
 * `json` must be NUL-terminated; other pointers must be valid.
 */
enum BratteliStatus bratteli_element_from_json(const struct BratteliDiagramHandle *d,
                                               const char *json,
                                               struct BratteliElementHandle **out);

/**
 * Uniformly random element of `G_level` drawn from `seed`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum BratteliStatus bratteli_element_random(const struct BratteliDiagramHandle *d,
                                            size_t level,
                                            uint64_t seed,
                                            struct BratteliElementHandle **out);

/**
 * `a ∘ b`, with `b` applied first.
 *
 * # Safety
 * Pointers must be valid.
 */
enum BratteliStatus bratteli_element_compose(const struct BratteliElementHandle *a,
                                             const struct BratteliElementHandle *b,
                                             struct BratteliElementHandle **out);

/**
 * # Safety
 * Pointers must be valid.
 */
enum BratteliStatus bratteli_element_inverse(const struct BratteliElementHandle *a,
                                             struct BratteliElementHandle **out);

/**
 * 1 when the two elements act identically, 0 otherwise.
 *
 * # Safety
 * Pointers must be valid.
 */
enum BratteliStatus bratteli_element_equal(const struct BratteliElementHandle *a,
                                           const struct BratteliElementHandle *b,
                                           int *out);

/**
 * JSON literal of the element; free with [`bratteli_string_free`].
 *
 * # Safety
 * Pointers must be valid.
 */
enum BratteliStatus bratteli_element_to_json(const struct BratteliElementHandle *a, char **out);

/**
 * # Safety
 * `a` must come from this library and not be freed twice.
 */
void bratteli_element_free(struct BratteliElementHandle *a);

/**
 * `μ(Fix(g))`, both as a double and as text (exact fractions stay exact).
 * `text` may be NULL; otherwise free it with [`bratteli_string_free`].
 *
 * # Safety
 * Pointers other than `text` must be valid.
 */
enum BratteliStatus bratteli_fix_measure(const struct BratteliMeasureHandle *m,
                                         const struct BratteliElementHandle *g,
                                         double *value,
                                         char **text);

/**
 * Runs the command-line front end on `argv` (program name first). The
 * report goes to `report` (free with [`bratteli_string_free`]) and the
 * command's exit code to `exit_code`.
 *
 * # Safety
 * `argv` must hold `argc` NUL-terminated strings; other pointers must be
 * valid.
 */
enum BratteliStatus bratteli_run(int argc, const char *const *argv, char **report, int *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BRATTELI_H */
