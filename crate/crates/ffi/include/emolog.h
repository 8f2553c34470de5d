#ifndef EMOLOG_H
#define EMOLOG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Length of every reaction probability buffer.
 */
#define EMOLOG_N_REACTIONS 5

/**
 * Length of every emotion probability buffer.
 */
#define EMOLOG_N_EMOTIONS 6

/**
 * Outcome of a call. Anything but `Ok` leaves a message retrievable with
 * `emolog_last_error_message`.
 */
typedef enum {
  EMOLOG_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  EMOLOG_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  EMOLOG_STATUS_INVALID_UTF8 = 2,
  /**
   * Rule text did not parse.
   */
  EMOLOG_STATUS_PARSE_ERROR = 3,
  /**
   * A file was unreadable, malformed, or inconsistent with its
   * companion (checkpoint vs vocabulary).
   */
  EMOLOG_STATUS_LOAD_ERROR = 4,
  /**
   * An index was outside the handle's range.
   */
  EMOLOG_STATUS_OUT_OF_RANGE = 5,
  /**
   * The text produced no usable tokens.
   */
  EMOLOG_STATUS_EMPTY_INPUT = 6,
  /**
   * Evaluation failed.
   */
  EMOLOG_STATUS_EVAL_ERROR = 7,
} EmologStatus;

/**
 * A trained checkpoint bound to the vocabulary it was trained with.
 */
typedef struct EmologModel EmologModel;

/**
 * Rules plus their compiled penalty polynomials.
 */
typedef struct EmologRuleset EmologRuleset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on the calling thread. Never null;
 * empty before the first failure. The pointer is owned by the library and
 * stays valid until the next failing call on the same thread.
 */
const char *emolog_last_error_message(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must have been returned by an `emolog_` function documented as
 * allocating, and not freed before.
 */
void emolog_string_free(char *s);

/**
 * Canonical reaction class name for `index`, or null when out of range.
 * The pointer is static; do not free it.
 */
const char *emolog_reaction_name(uintptr_t index);

/**
 * Canonical emotion class name for `index`, or null when out of range.
 * The pointer is static; do not free it.
 */
const char *emolog_emotion_name(uintptr_t index);

/**
 * Builds the built-in eleven-rule set. Never fails; release with
 * `emolog_ruleset_free`.
 */
EmologRuleset *emolog_ruleset_default(void);

/**
 * Parses rule text (one implication per line, `#` comments) into a new
 * handle written to `*out`. On failure `*out` is null.
 *
 * # Safety
 * `text` must be NUL-terminated and `out` must be a valid pointer.
 */
EmologStatus emolog_ruleset_parse(const char *text, EmologRuleset **out);

/**
 * Number of rules in the set; 0 for a null handle.
 *
 * # Safety
 * `ruleset` must be null or a live handle from this library.
 */
uintptr_t emolog_ruleset_len(const EmologRuleset *ruleset);

/**
 * Writes the rule at `index` rendered as text (antecedent, consequents,
 * weight) to `*out`. Free with `emolog_string_free`.
 *
 * # Safety
 * `ruleset` must be a live handle and `out` a valid pointer.
 */
EmologStatus emolog_ruleset_rule_string(const EmologRuleset *ruleset, uintptr_t index, char **out);

/**
 * Writes the expanded truth polynomial of the rule at `index` to `*out`.
 * Free with `emolog_string_free`.
 *
 * # Safety
 * `ruleset` must be a live handle and `out` a valid pointer.
 */
EmologStatus emolog_ruleset_poly_string(const EmologRuleset *ruleset, uintptr_t index, char **out);

/**
 * Penalty of the single rule at `index` under the given class
 * probabilities. `p_reaction` must hold `EMOLOG_N_REACTIONS` values and
 * `p_emotion` `EMOLOG_N_EMOTIONS`.
 *
 * # Safety
 * `ruleset` must be a live handle; the probability pointers must cover
 * their documented lengths; `out` must be a valid pointer.
 */
EmologStatus emolog_ruleset_penalty(const EmologRuleset *ruleset,
                                    uintptr_t index,
                                    const double *p_reaction,
                                    const double *p_emotion,
                                    double *out);

/**
 * Weighted sum of all rule penalties under the given class probabilities,
 * written to `*out`. Buffer lengths as in `emolog_ruleset_penalty`.
 *
 * # Safety
 * Same contract as `emolog_ruleset_penalty`, minus the index.
 */
EmologStatus emolog_ruleset_constraint_term(const EmologRuleset *ruleset,
                                            const double *p_reaction,
                                            const double *p_emotion,
                                            double *out);

/**
 * Releases a ruleset handle. Null is ignored.
 *
 * # Safety
 * `ruleset` must be null or a live handle, and must not be used after.
 */
void emolog_ruleset_free(EmologRuleset *ruleset);

/**
 * Loads a checkpoint and its vocabulary, verifying that the vocabulary
 * hash recorded in the checkpoint matches the file. On success a handle
 * is written to `*out`; release with `emolog_model_free`.
 *
 * # Safety
 * Both paths must be NUL-terminated strings and `out` a valid pointer.
 */
EmologStatus emolog_model_load(const char *checkpoint_path,
                               const char *vocab_path,
                               EmologModel **out);

/**
 * Classifies `text` and writes both probability distributions:
 * `p_reaction` receives `EMOLOG_N_REACTIONS` values, `p_emotion`
 * `EMOLOG_N_EMOTIONS`. Texts that normalize to nothing (only punctuation
 * or whitespace) yield `EmptyInput` and leave the buffers untouched.
 *
 * # Safety
 * `model` must be a live handle, `text` NUL-terminated, and the output
 * buffers writable for their documented lengths.
 */
EmologStatus emolog_model_predict(const EmologModel *model,
                                  const char *text,
                                  double *p_reaction,
                                  double *p_emotion);

/**
 * Releases a model handle. Null is ignored.
 *
 * # Safety
 * `model` must be null or a live handle, and must not be used after.
 */
void emolog_model_free(EmologModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EMOLOG_H */
