/* C interface to the quickspoof one-shot anti-spoofing scorer. */

#ifndef QUICKSPOOF_H
#define QUICKSPOOF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every FFI function.
 */
typedef enum QsStatus {
  /**
   * Success.
   */
  QS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  QS_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  QS_STATUS_INVALID_UTF8 = 2,
  /**
   * File or data-format error (checkpoint, WAV container, manifest).
   */
  QS_STATUS_IO_ERROR = 3,
  /**
   * Audio decoding or signal-processing error.
   */
  QS_STATUS_AUDIO_ERROR = 4,
  /**
   * Model or checkpoint error.
   */
  QS_STATUS_MODEL_ERROR = 5,
  /**
   * Scoring-protocol error (e.g. no bonafide support registered).
   */
  QS_STATUS_PROTOCOL_ERROR = 6,
  /**
   * Invalid configuration or argument value.
   */
  QS_STATUS_CONFIG_ERROR = 7,
  /**
   * A caller-provided buffer has the wrong length.
   */
  QS_STATUS_BUFFER_TOO_SMALL = 8,
  /**
   * An internal panic was caught at the boundary.
   */
  QS_STATUS_INTERNAL_PANIC = 9,
} QsStatus;

/**
 * Classification decision for one utterance.
 */
typedef enum QsLabel {
  /**
   * Genuine speech.
   */
  QS_LABEL_BONAFIDE = 0,
  /**
   * Spoofed speech.
   */
  QS_LABEL_SPOOF = 1,
} QsLabel;

/**
 * Decision rule applied to the distance-to-bonafide score.
 */
typedef enum QsRule {
  /**
   * Nearest support embedding wins; ties go to bonafide.
   */
  QS_RULE_NEAREST = 0,
  /**
   * Spoof when the score exceeds the caller's threshold.
   */
  QS_RULE_THRESHOLD = 1,
} QsRule;

/**
 * Opaque scorer handle: a loaded checkpoint plus its support set.
 */
typedef struct QsScorer QsScorer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string of the library, as a static NUL-terminated string.
 */
const char *qs_version(void);

/**
 * Message describing the most recent failure on this thread.
 *
 * Returns an empty string when the last call succeeded. The pointer is
 * valid until the next `qs_*` call on the same thread.
 */
const char *qs_last_error_message(void);

/**
 * Load a trained checkpoint and create a scorer with an empty support set.
 *
 * On success `*out_scorer` receives an owned handle that must be released
 * with [`qs_scorer_free`].
 *
 * # Safety
 * `checkpoint_path` must be null or NUL-terminated; `out_scorer` must be
 * null or valid for writes.
 */
enum QsStatus qs_scorer_open(const char *checkpoint_path, struct QsScorer **out_scorer);

/**
 * Release a scorer handle. Null is a no-op.
 *
 * # Safety
 * `scorer` must be null or a pointer obtained from [`qs_scorer_open`] that
 * has not been freed yet.
 */
void qs_scorer_free(struct QsScorer *scorer);

/**
 * Embed one WAV file and register it as a labeled support utterance.
 *
 * # Safety
 * `scorer` must be a live handle; `wav_path` must be null or
 * NUL-terminated.
 */
enum QsStatus qs_scorer_add_support(struct QsScorer *scorer,
                                    const char *wav_path,
                                    enum QsLabel label);

/**
 * Remove every registered support utterance.
 *
 * # Safety
 * `scorer` must be a live handle.
 */
enum QsStatus qs_scorer_clear_support(struct QsScorer *scorer);

/**
 * Number of support utterances currently registered.
 *
 * # Safety
 * `scorer` must be a live handle; `out_len` null or valid for writes.
 */
enum QsStatus qs_scorer_support_len(struct QsScorer *scorer, size_t *out_len);

/**
 * Dimensionality of the embeddings this scorer produces.
 *
 * # Safety
 * `scorer` must be a live handle; `out_dim` null or valid for writes.
 */
enum QsStatus qs_scorer_embedding_dim(struct QsScorer *scorer, size_t *out_dim);

/**
 * Embed one WAV file into a caller-provided buffer.
 *
 * `out_len` must equal the scorer's embedding dimensionality (see
 * [`qs_scorer_embedding_dim`]).
 *
 * # Safety
 * `scorer` must be a live handle; `wav_path` null or NUL-terminated;
 * `out` null or valid for `out_len` float writes.
 */
enum QsStatus qs_scorer_embed_wav(struct QsScorer *scorer,
                                  const char *wav_path,
                                  float *out,
                                  size_t out_len);

/**
 * Score one WAV file against the registered support set.
 *
 * Writes the distance-to-bonafide score and the decision under `rule`
 * (`threshold` is consulted only by the threshold rule). The support set
 * must contain at least one bonafide utterance.
 *
 * # Safety
 * `scorer` must be a live handle; `wav_path` null or NUL-terminated;
 * `out_score`/`out_label` null or valid for writes.
 */
enum QsStatus qs_scorer_score_wav(struct QsScorer *scorer,
                                  const char *wav_path,
                                  enum QsRule rule,
                                  double threshold,
                                  double *out_score,
                                  enum QsLabel *out_label);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUICKSPOOF_H */
