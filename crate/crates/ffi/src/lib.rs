//! C ABI for the one-shot anti-spoofing scorer.
//!
//! The surface is deliberately small: open a trained checkpoint as an
//! opaque [`QsScorer`] handle, register labeled support utterances, then
//! score WAV files against them. Everything a binding needs crosses the
//! boundary as plain C types; the generated header lives in
//! `include/quickspoof.h`.
//!
//! # Conventions
//!
//! * Every function returns a [`QsStatus`]; `QS_STATUS_OK` is zero.
//! * Out-parameters are written only on `QS_STATUS_OK`.
//! * On failure, [`qs_last_error_message`] returns a human-readable
//!   description. The string is thread-local and valid until the next
//!   `qs_*` call on the same thread.
//! * Handles are freed exactly once with [`qs_scorer_free`]; passing the
//!   same pointer twice is undefined behavior, as in any C API.
//! * All functions catch Rust panics and convert them to
//!   `QS_STATUS_INTERNAL_PANIC`; panics never unwind across the boundary.
//!
//! # Thread safety
//!
//! A `QsScorer` may be shared across threads only with external
//! synchronization (treat it as `const` after the support set is built, or
//! guard it with a mutex).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use quickspoof::audio;
use quickspoof::features::{FeatureExtractor, FeatureMap};
use quickspoof::model::{Embedding, ModelCheckpoint};
use quickspoof::protocol::{classify_query, DecisionRule, Label};
use quickspoof::Error;

/// Status code returned by every FFI function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// File or data-format error (checkpoint, WAV container, manifest).
    IoError = 3,
    /// Audio decoding or signal-processing error.
    AudioError = 4,
    /// Model or checkpoint error.
    ModelError = 5,
    /// Scoring-protocol error (e.g. no bonafide support registered).
    ProtocolError = 6,
    /// Invalid configuration or argument value.
    ConfigError = 7,
    /// A caller-provided buffer has the wrong length.
    BufferTooSmall = 8,
    /// An internal panic was caught at the boundary.
    InternalPanic = 9,
}

/// Classification decision for one utterance.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsLabel {
    /// Genuine speech.
    Bonafide = 0,
    /// Spoofed speech.
    Spoof = 1,
}

/// Decision rule applied to the distance-to-bonafide score.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsRule {
    /// Nearest support embedding wins; ties go to bonafide.
    Nearest = 0,
    /// Spoof when the score exceeds the caller's threshold.
    Threshold = 1,
}

/// Opaque scorer handle: a loaded checkpoint plus its support set.
pub struct QsScorer {
    checkpoint: ModelCheckpoint,
    extractor: FeatureExtractor,
    support: Vec<(Label, Embedding)>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(err: &Error) -> QsStatus {
    let mut msg = err.to_string();
    let mut source = std::error::Error::source(err);
    while let Some(s) = source {
        msg.push_str(": ");
        msg.push_str(&s.to_string());
        source = s.source();
    }
    store_message(&msg);
    status_for(err)
}

fn store_message(msg: &str) {
    let sanitized = msg.replace('\0', "\\0");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::default();
    });
}

/// Map library errors onto the coarse C status families.
fn status_for(err: &Error) -> QsStatus {
    use Error::*;
    match err {
        InvalidConfig(_) => QsStatus::ConfigError,
        Io { .. } | UnreadableFile { .. } | MalformedLine { .. }
        | DuplicateUttId { .. } | InvalidManifest { .. } | Json { .. }
        | Csv { .. } => QsStatus::IoError,
        UnsupportedEncoding { .. } | EmptyAudio { .. } | AllSilent { .. }
        | AllZero | InvalidBand { .. } | WrongLength { .. }
        | ShapeMismatch { .. } => QsStatus::AudioError,
        NonFiniteGradient { .. } | BatchTooSmall { .. } | NoForwardRecorded
        | CorruptCheckpoint { .. } | ModelNotLoaded => QsStatus::ModelError,
        InsufficientSpeakers { .. } | EmptySupport { .. }
        | NoBonafideSupport | ClassMissing { .. } | LengthMismatch { .. }
        | EmptyRecords { .. } | OneClassOnly { .. } => QsStatus::ProtocolError,
    }
}

/// Run a fallible body with panic containment and error capture.
fn guarded<F: FnOnce() -> Result<(), QsStatus>>(body: F) -> QsStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => QsStatus::Ok,
        Ok(Err(status)) => status,
        Err(panic) => {
            let what = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            store_message(&format!("internal panic: {what}"));
            QsStatus::InternalPanic
        }
    }
}

/// Convert a C string argument, reporting null/UTF-8 problems.
///
/// # Safety
/// `ptr` must be null or point to a NUL-terminated string.
unsafe fn c_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, QsStatus> {
    if ptr.is_null() {
        store_message(&format!("{what} is null"));
        return Err(QsStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        store_message(&format!("{what} is not valid UTF-8"));
        QsStatus::InvalidUtf8
    })
}

fn require<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, QsStatus> {
    // Safety contract is carried by each entry point's docs.
    unsafe { ptr.as_mut() }.ok_or_else(|| {
        store_message(&format!("{what} is null"));
        QsStatus::NullArgument
    })
}

/// WAV file → embedding under the scorer's own preprocessing parameters.
fn embed_wav(scorer: &QsScorer, wav: &str) -> Result<Embedding, QsStatus> {
    let run = || -> quickspoof::Result<Embedding> {
        let clip = audio::read_wav(Path::new(wav))?;
        let clip = audio::preprocess(&clip, &scorer.checkpoint.prep)?;
        let values = scorer.extractor.extract_raw(&clip)?;
        let utt_id = Path::new(wav)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| wav.to_string());
        scorer.checkpoint.embed_features(&FeatureMap::new(values, utt_id)?)
    };
    run().map_err(|e| set_last_error(&e))
}

/// Version string of the library, as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the most recent failure on this thread.
///
/// Returns an empty string when the last call succeeded. The pointer is
/// valid until the next `qs_*` call on the same thread.
#[no_mangle]
pub extern "C" fn qs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Load a trained checkpoint and create a scorer with an empty support set.
///
/// On success `*out_scorer` receives an owned handle that must be released
/// with [`qs_scorer_free`].
///
/// # Safety
/// `checkpoint_path` must be null or NUL-terminated; `out_scorer` must be
/// null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qs_scorer_open(
    checkpoint_path: *const c_char,
    out_scorer: *mut *mut QsScorer,
) -> QsStatus {
    guarded(|| {
        let path = c_str(checkpoint_path, "checkpoint_path")?;
        if out_scorer.is_null() {
            store_message("out_scorer is null");
            return Err(QsStatus::NullArgument);
        }
        let checkpoint =
            ModelCheckpoint::load(Path::new(path)).map_err(|e| set_last_error(&e))?;
        let extractor = FeatureExtractor::new(&checkpoint.prep, &checkpoint.spectral)
            .map_err(|e| set_last_error(&e))?;
        let scorer = Box::new(QsScorer {
            checkpoint,
            extractor,
            support: Vec::new(),
        });
        out_scorer.write(Box::into_raw(scorer));
        Ok(())
    })
}

/// Release a scorer handle. Null is a no-op.
///
/// # Safety
/// `scorer` must be null or a pointer obtained from [`qs_scorer_open`] that
/// has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn qs_scorer_free(scorer: *mut QsScorer) {
    if !scorer.is_null() {
        drop(Box::from_raw(scorer));
    }
}

/// Embed one WAV file and register it as a labeled support utterance.
///
/// # Safety
/// `scorer` must be a live handle; `wav_path` must be null or
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn qs_scorer_add_support(
    scorer: *mut QsScorer,
    wav_path: *const c_char,
    label: QsLabel,
) -> QsStatus {
    guarded(|| {
        let scorer = require(scorer, "scorer")?;
        let wav = c_str(wav_path, "wav_path")?;
        let emb = embed_wav(scorer, wav)?;
        let label = match label {
            QsLabel::Bonafide => Label::Bonafide,
            QsLabel::Spoof => Label::Spoof,
        };
        scorer.support.push((label, emb));
        Ok(())
    })
}

/// Remove every registered support utterance.
///
/// # Safety
/// `scorer` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qs_scorer_clear_support(scorer: *mut QsScorer) -> QsStatus {
    guarded(|| {
        let scorer = require(scorer, "scorer")?;
        scorer.support.clear();
        Ok(())
    })
}

/// Number of support utterances currently registered.
///
/// # Safety
/// `scorer` must be a live handle; `out_len` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qs_scorer_support_len(
    scorer: *mut QsScorer,
    out_len: *mut usize,
) -> QsStatus {
    guarded(|| {
        let scorer = require(scorer, "scorer")?;
        let out = require(out_len, "out_len")?;
        *out = scorer.support.len();
        Ok(())
    })
}

/// Dimensionality of the embeddings this scorer produces.
///
/// # Safety
/// `scorer` must be a live handle; `out_dim` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qs_scorer_embedding_dim(
    scorer: *mut QsScorer,
    out_dim: *mut usize,
) -> QsStatus {
    guarded(|| {
        let scorer = require(scorer, "scorer")?;
        let out = require(out_dim, "out_dim")?;
        *out = scorer.checkpoint.net.dims.embed_dim;
        Ok(())
    })
}

/// Embed one WAV file into a caller-provided buffer.
///
/// `out_len` must equal the scorer's embedding dimensionality (see
/// [`qs_scorer_embedding_dim`]).
///
/// # Safety
/// `scorer` must be a live handle; `wav_path` null or NUL-terminated;
/// `out` null or valid for `out_len` float writes.
#[no_mangle]
pub unsafe extern "C" fn qs_scorer_embed_wav(
    scorer: *mut QsScorer,
    wav_path: *const c_char,
    out: *mut f32,
    out_len: usize,
) -> QsStatus {
    guarded(|| {
        let scorer = require(scorer, "scorer")?;
        let wav = c_str(wav_path, "wav_path")?;
        if out.is_null() {
            store_message("out is null");
            return Err(QsStatus::NullArgument);
        }
        let dim = scorer.checkpoint.net.dims.embed_dim;
        if out_len != dim {
            store_message(&format!(
                "output buffer holds {out_len} floats; the embedding needs {dim}"
            ));
            return Err(QsStatus::BufferTooSmall);
        }
        let emb = embed_wav(scorer, wav)?;
        std::ptr::copy_nonoverlapping(emb.as_slice().as_ptr(), out, dim);
        Ok(())
    })
}

/// Score one WAV file against the registered support set.
///
/// Writes the distance-to-bonafide score and the decision under `rule`
/// (`threshold` is consulted only by the threshold rule). The support set
/// must contain at least one bonafide utterance.
///
/// # Safety
/// `scorer` must be a live handle; `wav_path` null or NUL-terminated;
/// `out_score`/`out_label` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qs_scorer_score_wav(
    scorer: *mut QsScorer,
    wav_path: *const c_char,
    rule: QsRule,
    threshold: f64,
    out_score: *mut f64,
    out_label: *mut QsLabel,
) -> QsStatus {
    guarded(|| {
        let scorer = require(scorer, "scorer")?;
        let wav = c_str(wav_path, "wav_path")?;
        let score_slot = require(out_score, "out_score")?;
        let label_slot = require(out_label, "out_label")?;
        let rule = match rule {
            QsRule::Nearest => DecisionRule::Nearest,
            QsRule::Threshold => DecisionRule::Threshold,
        };
        let query = embed_wav(scorer, wav)?;
        let decision = classify_query(&query, &scorer.support, rule, threshold)
            .map_err(|e| set_last_error(&e))?;
        *score_slot = decision.score;
        *label_slot = match decision.label {
            Label::Bonafide => QsLabel::Bonafide,
            Label::Spoof => QsLabel::Spoof,
        };
        Ok(())
    })
}
