//! Crate-wide error type.
//!
//! Every fallible operation in the library returns [`Result`]. Variants are
//! grouped by pipeline stage; each carries enough context (paths, shapes,
//! parameter names) to diagnose a failure from the message alone.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All error conditions surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // ---- audio input / preprocessing -----------------------------------
    /// The file could not be opened or decoded at the container level.
    #[error("unreadable file {path}: {reason}")]
    UnreadableFile { path: PathBuf, reason: String },

    /// The file decoded, but its sample encoding is not supported.
    #[error("unsupported audio encoding in {path}: {detail}")]
    UnsupportedEncoding { path: PathBuf, detail: String },

    /// An operation received a zero-length signal.
    #[error("empty audio signal{}", ctx_suffix(.context))]
    EmptyAudio { context: String },

    /// Voice-activity detection removed every frame.
    #[error("all frames fell below the VAD threshold ({threshold_db} dB); nothing left to process")]
    AllSilent { threshold_db: f64 },

    /// Amplitude normalisation of an all-zero signal is undefined.
    #[error("cannot normalise an all-zero signal")]
    AllZero,

    /// Band edges must satisfy 0 < low < high < Nyquist.
    #[error("invalid band-pass range {low_hz}..{high_hz} Hz at sample rate {sample_rate} Hz")]
    InvalidBand {
        low_hz: f64,
        high_hz: f64,
        sample_rate: u32,
    },

    // ---- feature extraction / numerics ----------------------------------
    /// A signal or tensor did not have the length the caller promised.
    #[error("wrong length{}: expected {expected}, got {actual}", ctx_suffix(.context))]
    WrongLength {
        context: String,
        expected: usize,
        actual: usize,
    },

    /// Incompatible tensor shapes.
    #[error("shape mismatch{}: expected {expected}, got {actual}", ctx_suffix(.context))]
    ShapeMismatch {
        context: String,
        expected: String,
        actual: String,
    },

    /// A gradient contained NaN or infinity; the optimizer refuses to apply it.
    #[error("non-finite gradient in parameter `{param}` at step {step}")]
    NonFiniteGradient { param: String, step: u64 },

    /// Batch normalization in train mode needs at least two rows.
    #[error("batch of {n} row(s) is too small for train-mode batch normalization (need ≥ 2)")]
    BatchTooSmall { n: usize },

    // ---- model / checkpoints ---------------------------------------------
    /// Backward was requested without a recorded forward pass.
    #[error("backward called without a recorded forward pass")]
    NoForwardRecorded,

    /// A checkpoint failed structural validation.
    #[error("corrupt checkpoint {path}: {reason}")]
    CorruptCheckpoint { path: PathBuf, reason: String },

    /// An operation that needs a loaded model was called before loading one.
    #[error("no model loaded")]
    ModelNotLoaded,

    // ---- episodic protocol -----------------------------------------------
    /// Not enough distinct speakers to build disjoint train/support/query sets.
    #[error("insufficient speakers for a disjoint split: {detail}")]
    InsufficientSpeakers { detail: String },

    /// The support set is empty (or empty for a class that queries need).
    #[error("empty support set{}", ctx_suffix(.context))]
    EmptySupport { context: String },

    /// The threshold rule needs at least one bonafide support embedding.
    #[error("support set has no bonafide entry; the distance-to-bonafide score is undefined")]
    NoBonafideSupport,

    /// Triplet sampling needs both classes present in the training pool.
    #[error("training pool is missing a class: {detail}")]
    ClassMissing { detail: String },

    /// Paired slices (labels vs. scores, etc.) differ in length.
    #[error("length mismatch{}: {left} vs {right}", ctx_suffix(.context))]
    LengthMismatch {
        context: String,
        left: usize,
        right: usize,
    },

    // ---- scoring ----------------------------------------------------------
    /// Metrics were requested over an empty record set.
    #[error("no records to score{}", ctx_suffix(.context))]
    EmptyRecords { context: String },

    /// EER needs both classes present.
    #[error("cannot compute EER: every record has the same label ({label})")]
    OneClassOnly { label: String },

    // ---- corpus / manifests ------------------------------------------------
    /// A protocol or manifest line did not parse.
    #[error("malformed line {line_no} in {path}: {detail}")]
    MalformedLine {
        path: PathBuf,
        line_no: usize,
        detail: String,
    },

    /// Two manifest entries share an utterance id.
    #[error("duplicate utterance id `{id}` in {path}")]
    DuplicateUttId { id: String, path: PathBuf },

    /// Manifest validation found fatal problems (details already reported).
    #[error("manifest validation failed: {errors} error(s), {warnings} warning(s)")]
    InvalidManifest { errors: usize, warnings: usize },

    // ---- configuration / environment ---------------------------------------
    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Generic I/O failure with the path that caused it.
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// JSON (de)serialisation failure.
    #[error("JSON error{}: {source}", ctx_suffix(.context))]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    /// CSV (de)serialisation failure.
    #[error("CSV error{}: {source}", ctx_suffix(.context))]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// Attach a path to a raw I/O error.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a context string to a JSON error.
    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    /// Attach a context string to a CSV error.
    pub fn csv(context: impl Into<String>, source: csv::Error) -> Self {
        Error::Csv {
            context: context.into(),
            source,
        }
    }
}

/// Render `" (ctx)"` when a context string is present, `""` otherwise.
fn ctx_suffix(context: &str) -> String {
    if context.is_empty() {
        String::new()
    } else {
        format!(" ({context})")
    }
}
