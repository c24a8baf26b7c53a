//! Exercises the C entry points exactly as a foreign caller would:
//! through raw pointers, status codes, and the thread-local error string.

use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};

use quickspoof::audio::{self, PrepConfig};
use quickspoof::features::{FeatureExtractor, NormStats, SpectralConfig};
use quickspoof::model::{ArchDims, EmbedderNet, ModelCheckpoint};
use quickspoof::nn::TrainConfig;
use quickspoof::seed;

use quickspoof_ffi::{
    qs_last_error_message, qs_scorer_add_support, qs_scorer_clear_support,
    qs_scorer_embed_wav, qs_scorer_embedding_dim, qs_scorer_free,
    qs_scorer_open, qs_scorer_score_wav, qs_scorer_support_len, qs_version,
    QsLabel, QsRule, QsScorer, QsStatus,
};

/// Tiny untrained checkpoint plus two WAVs, enough to drive the API.
struct Fixture {
    _dir: tempfile::TempDir,
    checkpoint: PathBuf,
    bona_wav: PathBuf,
    spoof_wav: PathBuf,
    embed_dim: usize,
}

fn write_sine(path: &Path, freqs: &[f64]) {
    let rate = 16_000u32;
    // Five seconds: exactly the preprocessing target length, so no
    // trailing zero-padding erodes the recurrent state.
    let n = 5 * rate as usize;
    let samples: Vec<f32> = (0..n)
        .map(|i| {
            let t = i as f64 / f64::from(rate);
            let v: f64 = freqs
                .iter()
                .map(|f| (std::f64::consts::TAU * f * t).sin())
                .sum();
            (0.5 * v / freqs.len() as f64) as f32
        })
        .collect();
    audio::write_wav_pcm16(path, &samples, rate).unwrap();
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let bona_wav = dir.path().join("bona.wav");
    let spoof_wav = dir.path().join("spoof.wav");
    write_sine(&bona_wav, &[220.0]);
    write_sine(&spoof_wav, &[220.0, 3_100.0]);

    let prep = PrepConfig::default();
    let spectral = SpectralConfig::default();
    let arch = ArchDims {
        input_dim: 48,
        lstm1: 8,
        lstm2: 8,
        dense1: 16,
        dense2: 8,
        embed_dim: 4,
    };
    let extractor = FeatureExtractor::new(&prep, &spectral).unwrap();
    let clip = audio::read_wav(&bona_wav).unwrap();
    let clip = audio::preprocess(&clip, &prep).unwrap();
    let map = extractor.extract_raw(&clip).unwrap();
    let stats = NormStats::from_raw_maps([&map]).unwrap();

    let net: EmbedderNet<f32> =
        EmbedderNet::new(arch, 0.99, &mut seed::rng(11, "ffi-fixture")).unwrap();
    let checkpoint_path = dir.path().join("model.qsnm");
    ModelCheckpoint {
        net,
        stats,
        prep,
        spectral,
        train: TrainConfig::default(),
        step: 0,
    }
    .save(&checkpoint_path)
    .unwrap();

    Fixture {
        _dir: dir,
        checkpoint: checkpoint_path,
        bona_wav,
        spoof_wav,
        embed_dim: 4,
    }
}

fn cpath(path: &Path) -> CString {
    CString::new(path.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe {
        CStr::from_ptr(qs_last_error_message())
            .to_string_lossy()
            .into_owned()
    }
}

fn open(fx: &Fixture) -> *mut QsScorer {
    let mut scorer: *mut QsScorer = std::ptr::null_mut();
    let status =
        unsafe { qs_scorer_open(cpath(&fx.checkpoint).as_ptr(), &mut scorer) };
    assert_eq!(status, QsStatus::Ok, "open failed: {}", last_error());
    assert!(!scorer.is_null());
    scorer
}

#[test]
fn version_is_a_static_c_string() {
    let v = unsafe { CStr::from_ptr(qs_version()) }.to_str().unwrap();
    assert!(v.contains('.'), "unexpected version string {v:?}");
}

#[test]
fn full_lifecycle_open_support_score_free() {
    let fx = fixture();
    let scorer = open(&fx);
    unsafe {
        assert_eq!(
            qs_scorer_add_support(scorer, cpath(&fx.bona_wav).as_ptr(), QsLabel::Bonafide),
            QsStatus::Ok,
            "{}",
            last_error(),
        );
        assert_eq!(
            qs_scorer_add_support(scorer, cpath(&fx.spoof_wav).as_ptr(), QsLabel::Spoof),
            QsStatus::Ok,
            "{}",
            last_error(),
        );

        let mut len = 0usize;
        assert_eq!(qs_scorer_support_len(scorer, &mut len), QsStatus::Ok);
        assert_eq!(len, 2);

        let mut dim = 0usize;
        assert_eq!(qs_scorer_embedding_dim(scorer, &mut dim), QsStatus::Ok);
        assert_eq!(dim, fx.embed_dim);

        let mut emb = vec![0.0f32; dim];
        assert_eq!(
            qs_scorer_embed_wav(scorer, cpath(&fx.bona_wav).as_ptr(), emb.as_mut_ptr(), dim),
            QsStatus::Ok,
            "{}",
            last_error(),
        );
        assert!(emb.iter().all(|v| v.is_finite() && *v > 0.0 && *v < 1.0));

        // Scoring a WAV that is itself the bonafide support: distance 0.
        let mut score = f64::NAN;
        let mut label = QsLabel::Spoof;
        assert_eq!(
            qs_scorer_score_wav(
                scorer,
                cpath(&fx.bona_wav).as_ptr(),
                QsRule::Nearest,
                0.0,
                &mut score,
                &mut label,
            ),
            QsStatus::Ok,
            "{}",
            last_error(),
        );
        assert_eq!(score, 0.0);
        assert_eq!(label, QsLabel::Bonafide);

        // The threshold rule with t = 0 calls anything strictly farther
        // than the bonafide support a spoof.
        assert_eq!(
            qs_scorer_score_wav(
                scorer,
                cpath(&fx.spoof_wav).as_ptr(),
                QsRule::Threshold,
                0.0,
                &mut score,
                &mut label,
            ),
            QsStatus::Ok,
            "{}",
            last_error(),
        );
        assert!(score > 0.0);
        assert_eq!(label, QsLabel::Spoof);

        assert_eq!(qs_scorer_clear_support(scorer), QsStatus::Ok);
        let mut len = usize::MAX;
        assert_eq!(qs_scorer_support_len(scorer, &mut len), QsStatus::Ok);
        assert_eq!(len, 0);

        qs_scorer_free(scorer);
    }
}

#[test]
fn null_arguments_are_rejected_not_dereferenced() {
    let fx = fixture();
    let mut scorer: *mut QsScorer = std::ptr::null_mut();
    unsafe {
        assert_eq!(
            qs_scorer_open(std::ptr::null(), &mut scorer),
            QsStatus::NullArgument,
        );
        assert!(last_error().contains("checkpoint_path"));

        assert_eq!(
            qs_scorer_open(cpath(&fx.checkpoint).as_ptr(), std::ptr::null_mut()),
            QsStatus::NullArgument,
        );

        assert_eq!(
            qs_scorer_add_support(
                std::ptr::null_mut(),
                cpath(&fx.bona_wav).as_ptr(),
                QsLabel::Bonafide,
            ),
            QsStatus::NullArgument,
        );
        assert!(last_error().contains("scorer"));

        // Freeing null is a documented no-op.
        qs_scorer_free(std::ptr::null_mut());
    }
}

#[test]
fn io_model_and_protocol_failures_have_distinct_statuses() {
    let fx = fixture();
    unsafe {
        // Nonexistent checkpoint: I/O family, message names the path.
        let mut scorer: *mut QsScorer = std::ptr::null_mut();
        let missing = fx.checkpoint.with_file_name("nope.qsnm");
        assert_eq!(
            qs_scorer_open(cpath(&missing).as_ptr(), &mut scorer),
            QsStatus::IoError,
        );
        assert!(last_error().contains("nope.qsnm"), "{}", last_error());

        // Garbage bytes: structurally corrupt checkpoint, model family.
        let garbage = fx.checkpoint.with_file_name("garbage.qsnm");
        std::fs::write(&garbage, b"not a checkpoint").unwrap();
        assert_eq!(
            qs_scorer_open(cpath(&garbage).as_ptr(), &mut scorer),
            QsStatus::ModelError,
        );

        // Spoof-only support: scoring needs a bonafide reference.
        let scorer = open(&fx);
        assert_eq!(
            qs_scorer_add_support(scorer, cpath(&fx.spoof_wav).as_ptr(), QsLabel::Spoof),
            QsStatus::Ok,
        );
        let mut score = 0.0f64;
        let mut label = QsLabel::Bonafide;
        assert_eq!(
            qs_scorer_score_wav(
                scorer,
                cpath(&fx.bona_wav).as_ptr(),
                QsRule::Nearest,
                0.0,
                &mut score,
                &mut label,
            ),
            QsStatus::ProtocolError,
        );
        assert!(last_error().contains("bonafide"), "{}", last_error());
        qs_scorer_free(scorer);
    }
}

#[test]
fn wrong_buffer_length_is_reported_before_any_work() {
    let fx = fixture();
    let scorer = open(&fx);
    unsafe {
        let mut emb = vec![0.0f32; fx.embed_dim - 1];
        assert_eq!(
            qs_scorer_embed_wav(
                scorer,
                cpath(&fx.bona_wav).as_ptr(),
                emb.as_mut_ptr(),
                emb.len(),
            ),
            QsStatus::BufferTooSmall,
        );
        assert!(last_error().contains("floats"), "{}", last_error());
        qs_scorer_free(scorer);
    }
}

#[test]
fn invalid_utf8_path_is_reported() {
    let fx = fixture();
    let scorer = open(&fx);
    let bad: &[u8] = &[0xFF, 0xFE, 0x00];
    unsafe {
        assert_eq!(
            qs_scorer_add_support(
                scorer,
                bad.as_ptr().cast::<c_char>(),
                QsLabel::Bonafide,
            ),
            QsStatus::InvalidUtf8,
        );
        qs_scorer_free(scorer);
    }
}

#[test]
fn success_clears_the_previous_error_message() {
    let fx = fixture();
    unsafe {
        let mut scorer: *mut QsScorer = std::ptr::null_mut();
        assert_eq!(
            qs_scorer_open(std::ptr::null(), &mut scorer),
            QsStatus::NullArgument,
        );
        assert!(!last_error().is_empty());

        let scorer = open(&fx);
        assert!(last_error().is_empty());
        qs_scorer_free(scorer);
    }
}
