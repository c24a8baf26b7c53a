//! `quickspoof` — one-shot audio anti-spoofing from the command line.
//!
//! Subcommands cover the whole pipeline:
//!
//! * `gen-toy`    synthesize the deterministic toy corpus
//! * `featurize`  cache fused feature maps for every manifest entry
//! * `train`      fit the triplet embedder and write a checkpoint
//! * `evaluate`   score a speaker-disjoint query set and write reports
//! * `score`      classify one WAV against a support manifest
//! * `validate`   sanity-check a manifest without touching audio
//!
//! Every command is deterministic given `(config, seed, inputs)`: parallel
//! workers only ever compute per-utterance results that are collected in
//! manifest order, so `--jobs` changes wall time, never bytes.
//!
//! Configuration comes from an optional JSON file (`--config`) over which
//! individual flags win. The effective merged configuration is persisted
//! next to every artifact (cache dir, checkpoint, report dir) so a run can
//! be reproduced from its outputs alone.
//!
//! Exit codes
//! ----------
//! | code | meaning                                         |
//! |------|-------------------------------------------------|
//! | 0    | success (for `score`: bonafide decision)        |
//! | 1    | invalid configuration                           |
//! | 2    | command-line usage error (from the parser)      |
//! | 3    | `score` classified the utterance as spoof       |
//! | 4    | I/O or data-file error (WAV, manifest, cache)   |
//! | 5    | audio/DSP processing error                      |
//! | 6    | model or checkpoint error                       |
//! | 7    | protocol/scoring error (splits, support, EER)   |

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use quickspoof::audio;
use quickspoof::config::RunConfig;
use quickspoof::corpus::{
    generate_toy_corpus, read_manifest_csv, validate_manifest, Attack, Manifest,
    ToySpec,
};
use quickspoof::features::{
    read_feature_cache, write_feature_cache, FeatureExtractor, FeatureMap,
};
use quickspoof::metrics::{
    build_eval_report, write_det_csv, write_group_csv, write_report_json,
};
use quickspoof::model::ModelCheckpoint;
use quickspoof::protocol::{
    evaluate, split_dataset, write_query_records_csv, DecisionRule, Label,
    Utterance,
};
use quickspoof::trainer::{write_train_log_csv, Trainer};
use quickspoof::{Error, Result};

/// Exit code for a spoof decision from `score`.
const EXIT_SPOOF: u8 = 3;
/// Exit code for I/O and data-file failures.
const EXIT_IO: u8 = 4;
/// Exit code for audio/DSP failures.
const EXIT_AUDIO: u8 = 5;
/// Exit code for model/checkpoint failures.
const EXIT_MODEL: u8 = 6;
/// Exit code for protocol/scoring failures.
const EXIT_PROTOCOL: u8 = 7;

#[derive(Parser)]
#[command(
    name = "quickspoof",
    version,
    about = "One-shot audio anti-spoofing: corpus, features, training, scoring",
    propagate_version = true
)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Force single-threaded, strictly ordered execution.
    ///
    /// Outputs are byte-deterministic either way; this flag additionally
    /// fixes the *order* of progress and error lines.
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the deterministic toy corpus (WAVs + manifest.csv).
    GenToy(GenToyArgs),
    /// Extract and cache fused feature maps for every manifest entry.
    Featurize(ConfigArgs),
    /// Train the triplet embedder and write checkpoint + training log.
    Train(ConfigArgs),
    /// Score the query split against the support set and write reports.
    Evaluate(ConfigArgs),
    /// Classify a single WAV against a support manifest.
    Score(ScoreArgs),
    /// Check a manifest for structural problems without reading audio.
    Validate(ValidateArgs),
}

/// Configuration file plus per-run overrides (flags win over the file).
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// JSON run-configuration file; omitted fields use defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed for splits, sampling, initialization.
    #[arg(long)]
    seed: Option<u64>,

    /// Manifest CSV (utt_id, speaker_id, label, attack_id, path).
    #[arg(long)]
    manifest: Option<PathBuf>,

    /// Root directory audio paths are resolved against.
    #[arg(long)]
    audio_root: Option<PathBuf>,

    /// Directory holding cached feature maps.
    #[arg(long, env = "QSN_CACHE_DIR")]
    cache_dir: Option<PathBuf>,

    /// Checkpoint path (output of `train`, input of `evaluate`/`score`).
    #[arg(long)]
    checkpoint: Option<PathBuf>,

    /// Directory for evaluation reports.
    #[arg(long)]
    report_dir: Option<PathBuf>,

    /// Decision rule for query classification.
    #[arg(long, value_enum)]
    rule: Option<RuleArg>,

    /// Distance threshold for the threshold rule.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct GenToyArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,

    /// Number of synthetic speakers.
    #[arg(long, default_value_t = 12)]
    speakers: usize,

    /// Bonafide utterances per speaker (each spawns one spoof per attack).
    #[arg(long, default_value_t = 20)]
    utts: usize,

    /// Attack transforms to synthesize.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [AttackArg::S1, AttackArg::S2, AttackArg::S3])]
    attacks: Vec<AttackArg>,

    /// Utterance duration in seconds.
    #[arg(long, default_value_t = 5.0)]
    duration: f64,

    /// Additive-noise SNR in dB relative to the clean harmonic signal.
    #[arg(long, default_value_t = 30.0)]
    snr: f64,

    /// Corpus seed; same seed, same bytes.
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Lowest fundamental frequency a speaker may draw (Hz).
    #[arg(long, default_value_t = 100.0)]
    f0_lo: f64,

    /// Highest fundamental frequency a speaker may draw (Hz).
    #[arg(long, default_value_t = 250.0)]
    f0_hi: f64,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// WAV file to classify.
    wav: PathBuf,

    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Manifest CSV to check.
    #[arg(long)]
    manifest: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RuleArg {
    /// Nearest support embedding wins (ties go to bonafide).
    Nearest,
    /// Spoof when the distance-to-bonafide score exceeds the threshold.
    Threshold,
}

impl From<RuleArg> for DecisionRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Nearest => DecisionRule::Nearest,
            RuleArg::Threshold => DecisionRule::Threshold,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AttackArg {
    /// Even harmonics removed.
    S1,
    /// Band-limited additive sinusoid comb, 2–4 kHz.
    S2,
    /// Per-block phase randomization.
    S3,
}

impl From<AttackArg> for Attack {
    fn from(a: AttackArg) -> Self {
        match a {
            AttackArg::S1 => Attack::S1,
            AttackArg::S2 => Attack::S2,
            AttackArg::S3 => Attack::S3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let threads = if cli.deterministic { Some(1) } else { cli.jobs };
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
        {
            eprintln!("error: could not size the thread pool: {e}");
            return ExitCode::from(1);
        }
    }

    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::GenToy(args) => cmd_gen_toy(args),
        Command::Featurize(args) => cmd_featurize(args),
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Score(args) => cmd_score(args),
        Command::Validate(args) => cmd_validate(args),
    }
}

/// Map an error to its exit-code family (see module docs).
fn exit_code_for(err: &Error) -> u8 {
    use Error::*;
    match err {
        InvalidConfig(_) => 1,
        Io { .. } | UnreadableFile { .. } | MalformedLine { .. }
        | DuplicateUttId { .. } | InvalidManifest { .. } | Json { .. }
        | Csv { .. } => EXIT_IO,
        UnsupportedEncoding { .. } | EmptyAudio { .. } | AllSilent { .. }
        | AllZero | InvalidBand { .. } | WrongLength { .. }
        | ShapeMismatch { .. } => EXIT_AUDIO,
        NonFiniteGradient { .. } | BatchTooSmall { .. } | NoForwardRecorded
        | CorruptCheckpoint { .. } | ModelNotLoaded => EXIT_MODEL,
        InsufficientSpeakers { .. } | EmptySupport { .. }
        | NoBonafideSupport | ClassMissing { .. } | LengthMismatch { .. }
        | EmptyRecords { .. } | OneClassOnly { .. } => EXIT_PROTOCOL,
    }
}

/// Load the configuration file (or defaults), apply flag overrides,
/// validate, and return the effective configuration.
fn resolve_config(args: &ConfigArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(rule) = args.rule {
        cfg.rule = rule.into();
    }
    if let Some(t) = args.threshold {
        cfg.threshold = t;
    }
    let paths = &mut cfg.paths;
    override_path(&mut paths.manifest, &args.manifest);
    override_path(&mut paths.audio_root, &args.audio_root);
    override_path(&mut paths.cache_dir, &args.cache_dir);
    override_path(&mut paths.checkpoint, &args.checkpoint);
    override_path(&mut paths.report_dir, &args.report_dir);
    cfg.validate()?;
    Ok(cfg)
}

fn override_path(slot: &mut Option<PathBuf>, flag: &Option<PathBuf>) {
    if let Some(p) = flag {
        *slot = Some(p.clone());
    }
}

/// Pull a required path out of the run configuration or explain how to
/// supply it.
fn require_path(slot: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    slot.clone().ok_or_else(|| {
        Error::InvalidConfig(format!(
            "missing `{flag}`: pass --{flag} or set paths.{key} in the config file",
            key = flag.replace('-', "_"),
        ))
    })
}

/// Canonical cache location for one utterance's feature map.
fn cache_path(cache_dir: &Path, utt_id: &str) -> PathBuf {
    cache_dir.join(format!("{utt_id}.feat"))
}

/// Persist the effective configuration next to an artifact directory.
fn persist_config(dir: &Path, cfg: &RunConfig) -> Result<()> {
    cfg.save(&dir.join("run_config.json"))
}

/// Read cached feature maps for a slice of utterances, in order.
fn load_cached_maps(cache_dir: &Path, utts: &[Utterance]) -> Result<Vec<FeatureMap>> {
    utts.iter()
        .map(|u| {
            let values = read_feature_cache(&cache_path(cache_dir, &u.utt_id))?;
            FeatureMap::new(values, u.utt_id.clone())
        })
        .collect()
}

/// Resolve an utterance's audio path against the configured root.
fn audio_path(cfg: &RunConfig, utt: &Utterance) -> PathBuf {
    match &cfg.paths.audio_root {
        Some(root) if utt.path.is_relative() => root.join(&utt.path),
        _ => utt.path.clone(),
    }
}

// ---------------------------------------------------------------------------
// gen-toy
// ---------------------------------------------------------------------------

fn cmd_gen_toy(args: GenToyArgs) -> Result<ExitCode> {
    let spec = ToySpec {
        n_speakers: args.speakers,
        f0_lo_hz: args.f0_lo,
        f0_hi_hz: args.f0_hi,
        n_utts_per_speaker_per_class: args.utts,
        attack_set: args.attacks.iter().copied().map(Attack::from).collect(),
        duration_s: args.duration,
        noise_snr_db: args.snr,
        seed: args.seed,
    };
    let started = Instant::now();
    let manifest = generate_toy_corpus(&spec, &args.out)?;
    println!(
        "gen-toy: {} utterances ({} speakers) in {:.1}s",
        manifest.utterances.len(),
        args.speakers,
        started.elapsed().as_secs_f64(),
    );
    println!("{}", args.out.join("manifest.csv").display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// featurize
// ---------------------------------------------------------------------------

enum CacheOutcome {
    Written,
    UpToDate,
}

fn cmd_featurize(args: ConfigArgs) -> Result<ExitCode> {
    let cfg = resolve_config(&args)?;
    let manifest_path = require_path(&cfg.paths.manifest, "manifest")?;
    let cache_dir = require_path(&cfg.paths.cache_dir, "cache-dir")?;
    let manifest = read_manifest_csv(&manifest_path)?;
    std::fs::create_dir_all(&cache_dir).map_err(|e| Error::io(&cache_dir, e))?;

    let extractor = FeatureExtractor::new(&cfg.prep, &cfg.spectral)?;
    let results: Vec<std::result::Result<CacheOutcome, Error>> = manifest
        .utterances
        .par_iter()
        .map(|utt| featurize_one(&cfg, &extractor, &cache_dir, utt))
        .collect();

    let (mut written, mut fresh, mut failed) = (0usize, 0usize, 0usize);
    let mut first_err: Option<&Error> = None;
    for (utt, res) in manifest.utterances.iter().zip(&results) {
        match res {
            Ok(CacheOutcome::Written) => written += 1,
            Ok(CacheOutcome::UpToDate) => fresh += 1,
            Err(e) => {
                failed += 1;
                eprintln!("featurize: {} failed: {e}", utt.utt_id);
                first_err = first_err.or(Some(e));
            }
        }
    }
    persist_config(&cache_dir, &cfg)?;
    println!(
        "featurize: {written} written, {fresh} up-to-date, {failed} failed ({} total)",
        manifest.utterances.len(),
    );
    match first_err {
        // Per-file messages are already on stderr; just set the code.
        Some(e) => Ok(ExitCode::from(exit_code_for(e))),
        None => Ok(ExitCode::SUCCESS),
    }
}

/// Extract one utterance into the cache, skipping entries whose cache file
/// is at least as new as the WAV.
fn featurize_one(
    cfg: &RunConfig,
    extractor: &FeatureExtractor,
    cache_dir: &Path,
    utt: &Utterance,
) -> Result<CacheOutcome> {
    let wav = audio_path(cfg, utt);
    let out = cache_path(cache_dir, &utt.utt_id);
    if cache_is_fresh(&out, &wav) {
        return Ok(CacheOutcome::UpToDate);
    }
    let clip = audio::read_wav(&wav)?;
    let clip = audio::preprocess(&clip, &cfg.prep)?;
    let values = extractor.extract_raw(&clip)?;
    write_feature_cache(&out, &values)?;
    Ok(CacheOutcome::Written)
}

/// A cache entry is fresh when it exists and is no older than its source.
/// Missing modification times force recomputation.
fn cache_is_fresh(cache: &Path, wav: &Path) -> bool {
    let (Ok(cache_meta), Ok(wav_meta)) = (cache.metadata(), wav.metadata()) else {
        return false;
    };
    match (cache_meta.modified(), wav_meta.modified()) {
        (Ok(c), Ok(w)) => c >= w,
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

fn cmd_train(args: ConfigArgs) -> Result<ExitCode> {
    let cfg = resolve_config(&args)?;
    let manifest_path = require_path(&cfg.paths.manifest, "manifest")?;
    let cache_dir = require_path(&cfg.paths.cache_dir, "cache-dir")?;
    let ckpt_path = require_path(&cfg.paths.checkpoint, "checkpoint")?;
    let manifest = read_manifest_csv(&manifest_path)?;

    let split = split_dataset(&manifest.utterances, cfg.split, cfg.seed, cfg.support_mode)?;
    println!(
        "train: split {} train / {} support / {} query utterances",
        split.train.len(),
        split.support.len(),
        split.query.len(),
    );
    let maps = load_cached_maps(&cache_dir, &split.train)?;

    let started = Instant::now();
    let mut trainer = Trainer::new(split.train, maps, cfg.arch.clone(), cfg.train.clone(), cfg.seed)?;
    trainer.run()?;
    let steps = trainer.steps_done();
    let last = trainer.log.last().cloned();

    if let Some(dir) = ckpt_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_train_log_csv(&dir.join("train_log.csv"), &trainer.log)?;
        persist_config(dir, &cfg)?;
    }
    let checkpoint = trainer.into_checkpoint(cfg.prep.clone(), cfg.spectral.clone());
    checkpoint.save(&ckpt_path)?;

    if let Some(row) = last {
        println!(
            "train: {steps} steps in {:.1}s, final mean loss {:.6} (lr {:.6})",
            started.elapsed().as_secs_f64(),
            row.mean_loss,
            row.lr,
        );
    }
    println!("{}", ckpt_path.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

fn cmd_evaluate(args: ConfigArgs) -> Result<ExitCode> {
    let cfg = resolve_config(&args)?;
    let manifest_path = require_path(&cfg.paths.manifest, "manifest")?;
    let cache_dir = require_path(&cfg.paths.cache_dir, "cache-dir")?;
    let ckpt_path = require_path(&cfg.paths.checkpoint, "checkpoint")?;
    let report_dir = require_path(&cfg.paths.report_dir, "report-dir")?;

    let manifest = read_manifest_csv(&manifest_path)?;
    let checkpoint = ModelCheckpoint::load(&ckpt_path)?;
    let split = split_dataset(&manifest.utterances, cfg.split, cfg.seed, cfg.support_mode)?;

    let support_maps = load_cached_maps(&cache_dir, &split.support)?;
    let query_maps = load_cached_maps(&cache_dir, &split.query)?;
    let support_embs = checkpoint.embed_features_batch(&support_maps.iter().collect::<Vec<_>>())?;
    let query_embs = checkpoint.embed_features_batch(&query_maps.iter().collect::<Vec<_>>())?;

    let support: Vec<(Label, _)> = split
        .support
        .iter()
        .map(|u| u.label)
        .zip(support_embs)
        .collect();
    let records = evaluate(&split.query, &query_embs, &support, cfg.rule, cfg.threshold)?;
    let report = build_eval_report(&records)?;

    std::fs::create_dir_all(&report_dir).map_err(|e| Error::io(&report_dir, e))?;
    write_report_json(&report_dir.join("report.json"), &report)?;
    write_group_csv(&report_dir.join("per_group.csv"), &report)?;
    write_query_records_csv(&report_dir.join("per_query.csv"), &records)?;
    write_det_csv(&report_dir.join("det.csv"), &report.det_points)?;
    persist_config(&report_dir, &cfg)?;

    println!(
        "evaluate: {} queries, accuracy {:.4}, EER {:.4} ({:?} rule)",
        records.len(),
        report.metrics.classification.accuracy,
        report.metrics.eer,
        cfg.rule,
    );
    println!("{}", report_dir.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

fn cmd_score(args: ScoreArgs) -> Result<ExitCode> {
    let cfg = resolve_config(&args.config)?;
    let ckpt_path = require_path(&cfg.paths.checkpoint, "checkpoint")?;
    let support_path = require_path(&cfg.paths.manifest, "manifest")?;

    let checkpoint = ModelCheckpoint::load(&ckpt_path)?;
    let support_manifest = read_manifest_csv(&support_path)?;
    // The checkpoint's own preprocessing parameters govern inference; the
    // model only understands inputs shaped the way it was trained.
    let extractor = FeatureExtractor::new(&checkpoint.prep, &checkpoint.spectral)?;

    let mut support = Vec::with_capacity(support_manifest.utterances.len());
    for utt in &support_manifest.utterances {
        let emb = embed_wav_input(&checkpoint, &extractor, &audio_path(&cfg, utt), &utt.utt_id)?;
        support.push((utt.label, emb));
    }

    let utt_id = args
        .wav
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| args.wav.display().to_string());
    let query = embed_wav_input(&checkpoint, &extractor, &args.wav, &utt_id)?;
    let decision =
        quickspoof::protocol::classify_query(&query, &support, cfg.rule, cfg.threshold)?;

    println!("{utt_id}\t{:.17}\t{}", decision.score, decision.label);
    match decision.label {
        Label::Bonafide => Ok(ExitCode::SUCCESS),
        Label::Spoof => Ok(ExitCode::from(EXIT_SPOOF)),
    }
}

/// WAV → preprocess → raw features → checkpoint-standardized embedding.
fn embed_wav_input(
    checkpoint: &ModelCheckpoint,
    extractor: &FeatureExtractor,
    wav: &Path,
    utt_id: &str,
) -> Result<quickspoof::model::Embedding> {
    let clip = audio::read_wav(wav)?;
    let clip = audio::preprocess(&clip, &checkpoint.prep)?;
    let values = extractor.extract_raw(&clip)?;
    checkpoint.embed_features(&FeatureMap::new(values, utt_id)?)
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode> {
    let manifest: Manifest = read_manifest_csv(&args.manifest)?;
    let report = validate_manifest(&manifest);
    for w in &report.warnings {
        println!("warning: {w}");
    }
    for e in &report.errors {
        eprintln!("error: {e}");
    }
    if report.is_ok() {
        println!(
            "validate: OK — {} utterances, {} warning(s)",
            manifest.utterances.len(),
            report.warnings.len(),
        );
        Ok(ExitCode::SUCCESS)
    } else {
        Err(Error::InvalidManifest {
            errors: report.errors.len(),
            warnings: report.warnings.len(),
        })
    }
}
