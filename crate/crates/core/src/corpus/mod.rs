//! Dataset ingestion: protocol-file parsing, manifest persistence and
//! validation, and a deterministic synthetic toy corpus.
//!
//! Real datasets arrive as protocol text files (five whitespace-separated
//! fields per line: `speaker_id utt_id unused system_id key`); the toy
//! corpus stands in for them at desk scale with fully seeded synthesis.

mod toy;

pub use toy::{generate_toy_corpus, speaker_voice, Attack, ToySpec, VoiceParams};

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::protocol::{Label, Utterance};

/// A named collection of utterances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    /// Free-form provenance tag (e.g. "asvspoof19-la-train", "toy").
    pub source: String,
    pub utterances: Vec<Utterance>,
}

impl Manifest {
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }
}

/// Parse an ASVspoof-style protocol file.
///
/// Each line holds `speaker_id utt_id unused system_id key` with
/// `key ∈ {bonafide, spoof}`. Bonafide rows get no attack id; spoof rows
/// take `system_id` as theirs. Audio paths are constructed as
/// `audio_root/utt_id + ext` (pass the extension with its dot, ".wav").
/// Blank lines are skipped.
pub fn parse_protocol(path: &Path, audio_root: &Path, ext: &str) -> Result<Manifest> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut utterances = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line_no,
                detail: format!("expected 5 whitespace-separated fields, found {}", fields.len()),
            });
        }
        let (speaker_id, utt_id, _unused, system_id, key) =
            (fields[0], fields[1], fields[2], fields[3], fields[4]);
        let (label, attack_id) = match key {
            "bonafide" => (Label::Bonafide, None),
            "spoof" => {
                if system_id == "-" {
                    return Err(Error::MalformedLine {
                        path: path.to_path_buf(),
                        line_no,
                        detail: "spoof line carries no system id".to_string(),
                    });
                }
                (Label::Spoof, Some(system_id.to_string()))
            }
            other => {
                return Err(Error::MalformedLine {
                    path: path.to_path_buf(),
                    line_no,
                    detail: format!("unknown key `{other}` (expected bonafide or spoof)"),
                });
            }
        };
        if !seen.insert(utt_id.to_string()) {
            return Err(Error::DuplicateUttId {
                id: utt_id.to_string(),
                path: path.to_path_buf(),
            });
        }
        utterances.push(Utterance {
            utt_id: utt_id.to_string(),
            speaker_id: speaker_id.to_string(),
            label,
            attack_id,
            path: audio_root.join(format!("{utt_id}{ext}")),
        });
    }
    let source = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "protocol".to_string());
    Ok(Manifest { source, utterances })
}

/// Write utterances back out in protocol format (the inverse of
/// [`parse_protocol`] up to the audio-root prefix).
pub fn write_protocol(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut out = std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
    );
    for u in &manifest.utterances {
        writeln!(
            out,
            "{} {} - {} {}",
            u.speaker_id,
            u.utt_id,
            u.attack_or_dash(),
            u.label
        )
        .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Persist a manifest as CSV (`utt_id,speaker_id,label,attack_id,path`,
/// attack "-" for bonafide).
pub fn write_manifest_csv(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv("manifest", e))?;
    w.write_record(["utt_id", "speaker_id", "label", "attack_id", "path"])
        .map_err(|e| Error::csv("manifest", e))?;
    for u in &manifest.utterances {
        w.write_record([
            u.utt_id.as_str(),
            u.speaker_id.as_str(),
            u.label.as_str(),
            u.attack_or_dash(),
            &u.path.to_string_lossy(),
        ])
        .map_err(|e| Error::csv("manifest", e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Load a manifest written by [`write_manifest_csv`]. The source tag is
/// recovered from the file stem.
pub fn read_manifest_csv(path: &Path) -> Result<Manifest> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv("manifest", e))?;
    let mut utterances = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (idx, row) in r.records().enumerate() {
        let line_no = idx + 2; // header occupies line 1
        let row = row.map_err(|e| Error::csv("manifest", e))?;
        if row.len() != 5 {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line_no,
                detail: format!("expected 5 columns, found {}", row.len()),
            });
        }
        let label = Label::parse(&row[2]).ok_or_else(|| Error::MalformedLine {
            path: path.to_path_buf(),
            line_no,
            detail: format!("unknown label `{}`", &row[2]),
        })?;
        let attack_id = if &row[3] == "-" {
            None
        } else {
            Some(row[3].to_string())
        };
        if !seen.insert(row[0].to_string()) {
            return Err(Error::DuplicateUttId {
                id: row[0].to_string(),
                path: path.to_path_buf(),
            });
        }
        let u = Utterance {
            utt_id: row[0].to_string(),
            speaker_id: row[1].to_string(),
            label,
            attack_id,
            path: PathBuf::from(&row[4]),
        };
        u.validate()?;
        utterances.push(u);
    }
    let source = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "manifest".to_string());
    Ok(Manifest { source, utterances })
}

/// Structured result of [`validate_manifest`]: fatal problems in
/// `errors`, advisory ones in `warnings`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Report-only manifest checks: id uniqueness, label/attack coupling,
/// audio-path existence, class presence, and per-class speaker counts
/// (fewer than 3 distinct speakers per class cannot support a
/// speaker-disjoint episode and is flagged as a warning).
pub fn validate_manifest(manifest: &Manifest) -> ValidationReport {
    let mut report = ValidationReport::default();
    if manifest.is_empty() {
        report.errors.push("manifest holds no utterances".to_string());
        return report;
    }
    let mut ids: BTreeSet<&str> = BTreeSet::new();
    for u in &manifest.utterances {
        if !ids.insert(&u.utt_id) {
            report.errors.push(format!("duplicate utterance id `{}`", u.utt_id));
        }
        if let Err(e) = u.validate() {
            report.errors.push(e.to_string());
        }
        if !u.path.exists() {
            report
                .errors
                .push(format!("missing audio file {}", u.path.display()));
        }
    }
    let mut classes: std::collections::BTreeMap<Label, BTreeSet<&str>> =
        std::collections::BTreeMap::new();
    for u in &manifest.utterances {
        classes.entry(u.label).or_default().insert(&u.speaker_id);
    }
    if classes.len() < 2 {
        let only = classes.keys().next().expect("non-empty manifest");
        report.errors.push(format!("one class only ({only})"));
    }
    for (label, speakers) in &classes {
        if speakers.len() < 3 {
            report.warnings.push(format!(
                "class {label} has {} distinct speaker(s); speaker-disjoint splits need at least 3",
                speakers.len()
            ));
        }
    }
    report
}
