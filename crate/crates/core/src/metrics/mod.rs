//! Evaluation metrics: EER, classification scores, per-attack breakdowns,
//! and DET-curve points.
//!
//! Scores are oriented as distance-to-bonafide: higher = more spoof-like,
//! and spoof is the positive class throughout. The EER threshold sweep
//! predicts spoof when `score ≥ θ`, so FAR (bonafide accepted as spoof)
//! is non-increasing and FRR (spoof missed) non-decreasing in θ; the EER
//! is read off at the FAR/FRR crossing, linearly interpolated between
//! adjacent sweep points when the curves do not meet exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{Label, QueryRecord};

/// Aligned score/label pairs for threshold-sweep metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    scores: Vec<f64>,
    labels: Vec<Label>,
}

impl ScoreSet {
    /// Build a score set, rejecting length mismatches and non-finite
    /// scores (which would poison the threshold sort).
    pub fn new(scores: Vec<f64>, labels: Vec<Label>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::LengthMismatch {
                context: "scores vs labels".to_string(),
                left: scores.len(),
                right: labels.len(),
            });
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "score at index {i} is not finite ({})",
                scores[i]
            )));
        }
        Ok(Self { scores, labels })
    }

    /// Extract (score, true-label) pairs from query records.
    pub fn from_records(records: &[QueryRecord]) -> Result<Self> {
        Self::new(
            records.iter().map(|r| r.score).collect(),
            records.iter().map(|r| r.true_label).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    fn n_spoof(&self) -> usize {
        self.labels.iter().filter(|l| **l == Label::Spoof).count()
    }

    /// Error unless both classes are represented.
    fn require_both_classes(&self) -> Result<(usize, usize)> {
        let pos = self.n_spoof();
        let neg = self.len() - pos;
        if pos == 0 || neg == 0 {
            let label = if pos == 0 { Label::Bonafide } else { Label::Spoof };
            return Err(Error::OneClassOnly {
                label: label.as_str().to_string(),
            });
        }
        Ok((pos, neg))
    }
}

/// One point of the detection-error tradeoff curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetPoint {
    pub far: f64,
    pub frr: f64,
    pub threshold: f64,
}

/// Equal error rate with the threshold it occurs at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EerPoint {
    pub eer: f64,
    pub threshold: f64,
}

/// Confusion counts with spoof as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Confusion {
    #[serde(rename = "tp")]
    pub true_pos: usize,
    #[serde(rename = "fp")]
    pub false_pos: usize,
    #[serde(rename = "tn")]
    pub true_neg: usize,
    #[serde(rename = "fn")]
    pub false_neg: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }
}

/// Accuracy/precision/recall/F1 over predicted labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
    /// Set when no spoof was predicted, making precision 0 by convention.
    pub precision_degenerate: bool,
    /// Set when no spoof was present, making recall 0 by convention.
    pub recall_degenerate: bool,
}

/// EER plus classification metrics over one record subset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub eer: f64,
    pub eer_threshold: f64,
    #[serde(flatten)]
    pub classification: ClassificationMetrics,
    pub n_records: usize,
}

/// Full evaluation report: global metrics, per-attack breakdown, and the
/// DET curve over all records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub metrics: MetricsBundle,
    pub per_group: BTreeMap<String, MetricsBundle>,
    pub det_points: Vec<DetPoint>,
}

/// Sweep all distinct scores as thresholds (ascending), emitting the DET
/// curve. The first point is always (FAR 1, FRR 0) and a synthetic
/// closing threshold one unit above the maximum score contributes
/// (FAR 0, FRR 1); any value beyond the maximum yields that confusion.
pub fn emit_det_curve(s: &ScoreSet) -> Result<Vec<DetPoint>> {
    let (pos, neg) = s.require_both_classes()?;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s.scores[a].partial_cmp(&s.scores[b]).expect("finite scores"));

    let mut points = Vec::new();
    // Walk distinct score values; predicting spoof when score ≥ v means
    // FP = bonafide at-or-above v and FN = spoof strictly below v.
    let mut below_bona = 0usize;
    let mut below_spoof = 0usize;
    let mut i = 0;
    while i < order.len() {
        let v = s.scores[order[i]];
        points.push(DetPoint {
            far: (neg - below_bona) as f64 / neg as f64,
            frr: below_spoof as f64 / pos as f64,
            threshold: v,
        });
        while i < order.len() && s.scores[order[i]] == v {
            match s.labels[order[i]] {
                Label::Bonafide => below_bona += 1,
                Label::Spoof => below_spoof += 1,
            }
            i += 1;
        }
    }
    let max = s.scores[*order.last().expect("non-empty by class check")];
    points.push(DetPoint {
        far: 0.0,
        frr: 1.0,
        threshold: max + 1.0,
    });
    Ok(points)
}

/// Equal error rate: the FAR/FRR crossing of the threshold sweep,
/// linearly interpolated between adjacent sweep points when no sweep
/// point has FAR = FRR exactly.
pub fn compute_eer(s: &ScoreSet) -> Result<EerPoint> {
    let points = emit_det_curve(s)?;
    Ok(interpolate_crossing(&points))
}

/// Find the sign change of FAR − FRR along the curve and interpolate.
/// The difference starts at +1, ends at −1, and is non-increasing, so a
/// crossing always exists.
fn interpolate_crossing(points: &[DetPoint]) -> EerPoint {
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let da = a.far - a.frr;
        let db = b.far - b.frr;
        if da == 0.0 {
            return EerPoint {
                eer: a.far,
                threshold: a.threshold,
            };
        }
        if da > 0.0 && db < 0.0 {
            let t = da / (da - db);
            return EerPoint {
                eer: a.far + t * (b.far - a.far),
                threshold: a.threshold + t * (b.threshold - a.threshold),
            };
        }
    }
    unreachable!("FAR−FRR runs from +1 to −1; a crossing always exists");
}

/// Standard classification metrics with spoof as the positive class.
/// Zero-denominator precision/recall come back as 0 with the matching
/// degenerate flag set; F1 is the harmonic mean, 0 when both inputs are 0.
pub fn compute_classification_metrics(records: &[QueryRecord]) -> Result<ClassificationMetrics> {
    let refs: Vec<&QueryRecord> = records.iter().collect();
    classification_over(&refs)
}

fn classification_over(records: &[&QueryRecord]) -> Result<ClassificationMetrics> {
    if records.is_empty() {
        return Err(Error::EmptyRecords {
            context: "classification metrics".to_string(),
        });
    }
    let mut c = Confusion::default();
    for r in records {
        match (r.true_label, r.pred_label) {
            (Label::Spoof, Label::Spoof) => c.true_pos += 1,
            (Label::Bonafide, Label::Spoof) => c.false_pos += 1,
            (Label::Bonafide, Label::Bonafide) => c.true_neg += 1,
            (Label::Spoof, Label::Bonafide) => c.false_neg += 1,
        }
    }
    let accuracy = (c.true_pos + c.true_neg) as f64 / c.total() as f64;
    let predicted_pos = c.true_pos + c.false_pos;
    let actual_pos = c.true_pos + c.false_neg;
    let precision_degenerate = predicted_pos == 0;
    let recall_degenerate = actual_pos == 0;
    let precision = if precision_degenerate {
        0.0
    } else {
        c.true_pos as f64 / predicted_pos as f64
    };
    let recall = if recall_degenerate {
        0.0
    } else {
        c.true_pos as f64 / actual_pos as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(ClassificationMetrics {
        accuracy,
        precision,
        recall,
        f1,
        confusion: c,
        precision_degenerate,
        recall_degenerate,
    })
}

fn bundle_over(records: &[&QueryRecord]) -> Result<MetricsBundle> {
    let classification = classification_over(records)?;
    let scores = ScoreSet::new(
        records.iter().map(|r| r.score).collect(),
        records.iter().map(|r| r.true_label).collect(),
    )?;
    let eer = compute_eer(&scores)?;
    Ok(MetricsBundle {
        eer: eer.eer,
        eer_threshold: eer.threshold,
        classification,
        n_records: records.len(),
    })
}

/// Per-attack breakdown: one metrics bundle per distinct attack id among
/// the spoof records, each computed over that attack's spoof records plus
/// every bonafide record (the negatives are shared across groups).
/// Groups that would be single-class (no bonafide records at all) are
/// omitted, mirroring the treatment of empty groups.
pub fn per_group_breakdown(records: &[QueryRecord]) -> Result<BTreeMap<String, MetricsBundle>> {
    let bonafide: Vec<&QueryRecord> = records
        .iter()
        .filter(|r| r.true_label == Label::Bonafide)
        .collect();
    let keys: BTreeSet<&str> = records
        .iter()
        .filter(|r| r.true_label == Label::Spoof)
        .map(|r| r.attack_id.as_str())
        .collect();
    let mut out = BTreeMap::new();
    for key in keys {
        if bonafide.is_empty() {
            continue;
        }
        let mut group: Vec<&QueryRecord> = records
            .iter()
            .filter(|r| r.true_label == Label::Spoof && r.attack_id == key)
            .collect();
        group.extend(bonafide.iter().copied());
        out.insert(key.to_string(), bundle_over(&group)?);
    }
    Ok(out)
}

/// Assemble the full report: global metrics, per-attack groups, DET curve.
pub fn build_eval_report(records: &[QueryRecord]) -> Result<EvalReport> {
    if records.is_empty() {
        return Err(Error::EmptyRecords {
            context: "evaluation report".to_string(),
        });
    }
    let refs: Vec<&QueryRecord> = records.iter().collect();
    let metrics = bundle_over(&refs)?;
    let per_group = per_group_breakdown(records)?;
    let det_points = emit_det_curve(&ScoreSet::from_records(records)?)?;
    Ok(EvalReport {
        metrics,
        per_group,
        det_points,
    })
}

/// Write the full report as pretty JSON.
pub fn write_report_json(path: &Path, report: &EvalReport) -> Result<()> {
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::json("eval report", e))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Write the per-group table (`algorithm,EER%,Acc%,Precision%,Recall%,F1%`),
/// one row per attack id plus a closing `all` row with the global metrics.
pub fn write_group_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv("per-group table", e))?;
    w.write_record(["algorithm", "EER%", "Acc%", "Precision%", "Recall%", "F1%"])
        .map_err(|e| Error::csv("per-group table", e))?;
    let pct = |x: f64| format!("{:.4}", 100.0 * x);
    let mut row = |name: &str, m: &MetricsBundle| {
        w.write_record([
            name,
            &pct(m.eer),
            &pct(m.classification.accuracy),
            &pct(m.classification.precision),
            &pct(m.classification.recall),
            &pct(m.classification.f1),
        ])
        .map_err(|e| Error::csv("per-group table", e))
    };
    for (name, m) in &report.per_group {
        row(name, m)?;
    }
    row("all", &report.metrics)?;
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Write DET points as CSV (`far,frr,threshold`).
pub fn write_det_csv(path: &Path, points: &[DetPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv("DET curve", e))?;
    w.write_record(["far", "frr", "threshold"])
        .map_err(|e| Error::csv("DET curve", e))?;
    for p in points {
        w.write_record([
            format!("{:.17}", p.far),
            format!("{:.17}", p.frr),
            format!("{:.17}", p.threshold),
        ])
        .map_err(|e| Error::csv("DET curve", e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
