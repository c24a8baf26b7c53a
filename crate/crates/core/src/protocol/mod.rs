//! Episodic one-shot protocol: speaker-disjoint splits, triplet sampling,
//! and support/query classification.
//!
//! The dataset is divided into three speaker-disjoint subsets: a training
//! set (triplet mining), a support set (the one labeled example per class
//! a deployed system gets to keep), and a query set (everything scored).
//! Speakers — never utterances — are partitioned, so no voice seen in
//! training can appear at evaluation time.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Embedding;
use crate::seed;

/// Binary utterance class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Bonafide,
    Spoof,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Bonafide => "bonafide",
            Label::Spoof => "spoof",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "bonafide" => Some(Label::Bonafide),
            "spoof" => Some(Label::Spoof),
            _ => None,
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One utterance row of a manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub utt_id: String,
    pub speaker_id: String,
    pub label: Label,
    /// Attack system id for spoofed utterances (`None` for bonafide).
    pub attack_id: Option<String>,
    /// Audio location on disk.
    pub path: PathBuf,
}

impl Utterance {
    /// Enforce the label/attack coupling: bonafide ⇔ no attack id.
    pub fn validate(&self) -> Result<()> {
        match (self.label, &self.attack_id) {
            (Label::Bonafide, Some(a)) => Err(Error::InvalidConfig(format!(
                "utterance {}: bonafide rows cannot carry attack id {a}",
                self.utt_id
            ))),
            (Label::Spoof, None) => Err(Error::InvalidConfig(format!(
                "utterance {}: spoof rows need an attack id",
                self.utt_id
            ))),
            _ => Ok(()),
        }
    }

    /// Attack id for reporting; bonafide uses "-".
    pub fn attack_or_dash(&self) -> &str {
        self.attack_id.as_deref().unwrap_or("-")
    }
}

/// Speaker-count proportions for the train/support/query partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitRatios {
    pub train: u32,
    pub support: u32,
    pub query: u32,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 4,
            support: 1,
            query: 1,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        if self.train == 0 || self.support == 0 || self.query == 0 {
            return Err(Error::InvalidConfig(format!(
                "split ratios must all be nonzero, got {}:{}:{}",
                self.train, self.support, self.query
            )));
        }
        Ok(())
    }
}

/// How the support set is reduced to its one-shot form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SupportMode {
    /// Exactly one utterance per class (strict one-shot).
    #[default]
    PerClass,
    /// One utterance per (class, attack) combination.
    PerClassAndAttack,
}

/// A speaker-disjoint episode.
#[derive(Debug, Clone)]
pub struct EpisodeSplit {
    /// Triplet-mining pool (τ).
    pub train: Vec<Utterance>,
    /// One-shot reference examples (δ).
    pub support: Vec<Utterance>,
    /// Everything to be scored (φ).
    pub query: Vec<Utterance>,
}

impl EpisodeSplit {
    /// Check the split invariants: pairwise speaker disjointness and both
    /// classes present in every subset.
    pub fn validate(&self) -> Result<()> {
        let speakers = |us: &[Utterance]| -> std::collections::BTreeSet<String> {
            us.iter().map(|u| u.speaker_id.clone()).collect()
        };
        let (st, ss, sq) = (speakers(&self.train), speakers(&self.support), speakers(&self.query));
        for (a, b, what) in [
            (&st, &ss, "train/support"),
            (&st, &sq, "train/query"),
            (&ss, &sq, "support/query"),
        ] {
            if a.intersection(b).next().is_some() {
                return Err(Error::InsufficientSpeakers {
                    detail: format!("speaker sets of {what} overlap"),
                });
            }
        }
        for (us, what) in [
            (&self.train, "train"),
            (&self.support, "support"),
            (&self.query, "query"),
        ] {
            let has = |l: Label| us.iter().any(|u| u.label == l);
            if !has(Label::Bonafide) || !has(Label::Spoof) {
                return Err(Error::InsufficientSpeakers {
                    detail: format!("{what} subset is missing a class"),
                });
            }
        }
        Ok(())
    }
}

/// A sampled training triplet; fields are indices into the train slice the
/// sampler was built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

/// Split a manifest into speaker-disjoint train/support/query subsets.
///
/// The union of speakers is sorted, shuffled by a stream derived from
/// `seed`, and partitioned by the ratio quotas (each subset gets at least
/// one speaker). Utterances follow their speaker. The support subset is
/// then reduced to its one-shot form per `mode`, drawing seeded so the
/// whole split is a pure function of `(manifest, ratios, seed, mode)`.
pub fn split_dataset(
    manifest: &[Utterance],
    ratios: SplitRatios,
    seed: u64,
    mode: SupportMode,
) -> Result<EpisodeSplit> {
    ratios.validate()?;
    for u in manifest {
        u.validate()?;
    }
    // Per-class distinct speaker counts gate the whole construction.
    let mut class_speakers: BTreeMap<Label, std::collections::BTreeSet<&str>> = BTreeMap::new();
    for u in manifest {
        class_speakers
            .entry(u.label)
            .or_default()
            .insert(&u.speaker_id);
    }
    if class_speakers.len() < 2 {
        return Err(Error::InsufficientSpeakers {
            detail: "manifest contains fewer than two classes".to_string(),
        });
    }
    for (label, spks) in &class_speakers {
        if spks.len() < 3 {
            return Err(Error::InsufficientSpeakers {
                detail: format!(
                    "class {label} has {} distinct speakers, need at least 3",
                    spks.len()
                ),
            });
        }
    }

    // Sorted speaker union → seeded shuffle → contiguous quota assignment.
    let mut speakers: Vec<&str> = manifest.iter().map(|u| u.speaker_id.as_str()).collect();
    speakers.sort_unstable();
    speakers.dedup();
    let mut rng = seed::rng(seed, "speaker-split");
    speakers.shuffle(&mut rng);

    let n = speakers.len();
    let total = u64::from(ratios.train) + u64::from(ratios.support) + u64::from(ratios.query);
    let n_support = ((n as u64 * u64::from(ratios.support)) / total).max(1) as usize;
    let n_query = ((n as u64 * u64::from(ratios.query)) / total).max(1) as usize;
    if n_support + n_query >= n {
        return Err(Error::InsufficientSpeakers {
            detail: format!(
                "{n} speakers cannot fill a {}:{}:{} split",
                ratios.train, ratios.support, ratios.query
            ),
        });
    }
    let n_train = n - n_support - n_query;
    let assign = |spk: &str| -> usize {
        let pos = speakers.iter().position(|s| *s == spk).expect("speaker present");
        if pos < n_train {
            0
        } else if pos < n_train + n_support {
            1
        } else {
            2
        }
    };

    let mut train = Vec::new();
    let mut support_pool = Vec::new();
    let mut query = Vec::new();
    for u in manifest {
        match assign(&u.speaker_id) {
            0 => train.push(u.clone()),
            1 => support_pool.push(u.clone()),
            _ => query.push(u.clone()),
        }
    }

    let support = reduce_support(support_pool, mode, seed)?;
    let split = EpisodeSplit {
        train,
        support,
        query,
    };
    split.validate()?;
    if mode == SupportMode::PerClass && split.support.len() != 2 {
        return Err(Error::InsufficientSpeakers {
            detail: format!(
                "strict one-shot support must hold exactly 2 utterances, got {}",
                split.support.len()
            ),
        });
    }
    Ok(split)
}

/// Reduce the support speakers' utterances to the one-shot form: one
/// seeded pick per class (strict) or per (class, attack) group.
fn reduce_support(pool: Vec<Utterance>, mode: SupportMode, seed: u64) -> Result<Vec<Utterance>> {
    let mut groups: BTreeMap<(Label, String), Vec<Utterance>> = BTreeMap::new();
    for u in pool {
        let key = match mode {
            SupportMode::PerClass => (u.label, String::new()),
            SupportMode::PerClassAndAttack => (u.label, u.attack_or_dash().to_string()),
        };
        groups.entry(key).or_default().push(u);
    }
    let mut rng = seed::rng(seed, "support-pick");
    let mut out = Vec::new();
    for ((_, _), mut members) in groups {
        members.sort_by(|a, b| a.utt_id.cmp(&b.utt_id));
        let pick = rng.random_range(0..members.len());
        out.push(members.swap_remove(pick));
    }
    Ok(out)
}

/// Class-indexed view over a training slice, used to draw balanced sample
/// pools and mine triplets.
pub struct TripletSampler<'a> {
    train: &'a [Utterance],
    by_class: BTreeMap<Label, Vec<usize>>,
}

impl<'a> TripletSampler<'a> {
    pub fn new(train: &'a [Utterance]) -> Result<Self> {
        let mut by_class: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
        for (i, u) in train.iter().enumerate() {
            by_class.entry(u.label).or_default().push(i);
        }
        for label in [Label::Bonafide, Label::Spoof] {
            if !by_class.contains_key(&label) {
                return Err(Error::ClassMissing {
                    detail: format!("training pool has no {label} utterances"),
                });
            }
        }
        Ok(Self { train, by_class })
    }

    /// Draw a class-balanced sample pool of `batch_size` train indices
    /// (⌈half⌉ bonafide, rest spoof). Drawn without replacement per class
    /// when the class is large enough, with replacement otherwise.
    pub fn draw_pool(&self, batch_size: usize, rng: &mut impl Rng) -> Vec<usize> {
        let n_bona = batch_size.div_ceil(2);
        let n_spoof = batch_size - n_bona;
        let mut pool = Vec::with_capacity(batch_size);
        for (label, want) in [(Label::Bonafide, n_bona), (Label::Spoof, n_spoof)] {
            let members = &self.by_class[&label];
            if members.len() >= want {
                let mut picks: Vec<usize> = (0..members.len()).collect();
                picks.shuffle(rng);
                pool.extend(picks[..want].iter().map(|p| members[*p]));
            } else {
                for _ in 0..want {
                    pool.push(members[rng.random_range(0..members.len())]);
                }
            }
        }
        pool
    }

    /// Mine one triplet per pool element. Returned triples are pool-local
    /// indices `[anchor, positive, negative]`.
    ///
    /// Positives are uniform same-class pool members with a different
    /// utterance id. Negatives follow `strategy`: uniform over other-class
    /// pool members, or semi-hard — negatives with
    /// `d_p < d_n < √(d_p² + α)` when any exist, else the hardest
    /// (minimum `d_n`, ties broken uniformly). `embeddings` holds one row
    /// per pool element and is required for semi-hard mining; without it
    /// (or with degenerate all-equal distances) mining falls back to
    /// random.
    pub fn mine_pool(
        &self,
        pool: &[usize],
        embeddings: Option<ArrayView2<f32>>,
        strategy: crate::nn::TripletStrategy,
        alpha: f64,
        rng: &mut impl Rng,
    ) -> Result<Vec<[usize; 3]>> {
        if let Some(e) = embeddings {
            if e.nrows() != pool.len() {
                return Err(Error::ShapeMismatch {
                    context: "pool embeddings".to_string(),
                    expected: format!("({}, dim)", pool.len()),
                    actual: format!("({}, {})", e.nrows(), e.ncols()),
                });
            }
        }
        let dist = |a: usize, b: usize, e: &ArrayView2<f32>| -> f64 {
            let (ra, rb) = (e.row(a), e.row(b));
            let mut acc = 0.0f64;
            for j in 0..ra.len() {
                let d = f64::from(ra[j]) - f64::from(rb[j]);
                acc += d * d;
            }
            acc.sqrt()
        };

        let mut triplets = Vec::with_capacity(pool.len());
        for (ai, &a_train) in pool.iter().enumerate() {
            let a_label = self.train[a_train].label;
            let a_id = &self.train[a_train].utt_id;

            let positives: Vec<usize> = pool
                .iter()
                .enumerate()
                .filter(|(pi, p_train)| {
                    *pi != ai
                        && self.train[**p_train].label == a_label
                        && self.train[**p_train].utt_id != *a_id
                })
                .map(|(pi, _)| pi)
                .collect();
            let Some(&pos) = positives.get(rng.random_range(0..positives.len().max(1)))
            else {
                return Err(Error::ClassMissing {
                    detail: format!(
                        "no distinct positive candidate for anchor {a_id} in the sample pool"
                    ),
                });
            };

            let negatives: Vec<usize> = pool
                .iter()
                .enumerate()
                .filter(|(_, n_train)| self.train[**n_train].label != a_label)
                .map(|(ni, _)| ni)
                .collect();
            if negatives.is_empty() {
                return Err(Error::ClassMissing {
                    detail: format!("no negative candidates for anchor {a_id} in the sample pool"),
                });
            }
            let neg = match (strategy, &embeddings) {
                (crate::nn::TripletStrategy::Random, _) | (_, None) => {
                    negatives[rng.random_range(0..negatives.len())]
                }
                (crate::nn::TripletStrategy::SemiHard, Some(e)) => {
                    let d_p = dist(ai, pos, e);
                    let margin_edge = (d_p * d_p + alpha).sqrt();
                    let semi: Vec<usize> = negatives
                        .iter()
                        .copied()
                        .filter(|&ni| {
                            let d_n = dist(ai, ni, e);
                            d_p < d_n && d_n < margin_edge
                        })
                        .collect();
                    if !semi.is_empty() {
                        semi[rng.random_range(0..semi.len())]
                    } else {
                        let mut best = f64::INFINITY;
                        for &ni in &negatives {
                            best = best.min(dist(ai, ni, e));
                        }
                        let hardest: Vec<usize> = negatives
                            .iter()
                            .copied()
                            .filter(|&ni| dist(ai, ni, e) == best)
                            .collect();
                        hardest[rng.random_range(0..hardest.len())]
                    }
                }
            };
            triplets.push([ai, pos, neg]);
        }
        Ok(triplets)
    }

    /// Map pool-local triples back to train-slice [`Triplet`]s.
    pub fn to_train_triplets(&self, pool: &[usize], local: &[[usize; 3]]) -> Vec<Triplet> {
        local
            .iter()
            .map(|[a, p, n]| Triplet {
                anchor: pool[*a],
                positive: pool[*p],
                negative: pool[*n],
            })
            .collect()
    }

    pub fn train(&self) -> &[Utterance] {
        self.train
    }
}

/// Sample `batch_size` triplets from a training slice.
///
/// `embed_pool` — when given — maps pool train-indices to embedding rows
/// with the current model (enabling semi-hard mining); `None` mines
/// randomly.
pub fn sample_triplets(
    train: &[Utterance],
    batch_size: usize,
    strategy: crate::nn::TripletStrategy,
    embed_pool: Option<&dyn Fn(&[usize]) -> Result<ndarray::Array2<f32>>>,
    alpha: f64,
    rng: &mut impl Rng,
) -> Result<Vec<Triplet>> {
    let sampler = TripletSampler::new(train)?;
    let pool = sampler.draw_pool(batch_size, rng);
    let embeddings = match embed_pool {
        Some(f) => Some(f(&pool)?),
        None => None,
    };
    let local = sampler.mine_pool(
        &pool,
        embeddings.as_ref().map(|e| e.view()),
        strategy,
        alpha,
        rng,
    )?;
    Ok(sampler.to_train_triplets(&pool, &local))
}

/// Decision rule for support/query classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionRule {
    /// Label of the globally closest support embedding; exact distance
    /// ties go to bonafide (a tie carries no spoof evidence).
    #[default]
    Nearest,
    /// Spoof when the bonafide-distance score exceeds the threshold.
    Threshold,
}

/// Output of [`classify_query`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub label: Label,
    /// Minimum distance from the query to any bonafide support embedding
    /// (higher = more spoof-like).
    pub score: f64,
}

/// Classify one query embedding against labeled support embeddings.
///
/// The score is always the minimum distance to a bonafide support, so
/// both rules need at least one bonafide entry. The function never sees
/// the query's true label.
pub fn classify_query(
    query: &Embedding,
    support: &[(Label, Embedding)],
    rule: DecisionRule,
    threshold: f64,
) -> Result<Decision> {
    if support.is_empty() {
        return Err(Error::EmptySupport {
            context: "classify_query".to_string(),
        });
    }
    let mut best_bonafide = f64::INFINITY;
    let mut best_spoof = f64::INFINITY;
    for (label, emb) in support {
        let d = query.distance(emb)?;
        match label {
            Label::Bonafide => best_bonafide = best_bonafide.min(d),
            Label::Spoof => best_spoof = best_spoof.min(d),
        }
    }
    if best_bonafide.is_infinite() {
        return Err(Error::NoBonafideSupport);
    }
    let label = match rule {
        DecisionRule::Nearest => {
            if best_spoof < best_bonafide {
                Label::Spoof
            } else {
                Label::Bonafide
            }
        }
        DecisionRule::Threshold => {
            if best_bonafide > threshold {
                Label::Spoof
            } else {
                Label::Bonafide
            }
        }
    };
    Ok(Decision {
        label,
        score: best_bonafide,
    })
}

/// One scored query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub utt_id: String,
    pub speaker_id: String,
    /// "-" for bonafide.
    pub attack_id: String,
    pub true_label: Label,
    pub pred_label: Label,
    pub score: f64,
}

/// Score every query against the support set. `query_embs` must align
/// index-wise with `queries`. Classification sees only embeddings — true
/// labels are attached to the records afterwards.
pub fn evaluate(
    queries: &[Utterance],
    query_embs: &[Embedding],
    support: &[(Label, Embedding)],
    rule: DecisionRule,
    threshold: f64,
) -> Result<Vec<QueryRecord>> {
    if queries.len() != query_embs.len() {
        return Err(Error::LengthMismatch {
            context: "query embeddings".to_string(),
            left: queries.len(),
            right: query_embs.len(),
        });
    }
    let mut records = Vec::with_capacity(queries.len());
    for (u, emb) in queries.iter().zip(query_embs) {
        let decision = classify_query(emb, support, rule, threshold)?;
        records.push(QueryRecord {
            utt_id: u.utt_id.clone(),
            speaker_id: u.speaker_id.clone(),
            attack_id: u.attack_or_dash().to_string(),
            true_label: u.label,
            pred_label: decision.label,
            score: decision.score,
        });
    }
    Ok(records)
}

/// Persist per-query records as CSV
/// (`utt_id,speaker,attack_id,true_label,pred_label,score`).
pub fn write_query_records_csv(path: &Path, records: &[QueryRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv("query records", e))?;
    w.write_record(["utt_id", "speaker", "attack_id", "true_label", "pred_label", "score"])
        .map_err(|e| Error::csv("query records", e))?;
    for r in records {
        w.write_record([
            r.utt_id.as_str(),
            r.speaker_id.as_str(),
            r.attack_id.as_str(),
            r.true_label.as_str(),
            r.pred_label.as_str(),
            &format!("{:.17}", r.score),
        ])
        .map_err(|e| Error::csv("query records", e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::TripletStrategy;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn utt(id: &str, spk: &str, label: Label, attack: Option<&str>) -> Utterance {
        Utterance {
            utt_id: id.to_string(),
            speaker_id: spk.to_string(),
            label,
            attack_id: attack.map(str::to_string),
            path: PathBuf::from(format!("{id}.wav")),
        }
    }

    /// n speakers, each with `per` bonafide and `per` spoof utterances.
    fn manifest(n_speakers: usize, per: usize) -> Vec<Utterance> {
        let mut out = Vec::new();
        for s in 0..n_speakers {
            for k in 0..per {
                out.push(utt(
                    &format!("b-{s}-{k}"),
                    &format!("spk{s:02}"),
                    Label::Bonafide,
                    None,
                ));
                out.push(utt(
                    &format!("s-{s}-{k}"),
                    &format!("spk{s:02}"),
                    Label::Spoof,
                    Some("S1"),
                ));
            }
        }
        out
    }

    #[test]
    fn split_partitions_speakers_disjointly() {
        let m = manifest(6, 3);
        let split = split_dataset(&m, SplitRatios::default(), 7, SupportMode::PerClass).unwrap();
        split.validate().unwrap();
        // 6 speakers at 4:1:1 → 4/1/1.
        let speakers = |us: &[Utterance]| {
            us.iter()
                .map(|u| u.speaker_id.clone())
                .collect::<std::collections::BTreeSet<_>>()
        };
        assert_eq!(speakers(&split.train).len(), 4);
        assert_eq!(speakers(&split.query).len(), 1);
        // Union is complete.
        let mut all = speakers(&split.train);
        all.extend(speakers(&split.support));
        all.extend(speakers(&split.query));
        assert_eq!(all.len(), 6);
        // Strict one-shot support: one per class.
        assert_eq!(split.support.len(), 2);
        assert_ne!(split.support[0].label, split.support[1].label);
    }

    #[test]
    fn split_is_seed_deterministic() {
        let m = manifest(8, 2);
        let a = split_dataset(&m, SplitRatios::default(), 3, SupportMode::PerClass).unwrap();
        let b = split_dataset(&m, SplitRatios::default(), 3, SupportMode::PerClass).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.support, b.support);
        assert_eq!(a.query, b.query);
        let c = split_dataset(&m, SplitRatios::default(), 4, SupportMode::PerClass).unwrap();
        assert_ne!(a.train, c.train, "different seed should move speakers");
    }

    #[test]
    fn too_few_speakers_is_rejected() {
        let m = manifest(2, 3);
        assert!(matches!(
            split_dataset(&m, SplitRatios::default(), 7, SupportMode::PerClass),
            Err(Error::InsufficientSpeakers { .. })
        ));
    }

    #[test]
    fn per_attack_support_holds_one_per_group() {
        let mut m = manifest(6, 2);
        // Add a second attack for every speaker.
        for s in 0..6 {
            m.push(utt(
                &format!("s2-{s}"),
                &format!("spk{s:02}"),
                Label::Spoof,
                Some("S2"),
            ));
        }
        let split =
            split_dataset(&m, SplitRatios::default(), 7, SupportMode::PerClassAndAttack).unwrap();
        // Groups: bonafide, S1, S2 → three support utterances.
        assert_eq!(split.support.len(), 3);
    }

    #[test]
    fn speaker_disjointness_holds_over_random_manifests() {
        // Lightweight property sweep: random speaker counts and seeds.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let n = rng.random_range(3..20);
            let per = rng.random_range(1..4);
            let seed = rng.random::<u64>();
            match split_dataset(&manifest(n, per), SplitRatios::default(), seed, SupportMode::PerClass) {
                Ok(split) => split.validate().unwrap(),
                Err(Error::InsufficientSpeakers { .. }) => {}
                Err(other) => panic!("unexpected error {other:?}"),
            }
        }
    }

    #[test]
    fn sampled_triplets_satisfy_label_invariants() {
        let m = manifest(4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let triplets =
            sample_triplets(&m, 16, TripletStrategy::Random, None, 0.2, &mut rng).unwrap();
        assert_eq!(triplets.len(), 16);
        for t in &triplets {
            assert_eq!(m[t.anchor].label, m[t.positive].label);
            assert_ne!(m[t.anchor].label, m[t.negative].label);
            assert_ne!(m[t.anchor].utt_id, m[t.positive].utt_id);
        }
    }

    #[test]
    fn single_distinct_positive_is_always_chosen() {
        // One speaker pair with exactly two bonafide utterances total.
        let m = vec![
            utt("b0", "spk0", Label::Bonafide, None),
            utt("b1", "spk1", Label::Bonafide, None),
            utt("s0", "spk0", Label::Spoof, Some("S1")),
            utt("s1", "spk1", Label::Spoof, Some("S1")),
        ];
        let sampler = TripletSampler::new(&m).unwrap();
        let pool = vec![0, 1, 2, 3];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let local = sampler
                .mine_pool(&pool, None, TripletStrategy::Random, 0.2, &mut rng)
                .unwrap();
            for [a, p, _] in local {
                if m[pool[a]].label == Label::Bonafide {
                    assert_ne!(pool[p], pool[a]);
                    assert_eq!(m[pool[p]].label, Label::Bonafide);
                }
            }
        }
    }

    #[test]
    fn semi_hard_with_all_zero_distances_falls_back_without_error() {
        let m = manifest(4, 2);
        let sampler = TripletSampler::new(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pool = sampler.draw_pool(8, &mut rng);
        // Zero-weight model: every embedding identical.
        let emb = Array2::<f32>::from_elem((8, 4), 0.5);
        let local = sampler
            .mine_pool(&pool, Some(emb.view()), TripletStrategy::SemiHard, 0.2, &mut rng)
            .unwrap();
        assert_eq!(local.len(), 8);
    }

    #[test]
    fn semi_hard_prefers_margin_violating_negatives() {
        let m = vec![
            utt("b0", "spk0", Label::Bonafide, None),
            utt("b1", "spk1", Label::Bonafide, None),
            utt("s0", "spk2", Label::Spoof, Some("S1")),
            utt("s1", "spk3", Label::Spoof, Some("S1")),
        ];
        let sampler = TripletSampler::new(&m).unwrap();
        let pool = vec![0, 1, 2, 3];
        // 1-d embeddings: anchors at 0, positive at 0.1 (d_p = 0.1),
        // negatives at 0.3 (semi-hard: 0.1 < 0.3 < √(0.01+0.2) ≈ 0.458)
        // and at 5.0 (easy, outside the margin).
        let emb = Array2::from_shape_vec((4, 1), vec![0.0f32, 0.1, 0.3, 5.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let local = sampler
                .mine_pool(&pool, Some(emb.view()), TripletStrategy::SemiHard, 0.2, &mut rng)
                .unwrap();
            // Both bonafide anchors must pick the semi-hard negative s0.
            for [a, _, n] in local {
                if m[pool[a]].label == Label::Bonafide {
                    assert_eq!(pool[n], 2, "expected the semi-hard negative");
                }
            }
        }
    }

    fn emb_of(vals: &[f32]) -> Embedding {
        Embedding::from_row(ndarray::Array1::from_vec(vals.to_vec()).view())
    }

    #[test]
    fn classify_identity_query_is_bonafide_under_both_rules() {
        let bona = emb_of(&[0.5, 0.5, 0.5]);
        let spoof = emb_of(&[0.9, 0.9, 0.9]);
        let support = vec![(Label::Bonafide, bona.clone()), (Label::Spoof, spoof)];
        for rule in [DecisionRule::Nearest, DecisionRule::Threshold] {
            let d = classify_query(&bona, &support, rule, 1e-3).unwrap();
            assert_eq!(d.label, Label::Bonafide);
            assert_eq!(d.score, 0.0);
        }
    }

    #[test]
    fn nearest_ties_break_toward_bonafide() {
        let q = emb_of(&[0.5, 0.5]);
        let support = vec![
            (Label::Bonafide, emb_of(&[0.7, 0.5])),
            (Label::Spoof, emb_of(&[0.3, 0.5])),
        ];
        let d = classify_query(&q, &support, DecisionRule::Nearest, 1e-3).unwrap();
        assert_eq!(d.label, Label::Bonafide);
    }

    #[test]
    fn rules_agree_on_spoofy_query_with_spec_distances() {
        // Supports at distances {bonafide: 0.4, spoof: 0.1}.
        let q = emb_of(&[0.5, 0.5]);
        let support = vec![
            (Label::Bonafide, emb_of(&[0.9, 0.5])),
            (Label::Spoof, emb_of(&[0.6, 0.5])),
        ];
        let thr = classify_query(&q, &support, DecisionRule::Threshold, 1e-3).unwrap();
        assert_eq!(thr.label, Label::Spoof);
        assert!((thr.score - 0.4).abs() < 1e-6);
        let near = classify_query(&q, &support, DecisionRule::Nearest, 1e-3).unwrap();
        assert_eq!(near.label, Label::Spoof);
    }

    #[test]
    fn score_is_invariant_under_support_permutation() {
        let q = emb_of(&[0.2, 0.8, 0.4]);
        let mut support = vec![
            (Label::Bonafide, emb_of(&[0.3, 0.7, 0.5])),
            (Label::Spoof, emb_of(&[0.9, 0.1, 0.2])),
            (Label::Bonafide, emb_of(&[0.25, 0.75, 0.45])),
            (Label::Spoof, emb_of(&[0.1, 0.9, 0.8])),
        ];
        let base = classify_query(&q, &support, DecisionRule::Nearest, 1e-3).unwrap();
        for _ in 0..4 {
            support.rotate_left(1);
            let d = classify_query(&q, &support, DecisionRule::Nearest, 1e-3).unwrap();
            assert_eq!(d, base);
        }
    }

    #[test]
    fn threshold_rule_is_monotone_in_t() {
        let q = emb_of(&[0.2, 0.8]);
        let support = vec![
            (Label::Bonafide, emb_of(&[0.5, 0.5])),
            (Label::Spoof, emb_of(&[0.8, 0.2])),
        ];
        let mut prev_bonafide = false;
        for t in [0.0, 0.1, 0.2, 0.3, 0.5, 1.0, 2.0] {
            let d = classify_query(&q, &support, DecisionRule::Threshold, t).unwrap();
            let bona = d.label == Label::Bonafide;
            assert!(
                !prev_bonafide || bona,
                "bonafide at a smaller t must stay bonafide at larger t"
            );
            prev_bonafide = bona;
        }
        assert!(prev_bonafide, "t far above the score must yield bonafide");
    }

    #[test]
    fn support_error_paths() {
        let q = emb_of(&[0.5]);
        assert!(matches!(
            classify_query(&q, &[], DecisionRule::Nearest, 1e-3),
            Err(Error::EmptySupport { .. })
        ));
        let spoof_only = vec![(Label::Spoof, emb_of(&[0.9]))];
        assert!(matches!(
            classify_query(&q, &spoof_only, DecisionRule::Nearest, 1e-3),
            Err(Error::NoBonafideSupport)
        ));
    }

    #[test]
    fn evaluate_produces_one_record_per_query() {
        let queries = vec![
            utt("q0", "spk9", Label::Bonafide, None),
            utt("q1", "spk9", Label::Spoof, Some("S2")),
        ];
        let embs = vec![emb_of(&[0.5, 0.5]), emb_of(&[0.9, 0.9])];
        let support = vec![
            (Label::Bonafide, emb_of(&[0.5, 0.5])),
            (Label::Spoof, emb_of(&[0.9, 0.9])),
        ];
        let records =
            evaluate(&queries, &embs, &support, DecisionRule::Nearest, 1e-3).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].pred_label, Label::Bonafide);
        assert_eq!(records[1].pred_label, Label::Spoof);
        assert_eq!(records[1].attack_id, "S2");
        // Empty query set → empty records.
        assert!(evaluate(&[], &[], &support, DecisionRule::Nearest, 1e-3)
            .unwrap()
            .is_empty());
    }
}
