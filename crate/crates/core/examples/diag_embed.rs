//! Scratch diagnostic: embedding geometry of a trained checkpoint over a
//! featurized corpus. Prints within/between distance statistics by
//! (speaker, class) so cluster structure is visible.

use std::collections::BTreeMap;
use std::path::PathBuf;

use quickspoof::corpus::read_manifest_csv;
use quickspoof::features::{read_feature_cache, FeatureMap};
use quickspoof::model::{Embedding, ModelCheckpoint};
use quickspoof::protocol::{split_dataset, Label, SplitRatios, SupportMode};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let (ckpt, manifest, cache) = (&args[1], &args[2], &args[3]);
    let ckpt = ModelCheckpoint::load(&PathBuf::from(ckpt)).unwrap();
    let manifest = read_manifest_csv(&PathBuf::from(manifest)).unwrap();
    let cache = PathBuf::from(cache);

    let split = split_dataset(&manifest.utterances, SplitRatios::default(), 7, SupportMode::PerClass).unwrap();
    let train_speakers: std::collections::BTreeSet<&str> =
        split.train.iter().map(|u| u.speaker_id.as_str()).collect();

    // Embed everything.
    let mut embs: BTreeMap<String, Embedding> = BTreeMap::new();
    for u in &manifest.utterances {
        let values = read_feature_cache(&cache.join(format!("{}.feat", u.utt_id))).unwrap();
        let map = FeatureMap { values, utt_id: u.utt_id.clone() };
        embs.insert(u.utt_id.clone(), ckpt.embed_features(&map).unwrap());
    }

    // Group by (speaker, group-tag) where tag is bona/S1/S2/S3.
    let mut groups: BTreeMap<(String, String), Vec<&Embedding>> = BTreeMap::new();
    for u in &manifest.utterances {
        let tag = u.attack_id.clone().unwrap_or_else(|| "bona".into());
        groups.entry((u.speaker_id.clone(), tag)).or_default().push(&embs[&u.utt_id]);
    }

    let centroid = |v: &[&Embedding]| -> Vec<f64> {
        let d = v[0].dim();
        let mut c = vec![0.0; d];
        for e in v {
            for (ci, x) in c.iter_mut().zip(e.as_slice()) {
                *ci += f64::from(*x);
            }
        }
        for ci in &mut c {
            *ci /= v.len() as f64;
        }
        c
    };
    let cdist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    let intra = |v: &[&Embedding]| -> f64 {
        let mut s = 0.0;
        let mut n = 0;
        for i in 0..v.len() {
            for j in (i + 1)..v.len() {
                s += v[i].distance(v[j]).unwrap();
                n += 1;
            }
        }
        s / n as f64
    };

    println!("== per (speaker, class): intra-group mean distance ==");
    let mut cents: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for ((spk, tag), v) in &groups {
        let role = if train_speakers.contains(spk.as_str()) { "train" } else { "eval " };
        println!("{role} {spk} {tag:4} n={:3} intra={:.4}", v.len(), intra(v));
        cents.insert((spk.clone(), tag.clone()), centroid(v));
    }

    println!("\n== bona centroid distances between speakers ==");
    let bona_cents: Vec<(&String, &Vec<f64>)> = cents
        .iter()
        .filter(|((_, t), _)| t == "bona")
        .map(|((s, _), c)| (s, c))
        .collect();
    for i in 0..bona_cents.len() {
        for j in (i + 1)..bona_cents.len() {
            let (sa, ca) = bona_cents[i];
            let (sb, cb) = bona_cents[j];
            let ra = if train_speakers.contains(sa.as_str()) { "T" } else { "E" };
            let rb = if train_speakers.contains(sb.as_str()) { "T" } else { "E" };
            println!("{ra}{rb} {sa} <-> {sb}: {:.4}", cdist(ca, cb));
        }
    }

    println!("\n== per-speaker bona centroid -> own spoof centroids ==");
    for ((spk, tag), c) in &cents {
        if tag == "bona" {
            continue;
        }
        let b = &cents[&(spk.clone(), "bona".to_string())];
        let role = if train_speakers.contains(spk.as_str()) { "train" } else { "eval " };
        println!("{role} {spk} bona->{tag}: {:.4}", cdist(b, c));
    }

    // Support utterances and their role.
    println!("\n== support ==");
    for u in &split.support {
        println!("{} {} {:?}", u.utt_id, u.speaker_id, u.label);
    }
    let _ = Label::Bonafide;
}
