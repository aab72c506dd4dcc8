// Datasets whose label is only visible through the evidence paths.
#![allow(dead_code)]

use argkg_core::classify::{AnchoredPath, ClassifierHyperparams, Label, LabeledInstance};
use argkg_core::graph::{EvidencePath, PathKind, PathStep};
use argkg_core::EmbeddingTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POOL: [&str; 4] = [
    "nuclear energy is cheap",
    "school uniforms are common",
    "the minimum wage rose again",
    "cloning research continues today",
];

/// 40 instances: every pool sentence appears five times per label, and a
/// single path element (`Q_ARG` or `Q_NOARG`) carries the label.
pub fn leaked_path_dataset() -> Vec<LabeledInstance> {
    let mut out = Vec::new();
    for (i, s) in POOL.iter().enumerate() {
        for k in 0..10 {
            let label = if k % 2 == 0 { Label::Argument } else { Label::NoArgument };
            let leak = if label == Label::Argument { "Q_ARG" } else { "Q_NOARG" };
            let path = EvidencePath {
                kind: PathKind::SentenceToTopic,
                entities: vec![format!("sentence:w{i}"), format!("Q{}", 100 + k), leak.to_string()],
                steps: vec![
                    PathStep { property: "WIKIFIERED".into(), forward: true },
                    PathStep { property: "P279".into(), forward: true },
                ],
            };
            out.push(LabeledInstance {
                topic: "synthetic".into(),
                sentence: (*s).into(),
                label,
                paths: vec![AnchoredPath { path, anchors: vec![0] }],
            });
        }
    }
    out
}

pub fn pool_table(seed: u64) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = EmbeddingTable::new(5);
    for s in POOL {
        for w in s.split_whitespace() {
            if t.get(w).is_none() {
                t.insert(w, (0..5).map(|_| rng.random_range(-0.5..0.5)).collect());
            }
        }
    }
    t
}

/// Training settings for the 40-instance run: step size 0.05, no dropout,
/// ten epochs.
pub fn separation_hyperparams(seed: u64) -> ClassifierHyperparams {
    ClassifierHyperparams {
        dropout: 0.0,
        hidden_size: 8,
        batch_size: 4,
        learning_rate: 0.05,
        epochs: 10,
        attention_size: 8,
        element_size: 8,
        seed,
        ..Default::default()
    }
}

/// Five-token sentence (four covered) with two anchored paths and a random
/// label; dimension 4.
pub fn gradient_instance(rng: &mut ChaCha8Rng) -> (LabeledInstance, EmbeddingTable) {
    let words = ["alpha", "beta", "gamma", "delta", "eps"];
    let mut t = EmbeddingTable::new(4);
    for w in &words[..4] {
        t.insert(w, (0..4).map(|_| rng.random_range(-1.0..1.0)).collect());
    }
    let path = |ids: &[&str], props: &[&str]| EvidencePath {
        kind: PathKind::SentenceToSentence,
        entities: ids.iter().map(|s| s.to_string()).collect(),
        steps: props.iter().map(|p| PathStep { property: p.to_string(), forward: true }).collect(),
    };
    let paths = vec![
        AnchoredPath { path: path(&["sentence:alpha", "Q1", "Q2"], &["WIKIFIERED", "P279"]), anchors: vec![0, 2] },
        AnchoredPath { path: path(&["sentence:delta", "Q3", "Q2", "Q4"], &["WIKIFIERED", "P31", "P361"]), anchors: vec![2, 3] },
    ];
    let label = if rng.random_bool(0.5) { Label::Argument } else { Label::NoArgument };
    (LabeledInstance { topic: "t".into(), sentence: words.join(" "), label, paths }, t)
}

/// Small model sizes for finite-difference checks.
pub fn gradient_hyperparams() -> ClassifierHyperparams {
    ClassifierHyperparams { hidden_size: 3, attention_size: 4, element_size: 3, dropout: 0.0, ..Default::default() }
}
