// Reference checks for corpus assembly and triple ingestion.
#![allow(dead_code)]

use std::collections::BTreeSet;

use argkg_core::enrich::{build_corpus, ingest_triples_tsv, EnrichConfig, TripleAnnotation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Violations of the corpus bounds for one random sentence-length multiset:
/// the total must never exceed the maximum, and an underfilled corpus must
/// be greedy-maximal (no unused sentence still fits).
pub fn corpus_violations(seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(0..40);
    let sentences: Vec<String> = (0..n).map(|i| {
        let len = rng.random_range(1..400);
        let c = (b'a' + (i % 26) as u8) as char;
        std::iter::repeat_n(c, len).collect()
    }).collect();
    let max_chars = rng.random_range(50..3000);
    let min_chars = rng.random_range(0..=max_chars);
    let cfg = EnrichConfig { max_chars, min_chars, ..Default::default() };
    let corpus = build_corpus(&sentences, &cfg);
    let total = corpus.text.chars().count();
    let mut bad = 0;
    if total > max_chars {
        bad += 1;
    }
    if total != corpus.char_len() {
        bad += 1;
    }
    // chosen sentences must come from the input multiset
    let mut pool = sentences.clone();
    for s in &corpus.sentences {
        match pool.iter().position(|p| p == s) {
            Some(i) => {
                pool.swap_remove(i);
            }
            None => bad += 1,
        }
    }
    if total < min_chars {
        if !corpus.underfilled {
            bad += 1;
        }
        let sep = usize::from(!corpus.sentences.is_empty());
        if pool.iter().any(|s| total + s.chars().count() + sep <= max_chars) {
            bad += 1;
        }
    } else if corpus.underfilled {
        bad += 1;
    }
    bad
}

/// Random triple TSV with duplicates and junk lines; checks that ingestion
/// keeps the first occurrence of each triple, in order, capped at `n_a`.
pub fn triple_violations(seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::new();
    let mut valid = Vec::new();
    for _ in 0..rng.random_range(0..80) {
        if rng.random_bool(0.1) {
            lines.push("not a triple".to_string());
            continue;
        }
        let t = TripleAnnotation {
            confidence: f64::from(rng.random_range(0..=10u8)) / 10.0,
            subject: format!("s{}", rng.random_range(0..5)),
            predicate: format!("p{}", rng.random_range(0..2)),
            object: format!("o{}", rng.random_range(0..5)),
        };
        lines.push(format!("{}\t{}\t{}\t{}", t.confidence, t.subject, t.predicate, t.object));
        valid.push(t);
    }
    let cap = rng.random_range(0..30);
    let cfg = EnrichConfig { max_annotations: cap, ..Default::default() };
    let got = ingest_triples_tsv(&lines.join("\n"), &cfg);
    let mut seen = BTreeSet::new();
    let mut want = Vec::new();
    for t in valid {
        if seen.insert((t.subject.clone(), t.predicate.clone(), t.object.clone())) && want.len() < cap {
            want.push(t);
        }
    }
    usize::from(got.triples != want) + usize::from(got.triples.len() > cap)
}
