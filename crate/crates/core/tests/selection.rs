use argkg_core::text::{preprocess, Stopwords};
use argkg_core::topicsel::{select_properties, train_lda, GibbsSampler, PropertyDescription, SelectionConfig};
use proptest::prelude::*;

fn articles() -> Vec<String> {
    let a = "galaxy star orbit planet telescope galaxy star orbit planet telescope";
    let b = "tariff market trade export import tariff market trade export import";
    (0..6).map(|i| if i % 2 == 0 { a.to_string() } else { b.to_string() }).collect()
}

#[test]
fn separable_corpus_splits_into_two_topics() {
    let stop = Stopwords::english();
    let corpus: Vec<Vec<String>> = articles().iter().map(|a| preprocess(a, &stop)).collect();
    let cfg = SelectionConfig { num_topics: 2, alpha: Some(0.1), lda_iterations: 200, seed: 3, ..Default::default() };
    let m = train_lda(&corpus, &cfg).unwrap();
    let astro = ["galaxy", "star", "orbit", "planet", "telescope"];
    for row in &m.topic_word {
        let mass: f64 = m.vocabulary.iter().zip(row).filter(|(w, _)| astro.contains(&w.as_str())).map(|(_, p)| p).sum();
        assert!(!(0.05..=0.95).contains(&mass), "mixed topic: {mass}");
    }
    // documents with the same text land in the same topic
    let arg = |r: &Vec<f64>| if r[0] > r[1] { 0 } else { 1 };
    assert_eq!(arg(&m.doc_topic[0]), arg(&m.doc_topic[2]));
    assert_ne!(arg(&m.doc_topic[0]), arg(&m.doc_topic[1]));
}

fn descriptions() -> Vec<PropertyDescription> {
    let d = |id: &str, label: &str, text: &str, count| PropertyDescription { id: id.into(), label: label.into(), description: text.into(), count };
    vec![
        d("P1", "orbits", "celestial body that this planet or star orbits", 5000),
        d("P2", "telescope", "telescope used to observe the galaxy", 1200),
        d("P3", "export", "main export goods of a market", 800),
        d("P4", "tariff", "trade tariff applied to import goods", 4000),
    ]
}

#[test]
fn selection_is_repeatable_and_respects_count_threshold() {
    let cfg = SelectionConfig { num_topics: 2, tfidf_threshold: 0.5, seed: 11, ..Default::default() };
    let stop = Stopwords::english();
    let first = select_properties(&articles(), &descriptions(), &cfg, &stop).unwrap();
    for _ in 0..4 {
        assert_eq!(select_properties(&articles(), &descriptions(), &cfg, &stop).unwrap(), first);
    }
    assert!(!first.properties.is_empty());
    assert!(first.properties.len() <= cfg.num_properties);
    assert!(!first.properties.contains(&"P3".to_string()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn distributions_stay_normalized(docs in prop::collection::vec(prop::collection::vec("[a-e]", 1..8), 1..6), k in 1usize..4, seed in any::<u64>()) {
        let mut s = GibbsSampler::new(&docs, k, 0.5, 0.01, seed).unwrap();
        for _ in 0..5 {
            s.sweep();
            prop_assert_eq!(s.total_assignments(), s.token_count());
        }
        let m = s.model();
        for row in m.topic_word.iter().chain(&m.doc_topic) {
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&p| p > 0.0));
        }
    }
}
