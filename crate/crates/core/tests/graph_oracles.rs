mod support;

use argkg_core::graph::{merge_graphs, EntityRef, KnowledgeGraph, PathKind, Statement, MATCH};
use argkg_core::text::Stopwords;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::oracle;

#[test]
fn shortest_paths_agree_with_walk_enumeration() {
    let bad: usize = (0..200).map(|s| oracle::shortest_path_mismatches(s, 15)).sum();
    assert_eq!(bad, 0);
}

#[test]
fn match_edges_agree_with_pairwise_comparison() {
    let bad: usize = (0..200).map(|s| oracle::match_mismatches(s, 15)).sum();
    assert_eq!(bad, 0);
}

#[test]
fn office_and_offices_match_but_stopwords_and_numbers_do_not() {
    let stop = Stopwords::english();
    let mut s = KnowledgeGraph::new();
    s.upsert_node(EntityRef::structured("Q12823105", "office"));
    s.upsert_node(EntityRef::structured("Q1", "of the 2020"));
    let mut u = KnowledgeGraph::new();
    u.upsert_node(EntityRef::unstructured("large offices"));
    u.upsert_node(EntityRef::unstructured("the 2020 of"));
    let g = merge_graphs(&s, &u, &stop);
    assert!(g.has_edge("Q12823105", MATCH, "oie:large offices"));
    assert!(g.has_edge("oie:large offices", MATCH, "Q12823105"));
    assert!(!g.has_edge("Q1", MATCH, "oie:the 2020 of"));
}

fn arb_graph() -> impl Strategy<Value = KnowledgeGraph> {
    any::<u64>().prop_map(|seed| oracle::random_graph(&mut ChaCha8Rng::seed_from_u64(seed), 12))
}

proptest! {
    #[test]
    fn paths_are_valid_and_symmetric_in_length(g in arb_graph()) {
        let ids: Vec<String> = g.nodes().iter().map(|n| n.id.clone()).collect();
        for a in &ids {
            for b in &ids {
                let ab = g.shortest_path(a, b, PathKind::SentenceToSentence).unwrap();
                let ba = g.shortest_path(b, a, PathKind::SentenceToSentence).unwrap();
                prop_assert_eq!(ab.is_some(), ba.is_some());
                if let (Some(p), Some(q)) = (ab, ba) {
                    prop_assert!(p.is_valid_in(&g));
                    prop_assert_eq!(p.edge_count(), q.edge_count());
                    prop_assert_eq!(p.elements().len(), 2 * p.edge_count() + 1);
                }
            }
        }
    }

    #[test]
    fn merge_keeps_every_original_edge(seed in any::<u64>()) {
        let (s, u) = oracle::random_merge_case(&mut ChaCha8Rng::seed_from_u64(seed), 12);
        let g = merge_graphs(&s, &u, &Stopwords::english());
        for e in s.edges() {
            prop_assert!(g.has_edge(&e.subject, &e.predicate, &e.object));
        }
        for e in g.edges().iter().filter(|e| e.predicate == MATCH) {
            prop_assert!(g.has_edge(&e.object, MATCH, &e.subject));
        }
        prop_assert!(g.node_count() >= s.node_count());
    }

    #[test]
    fn extracted_evidence_has_no_empty_paths(seed in any::<u64>()) {
        let mut g = oracle::random_graph(&mut ChaCha8Rng::seed_from_u64(seed), 10);
        let n = g.node_count();
        g.upsert_node(EntityRef::concept("topic:t", "t"));
        g.upsert_node(EntityRef::concept("sentence:a", "a"));
        g.upsert_node(EntityRef::concept("sentence:b", "b"));
        g.add_edge(Statement::new("sentence:a", "WIKIFIERED", "Q0")).unwrap();
        g.add_edge(Statement::new("sentence:b", "WIKIFIERED", format!("Q{}", n - 1))).unwrap();
        g.add_edge(Statement::new("topic:t", "WIKIFIERED", format!("Q{}", n / 2))).unwrap();
        let paths = g.extract_evidence(&["topic:t".into()], &["sentence:a".into(), "sentence:b".into()]).unwrap();
        for p in &paths {
            prop_assert!(p.edge_count() > 0);
            prop_assert!(p.start().starts_with("sentence:"));
        }
    }
}
