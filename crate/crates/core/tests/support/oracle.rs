// Brute-force reference implementations shared by the oracle tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use argkg_core::graph::{merge_graphs, EntityRef, KnowledgeGraph, NodeOrigin, Statement, MATCH};
use argkg_core::text::Stopwords;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Route = (Vec<String>, Vec<(String, bool)>);

pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> KnowledgeGraph {
    let n = rng.random_range(1..=max_nodes);
    let mut g = KnowledgeGraph::new();
    for i in 0..n {
        g.upsert_node(EntityRef::structured(format!("Q{i}"), format!("n{i}")));
    }
    let m = rng.random_range(0..=2 * n);
    for _ in 0..m {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let p = format!("P{}", rng.random_range(1..4));
        g.add_edge(Statement::new(format!("Q{a}"), p, format!("Q{b}"))).unwrap();
    }
    g
}

/// All-pairs hop distances on the undirected view (Floyd-Warshall).
fn all_pairs(g: &KnowledgeGraph, ids: &[String]) -> Vec<Vec<usize>> {
    let n = ids.len();
    let inf = usize::MAX / 4;
    let pos = |id: &str| ids.iter().position(|x| x == id).unwrap();
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for e in g.edges() {
        let (a, b) = (pos(&e.subject), pos(&e.object));
        if a != b {
            d[a][b] = 1;
            d[b][a] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Minimum-hop route with the smallest entity sequence, then the smallest
/// (property, backward) step sequence, found by enumerating every walk.
pub fn shortest_route(g: &KnowledgeGraph, from: &str, to: &str) -> Option<Route> {
    let ids: Vec<String> = g.nodes().iter().map(|n| n.id.clone()).collect();
    let d = all_pairs(g, &ids);
    let pos = |id: &str| ids.iter().position(|x| x == id).unwrap();
    let (f, t) = (pos(from), pos(to));
    if d[f][t] >= usize::MAX / 4 {
        return None;
    }
    let len = d[f][t];
    let mut best: Option<Route> = None;
    let mut ents = vec![ids[f].clone()];
    let mut steps: Vec<(String, bool)> = Vec::new();
    let dist_to: std::collections::BTreeMap<String, usize> = ids.iter().enumerate().map(|(i, id)| (id.clone(), d[i][t])).collect();
    fn rec(
        g: &KnowledgeGraph,
        dist_to: &std::collections::BTreeMap<String, usize>,
        to: &str,
        left: usize,
        ents: &mut Vec<String>,
        steps: &mut Vec<(String, bool)>,
        best: &mut Option<Route>,
    ) {
        let cur = ents.last().unwrap().clone();
        if left == 0 {
            if cur == to {
                // key: entity ids, then (property, backward) per step
                let cand = (ents.clone(), steps.clone());
                let key = |r: &Route| (r.0.clone(), r.1.iter().map(|(p, f)| (p.clone(), !f)).collect::<Vec<_>>());
                if best.as_ref().is_none_or(|b| key(&cand) < key(b)) {
                    *best = Some(cand);
                }
            }
            return;
        }
        for e in g.edges() {
            let hops: [(bool, &str, &str); 2] = [(true, &e.subject, &e.object), (false, &e.object, &e.subject)];
            for (fwd, a, b) in hops {
                if a != cur || a == b || dist_to[b] != left - 1 {
                    continue;
                }
                ents.push(b.to_string());
                steps.push((e.predicate.clone(), fwd));
                rec(g, dist_to, to, left - 1, ents, steps, best);
                ents.pop();
                steps.pop();
            }
        }
    }
    rec(g, &dist_to, &ids[t], len, &mut ents, &mut steps, &mut best);
    best
}

/// Shortest-path mismatches between the library and the oracle over every
/// ordered node pair of one random graph.
pub fn shortest_path_mismatches(seed: u64, max_nodes: usize) -> usize {
    use argkg_core::graph::PathKind;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_graph(&mut rng, max_nodes);
    let ids: Vec<String> = g.nodes().iter().map(|n| n.id.clone()).collect();
    let mut bad = 0;
    for a in &ids {
        for b in &ids {
            let got = g.shortest_path(a, b, PathKind::SentenceToSentence).unwrap().map(|p| {
                let steps = p.steps.iter().map(|s| (s.property.clone(), s.forward)).collect::<Vec<_>>();
                (p.entities, steps)
            });
            if got != shortest_route(&g, a, b) {
                bad += 1;
            }
        }
    }
    bad
}

const WORDS: [&str; 14] = [
    "office", "offices", "room", "the", "of", "in", "time", "times", "12", "2020", "ox", "space", "energy", "nuclear",
];

fn phrase(rng: &mut ChaCha8Rng) -> String {
    let k = rng.random_range(1..=3);
    (0..k).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

/// Random structured and unstructured graphs sharing a small vocabulary.
pub fn random_merge_case(rng: &mut ChaCha8Rng, max_nodes: usize) -> (KnowledgeGraph, KnowledgeGraph) {
    let mut s = KnowledgeGraph::new();
    for i in 0..rng.random_range(1..=max_nodes / 2) {
        let node = if rng.random_bool(0.3) {
            EntityRef::concept(format!("sentence:c{i}"), phrase(rng))
        } else {
            EntityRef::structured(format!("Q{i}"), phrase(rng))
        };
        s.upsert_node(node);
    }
    let mut u = KnowledgeGraph::new();
    let mut ids = Vec::new();
    for _ in 0..rng.random_range(1..=max_nodes / 2) {
        let n = EntityRef::unstructured(&phrase(rng));
        ids.push(n.id.clone());
        u.upsert_node(n);
    }
    if ids.len() > 1 {
        u.add_edge(Statement::new(ids[0].clone(), "OPENIED", ids[1].clone())).unwrap();
    }
    (s, u)
}

fn qualifies(t: &str, stop: &Stopwords) -> bool {
    t.chars().count() > 2 && !t.chars().all(|c| c.is_ascii_digit()) && !stop.contains(t)
}

/// Every (left, right) MATCH edge implied by pairwise token comparison.
pub fn expected_match_edges(s: &KnowledgeGraph, u: &KnowledgeGraph, stop: &Stopwords) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for a in s.nodes().iter().filter(|n| n.origin != NodeOrigin::Unstructured) {
        for b in u.nodes() {
            let shared = a.tokens.iter().any(|t| qualifies(t, stop) && b.tokens.contains(t));
            if shared {
                out.insert((a.id.clone(), b.id.clone()));
                out.insert((b.id.clone(), a.id.clone()));
            }
        }
    }
    out
}

pub fn match_mismatches(seed: u64, max_nodes: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s, u) = random_merge_case(&mut rng, max_nodes);
    let stop = Stopwords::english();
    let merged = merge_graphs(&s, &u, &stop);
    let got: BTreeSet<(String, String)> = merged
        .edges()
        .iter()
        .filter(|e| e.predicate == MATCH)
        .map(|e| (e.subject.clone(), e.object.clone()))
        .collect();
    let want = expected_match_edges(&s, &u, &stop);
    got.symmetric_difference(&want).count()
}
