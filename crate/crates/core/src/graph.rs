//! Directed entity/property multigraph and evidence paths.
//!
//! Nodes are entities (knowledge-base items, open-IE phrases or annotated
//! concepts). Edges are labeled statements. Paths are searched over the
//! undirected view; every step records the predicate and whether it was
//! walked along or against the stored direction.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::text::{is_numeric, node_tokens, Stopwords};

pub const WIKIFIERED: &str = "WIKIFIERED";
pub const OPENIED: &str = "OPENIED";
pub const MATCH: &str = "MATCH";

/// Prefix for node ids coming from open information extraction.
pub const UNSTRUCTURED_PREFIX: &str = "oie:";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown entity id `{0}`")]
    UnknownEntity(String),
    #[error("empty property id")]
    EmptyProperty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeOrigin {
    Structured,
    Unstructured,
    Concept,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRef {
    pub id: String,
    pub label: String,
    pub tokens: Vec<String>,
    pub origin: NodeOrigin,
}

impl EntityRef {
    /// Builds a node whose token set is derived from the label.
    pub fn new(id: impl Into<String>, label: impl Into<String>, origin: NodeOrigin) -> Self {
        let label = label.into();
        let tokens = node_tokens(&label);
        Self { id: id.into(), label, tokens, origin }
    }

    pub fn structured(id: impl Into<String>, label: impl Into<String>) -> Self {
        Self::new(id, label, NodeOrigin::Structured)
    }

    /// Unstructured node keyed by its normalized phrase.
    pub fn unstructured(phrase: &str) -> Self {
        let id = format!("{UNSTRUCTURED_PREFIX}{}", normalize_phrase(phrase));
        Self::new(id, phrase.trim(), NodeOrigin::Unstructured)
    }

    pub fn concept(id: impl Into<String>, surface: impl Into<String>) -> Self {
        Self::new(id, surface, NodeOrigin::Concept)
    }
}

fn normalize_phrase(phrase: &str) -> String {
    let mut out = String::new();
    for w in phrase.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&w.to_lowercase());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyRef {
    pub id: String,
    pub label: String,
}

/// Where an edge came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Knowledge-base statement.
    Statement,
    /// Concept to entity link from the entity linker.
    Wikified,
    /// Open-IE triple.
    Triple,
    /// Token-overlap link between the structured and unstructured graphs.
    /// `openied` marks links created while enriching with open-IE triples.
    Match { openied: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub provenance: Provenance,
}

impl Statement {
    pub fn new(subject: impl Into<String>, predicate: impl Into<String>, object: impl Into<String>) -> Self {
        Self {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
            provenance: Provenance::Statement,
        }
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }
}

#[derive(Debug, Clone, Copy)]
struct Adjacent {
    node: usize,
    edge: usize,
    forward: bool,
}

#[derive(Serialize, Deserialize)]
struct GraphData {
    nodes: Vec<EntityRef>,
    properties: Vec<PropertyRef>,
    edges: Vec<Statement>,
}

/// Directed multigraph. Identical (subject, predicate, object) triples are
/// stored once; parallel edges with different predicates are kept.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(try_from = "GraphData", into = "GraphData")]
pub struct KnowledgeGraph {
    nodes: Vec<EntityRef>,
    index: BTreeMap<String, usize>,
    properties: BTreeMap<String, PropertyRef>,
    edges: Vec<Statement>,
    edge_keys: BTreeSet<(usize, usize, String)>,
    adjacency: Vec<Vec<Adjacent>>,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges && self.properties == other.properties
    }
}

impl From<KnowledgeGraph> for GraphData {
    fn from(g: KnowledgeGraph) -> Self {
        GraphData {
            nodes: g.nodes,
            properties: g.properties.into_values().collect(),
            edges: g.edges,
        }
    }
}

impl TryFrom<GraphData> for KnowledgeGraph {
    type Error = GraphError;

    fn try_from(data: GraphData) -> Result<Self, Self::Error> {
        let mut g = KnowledgeGraph::new();
        for n in data.nodes {
            g.upsert_node(n);
        }
        for p in data.properties {
            g.register_property(p);
        }
        for e in data.edges {
            g.add_edge(e)?;
        }
        Ok(g)
    }
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[EntityRef] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Statement] {
        &self.edges
    }

    pub fn properties(&self) -> impl Iterator<Item = &PropertyRef> {
        self.properties.values()
    }

    pub fn node(&self, id: &str) -> Option<&EntityRef> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn count_origin(&self, origin: NodeOrigin) -> usize {
        self.nodes.iter().filter(|n| n.origin == origin).count()
    }

    /// Inserts the node unless its id is already present. Existing nodes are
    /// never relabeled. Returns the node index.
    pub fn upsert_node(&mut self, node: EntityRef) -> usize {
        if let Some(&i) = self.index.get(&node.id) {
            return i;
        }
        let i = self.nodes.len();
        self.index.insert(node.id.clone(), i);
        self.nodes.push(node);
        self.adjacency.push(Vec::new());
        i
    }

    pub fn register_property(&mut self, property: PropertyRef) {
        self.properties.entry(property.id.clone()).or_insert(property);
    }

    pub fn property(&self, id: &str) -> Option<&PropertyRef> {
        self.properties.get(id)
    }

    /// Adds an edge between two existing nodes. Returns `Ok(false)` when the
    /// identical triple is already present.
    pub fn add_edge(&mut self, s: Statement) -> Result<bool, GraphError> {
        if s.predicate.is_empty() {
            return Err(GraphError::EmptyProperty);
        }
        let si = *self
            .index
            .get(&s.subject)
            .ok_or_else(|| GraphError::UnknownEntity(s.subject.clone()))?;
        let oi = *self
            .index
            .get(&s.object)
            .ok_or_else(|| GraphError::UnknownEntity(s.object.clone()))?;
        if !self.edge_keys.insert((si, oi, s.predicate.clone())) {
            return Ok(false);
        }
        let e = self.edges.len();
        self.adjacency[si].push(Adjacent { node: oi, edge: e, forward: true });
        if si != oi {
            self.adjacency[oi].push(Adjacent { node: si, edge: e, forward: false });
        }
        self.edges.push(s);
        Ok(true)
    }

    /// Upserts both endpoints and the edge. Idempotent for identical triples.
    pub fn add_statement(&mut self, s: Statement, subject_meta: EntityRef, object_meta: EntityRef) -> bool {
        self.upsert_node(subject_meta);
        self.upsert_node(object_meta);
        // Both endpoints exist and the predicate is checked by callers that
        // construct statements; an empty predicate is the only failure left.
        self.add_edge(s).unwrap_or(false)
    }

    pub fn has_edge(&self, subject: &str, predicate: &str, object: &str) -> bool {
        match (self.index.get(subject), self.index.get(object)) {
            (Some(&s), Some(&o)) => self.edge_keys.contains(&(s, o, String::from(predicate))),
            _ => false,
        }
    }

    /// Undirected neighbor ids of a node, sorted and deduplicated.
    pub fn neighbors(&self, id: &str) -> Vec<&str> {
        let Some(&i) = self.index.get(id) else {
            return Vec::new();
        };
        let mut out: Vec<&str> = self.adjacency[i]
            .iter()
            .map(|a| self.nodes[a.node].id.as_str())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Copy of the graph with every edge of the given provenance removed.
    pub fn without_edges(&self, mut drop: impl FnMut(&Statement) -> bool) -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new();
        for n in &self.nodes {
            g.upsert_node(n.clone());
        }
        for p in self.properties.values() {
            g.register_property(p.clone());
        }
        for e in &self.edges {
            if !drop(e) {
                let _ = g.add_edge(e.clone());
            }
        }
        g
    }

    fn idx(&self, id: &str) -> Result<usize, GraphError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownEntity(String::from(id)))
    }

    /// Hop distances from `target` over the undirected view. `usize::MAX`
    /// marks unreachable nodes.
    fn distances_to(&self, target: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.nodes.len()];
        let mut queue = VecDeque::new();
        dist[target] = 0;
        queue.push_back(target);
        while let Some(x) = queue.pop_front() {
            let d = dist[x] + 1;
            for a in &self.adjacency[x] {
                if dist[a.node] == usize::MAX {
                    dist[a.node] = d;
                    queue.push_back(a.node);
                }
            }
        }
        dist
    }

    /// Walks down the distance field from `from`, always stepping to the
    /// neighbor with the smallest id, which yields the lexicographically
    /// smallest entity sequence among all shortest paths.
    fn walk(&self, from: usize, dist: &[usize], kind: PathKind) -> Option<EvidencePath> {
        if dist[from] == usize::MAX {
            return None;
        }
        let mut entities = vec![self.nodes[from].id.clone()];
        let mut steps = Vec::with_capacity(dist[from]);
        let mut cur = from;
        while dist[cur] > 0 {
            let want = dist[cur] - 1;
            let mut best: Option<(&str, &str, bool, usize)> = None;
            for a in &self.adjacency[cur] {
                if dist[a.node] != want {
                    continue;
                }
                let nid = self.nodes[a.node].id.as_str();
                let pred = self.edges[a.edge].predicate.as_str();
                // forward steps sort first on equal predicates
                let cand = (nid, pred, !a.forward, a.node);
                let better = match best {
                    None => true,
                    Some(b) => (cand.0, cand.1, cand.2) < (b.0, b.1, b.2),
                };
                if better {
                    best = Some(cand);
                }
            }
            let (nid, pred, backward, next) = best?;
            steps.push(PathStep { property: String::from(pred), forward: !backward });
            entities.push(String::from(nid));
            cur = next;
        }
        Some(EvidencePath { kind, entities, steps })
    }

    /// Minimum-hop path over the undirected view, or `None` when the two
    /// nodes are disconnected.
    pub fn shortest_path(&self, from: &str, to: &str, kind: PathKind) -> Result<Option<EvidencePath>, GraphError> {
        let f = self.idx(from)?;
        let t = self.idx(to)?;
        let dist = self.distances_to(t);
        Ok(self.walk(f, &dist, kind))
    }

    /// All sentence-to-sentence paths (unordered pairs, in input order) then
    /// all sentence-to-topic paths. Zero-edge paths are dropped.
    pub fn extract_evidence(
        &self,
        topic_concepts: &[String],
        sentence_concepts: &[String],
    ) -> Result<Vec<EvidencePath>, GraphError> {
        let sen: Vec<usize> = sentence_concepts.iter().map(|c| self.idx(c)).collect::<Result<_, _>>()?;
        let top: Vec<usize> = topic_concepts.iter().map(|c| self.idx(c)).collect::<Result<_, _>>()?;
        let mut cache: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut out = Vec::new();
        for (i, &a) in sen.iter().enumerate() {
            for &b in &sen[i + 1..] {
                if a == b {
                    continue;
                }
                let dist = cache.entry(b).or_insert_with(|| self.distances_to(b));
                if let Some(p) = self.walk(a, dist, PathKind::SentenceToSentence) {
                    out.push(p);
                }
            }
        }
        for &t in &top {
            for &s in &sen {
                if s == t {
                    continue;
                }
                let dist = cache.entry(t).or_insert_with(|| self.distances_to(t));
                if let Some(p) = self.walk(s, dist, PathKind::SentenceToTopic) {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }

    /// Graphviz rendering for offline inspection.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph kg {\n");
        for n in &self.nodes {
            let shape = match n.origin {
                NodeOrigin::Structured => "ellipse",
                NodeOrigin::Unstructured => "box",
                NodeOrigin::Concept => "diamond",
            };
            let _ = writeln!(s, "  \"{}\" [label=\"{}\", shape={}];", esc(&n.id), esc(&n.label), shape);
        }
        for e in &self.edges {
            let label = self
                .properties
                .get(&e.predicate)
                .map(|p| p.label.as_str())
                .unwrap_or(e.predicate.as_str());
            let _ = writeln!(
                s,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                esc(&e.subject),
                esc(&e.object),
                esc(label)
            );
        }
        s.push_str("}\n");
        s
    }
}

fn esc(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// True iff the nodes share a token that is not a stopword, not numeric and
/// longer than two characters.
pub fn match_nodes(a: &EntityRef, b: &EntityRef, stopwords: &Stopwords) -> bool {
    a.tokens
        .iter()
        .any(|t| is_match_token(t, stopwords) && b.tokens.iter().any(|u| u == t))
}

fn is_match_token(t: &str, stopwords: &Stopwords) -> bool {
    t.chars().count() > 2 && !is_numeric(t) && !stopwords.contains(t)
}

/// Unions the structured and unstructured graphs and links every
/// (structured-or-concept, unstructured) node pair that passes
/// [`match_nodes`] with a MATCH edge in each direction.
///
/// Unstructured ids without the `oie:` prefix are namespaced on the way in.
pub fn merge_graphs(structured: &KnowledgeGraph, unstructured: &KnowledgeGraph, stopwords: &Stopwords) -> KnowledgeGraph {
    let mut g = structured.clone();
    merge_into(&mut g, unstructured, stopwords, false);
    g
}

/// Merge used by enrichment; returns the number of MATCH edges added.
pub(crate) fn merge_into(
    g: &mut KnowledgeGraph,
    unstructured: &KnowledgeGraph,
    stopwords: &Stopwords,
    openied: bool,
) -> usize {
    let ns = |id: &str| -> String {
        if id.starts_with(UNSTRUCTURED_PREFIX) {
            String::from(id)
        } else {
            format!("{UNSTRUCTURED_PREFIX}{id}")
        }
    };
    let left: Vec<usize> = (0..g.nodes.len())
        .filter(|&i| g.nodes[i].origin != NodeOrigin::Unstructured)
        .collect();

    let mut new_nodes = Vec::with_capacity(unstructured.nodes.len());
    for n in &unstructured.nodes {
        let mut n = n.clone();
        n.id = ns(&n.id);
        n.origin = NodeOrigin::Unstructured;
        new_nodes.push(g.upsert_node(n));
    }
    for p in unstructured.properties.values() {
        g.register_property(p.clone());
    }
    for e in &unstructured.edges {
        let mut e = e.clone();
        e.subject = ns(&e.subject);
        e.object = ns(&e.object);
        let _ = g.add_edge(e);
    }

    // token -> unstructured nodes carrying it
    let mut inverted: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &u in &new_nodes {
        for t in &g.nodes[u].tokens {
            if is_match_token(t, stopwords) {
                inverted.entry(t.as_str()).or_default().push(u);
            }
        }
    }
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &s in &left {
        for t in &g.nodes[s].tokens {
            if let Some(us) = inverted.get(t.as_str()) {
                pairs.extend(us.iter().map(|&u| (s, u)));
            }
        }
    }
    if !pairs.is_empty() {
        g.register_property(PropertyRef { id: String::from(MATCH), label: String::from(MATCH) });
    }
    let mut added = 0;
    for (s, u) in pairs {
        let sid = g.nodes[s].id.clone();
        let uid = g.nodes[u].id.clone();
        let prov = Provenance::Match { openied };
        if g.add_edge(Statement::new(sid.clone(), MATCH, uid.clone()).with_provenance(prov)).unwrap_or(false) {
            added += 1;
        }
        if g.add_edge(Statement::new(uid, MATCH, sid).with_provenance(prov)).unwrap_or(false) {
            added += 1;
        }
    }
    added
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PathKind {
    SentenceToSentence,
    SentenceToTopic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub property: String,
    /// `true` when the step follows the stored subject -> object direction.
    pub forward: bool,
}

/// Alternating entity/property sequence `e0, p0, e1, ..., en`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidencePath {
    pub kind: PathKind,
    pub entities: Vec<String>,
    pub steps: Vec<PathStep>,
}

impl EvidencePath {
    pub fn edge_count(&self) -> usize {
        self.steps.len()
    }

    /// The interleaved element ids; always of odd length.
    pub fn elements(&self) -> Vec<&str> {
        let mut out = Vec::with_capacity(self.entities.len() + self.steps.len());
        for (i, e) in self.entities.iter().enumerate() {
            out.push(e.as_str());
            if let Some(s) = self.steps.get(i) {
                out.push(s.property.as_str());
            }
        }
        out
    }

    pub fn start(&self) -> &str {
        &self.entities[0]
    }

    pub fn end(&self) -> &str {
        &self.entities[self.entities.len() - 1]
    }

    /// Checks the structural invariants against a graph: one more entity
    /// than steps, every step backed by an edge, no repeated entity.
    pub fn is_valid_in(&self, g: &KnowledgeGraph) -> bool {
        if self.entities.len() != self.steps.len() + 1 {
            return false;
        }
        let distinct: BTreeSet<&String> = self.entities.iter().collect();
        if distinct.len() != self.entities.len() {
            return false;
        }
        self.steps.iter().enumerate().all(|(i, s)| {
            let (a, b) = (&self.entities[i], &self.entities[i + 1]);
            if s.forward {
                g.has_edge(a, &s.property, b)
            } else {
                g.has_edge(b, &s.property, a)
            }
        })
    }
}
