//! Embedding-gated breadth-first growth of the structured knowledge graph.
//!
//! Seeds are the linked entities of the annotated concepts. Each iteration
//! expands the whole frontier with one neighborhood request per entity; a
//! newly seen object joins the graph only if its label passes the cosine gate
//! against the sentence vector (labels without any embedded token pass).
//! Edges to entities already in the graph are always kept.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::annotation::ConceptAnnotation;
use crate::embed::{gate, sentence_vector, EmbedError, EmbeddingTable, SentenceVector};
use crate::graph::{EntityRef, KnowledgeGraph, NodeOrigin, PropertyRef, Provenance, Statement, WIKIFIERED};
use crate::query::{NeighborhoodSource, DEFAULT_RESULT_LIMIT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraversalConfig {
    /// `None` disables the gate.
    pub cosine_threshold: Option<f64>,
    pub max_nodes: usize,
    pub max_depth: usize,
    pub per_entity_result_limit: usize,
}

impl Default for TraversalConfig {
    fn default() -> Self {
        Self {
            cosine_threshold: Some(0.4),
            max_nodes: 600,
            max_depth: 10,
            per_entity_result_limit: DEFAULT_RESULT_LIMIT,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraversalStats {
    /// Largest BFS depth of any entity in the graph (seeds are depth 0).
    pub depth_reached: usize,
    /// Structured entities in the graph, seeds included.
    pub nodes_visited: usize,
    /// Knowledge-base statement edges added.
    pub edges_added: usize,
    pub queries_issued: usize,
    pub gate_rejections: usize,
    /// Entities expanded in each iteration.
    pub frontier_sizes: Vec<usize>,
    /// Set when new entities were refused because the node cap was hit.
    pub truncated: bool,
    pub wall_time_secs: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum TraversalError<E> {
    #[error("no concept annotations")]
    NoAnnotations,
    #[error("no properties to traverse")]
    NoProperties,
    #[error("invalid traversal config: {0}")]
    InvalidConfig(&'static str),
    #[error("sentence vector: {0}")]
    Embed(EmbedError),
    #[error("neighborhood source failed for {entity}")]
    Source { entity: String, source: E },
}

/// Runs the gated BFS and returns the graph with its statistics.
pub fn dynamic_bfs<S: NeighborhoodSource>(
    sentence: &str,
    annotations: &[ConceptAnnotation],
    properties: &[String],
    table: &EmbeddingTable,
    source: &S,
    config: &TraversalConfig,
) -> Result<(KnowledgeGraph, TraversalStats), TraversalError<S::Error>> {
    if annotations.is_empty() {
        return Err(TraversalError::NoAnnotations);
    }
    if properties.is_empty() {
        return Err(TraversalError::NoProperties);
    }
    if config.max_nodes == 0 {
        return Err(TraversalError::InvalidConfig("max_nodes must be >= 1"));
    }
    if config.max_depth == 0 {
        return Err(TraversalError::InvalidConfig("max_depth must be >= 1"));
    }
    let gate_state: Option<(SentenceVector, f64)> = match config.cosine_threshold {
        Some(t) => {
            if !(t > -1.0 && t < 1.0) {
                return Err(TraversalError::InvalidConfig("cosine_threshold must lie in (-1, 1)"));
            }
            Some((sentence_vector(sentence, table).map_err(TraversalError::Embed)?, t))
        }
        None => None,
    };

    let mut g = KnowledgeGraph::new();
    let mut stats = TraversalStats::default();
    g.register_property(PropertyRef { id: String::from(WIKIFIERED), label: String::from(WIKIFIERED) });

    let mut depth: BTreeMap<String, usize> = BTreeMap::new();
    let mut frontier: Vec<String> = Vec::new();
    for a in annotations {
        if !depth.contains_key(&a.entity_id) {
            if depth.len() >= config.max_nodes {
                stats.truncated = true;
                continue;
            }
            depth.insert(a.entity_id.clone(), 0);
            frontier.push(a.entity_id.clone());
        }
        let concept = a.concept_node();
        let stmt = Statement::new(concept.id.clone(), WIKIFIERED, a.entity_id.clone()).with_provenance(Provenance::Wikified);
        g.add_statement(stmt, concept, a.entity_node());
    }

    let mut visited: BTreeSet<String> = BTreeSet::new();
    let mut d = 0;
    while !frontier.is_empty() && d < config.max_depth && depth.len() < config.max_nodes {
        d += 1;
        let mut next = Vec::new();
        let mut expanded = 0;
        for e in frontier.drain(..) {
            if !visited.insert(e.clone()) {
                continue;
            }
            expanded += 1;
            stats.queries_issued += 1;
            let hood = source
                .neighborhood(&e, properties)
                .map_err(|err| TraversalError::Source { entity: e.clone(), source: err })?;
            for st in hood.statements.iter().take(config.per_entity_result_limit) {
                let known = g.node(&st.object).is_some_and(|n| n.origin == NodeOrigin::Structured);
                if !known {
                    if depth.len() >= config.max_nodes {
                        stats.truncated = true;
                        continue;
                    }
                    let label = st.object_label.clone().unwrap_or_else(|| st.object.clone());
                    if let Some((vs, t)) = &gate_state {
                        if !gate(&label, vs, table, *t).admits() {
                            stats.gate_rejections += 1;
                            continue;
                        }
                    }
                    g.upsert_node(EntityRef::structured(st.object.clone(), label));
                    depth.insert(st.object.clone(), d);
                    next.push(st.object.clone());
                }
                let added = g
                    .add_edge(Statement::new(e.clone(), st.property.clone(), st.object.clone()))
                    .unwrap_or(false);
                if added {
                    stats.edges_added += 1;
                }
            }
        }
        stats.frontier_sizes.push(expanded);
        frontier = next;
    }

    stats.nodes_visited = depth.len();
    stats.depth_reached = depth.values().copied().max().unwrap_or(0);
    Ok((g, stats))
}
