#![no_std]

//! Sentence-specific knowledge graphs for argument mining.
//!
//! This crate holds every algorithm of the evidence pipeline and depends only
//! on [`core`] and [`alloc`]:
//!
//! - [`graph`]: the entity/property multigraph, shortest evidence paths and
//!   the token-overlap MATCH merge of structured and unstructured graphs.
//! - [`query`]: per-entity SPARQL text and the neighborhood source contract
//!   the traversal pulls statements through.
//! - [`topicsel`]: LDA (collapsed Gibbs) and TF-IDF driven property selection.
//! - [`embed`]: word-vector table, sentence vectors and the cosine gate.
//! - [`traverse`]: the embedding-gated dynamic breadth-first graph growth.
//! - [`enrich`]: corpus assembly from ranked documents and triple ingestion.
//! - [`classify`]: BiLSTM sentence encoder with attention over path vectors.
//! - [`annotation`] and [`stats`]: concept annotations and report aggregates.
//!
//! IO, the HTTP client, file formats and the CLI live in the `argkg` crate.

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod annotation;
pub mod classify;
pub mod embed;
pub mod enrich;
pub mod graph;
pub mod query;
pub mod stats;
pub mod text;
pub mod topicsel;
pub mod traverse;

pub use annotation::{ConceptAnnotation, ConceptSource};
pub use embed::{EmbeddingTable, GateDecision, GateOutcome, SentenceVector};
pub use graph::{EntityRef, EvidencePath, KnowledgeGraph, NodeOrigin, PathKind, PropertyRef, Statement};
pub use query::{EntityNeighborhood, NeighborhoodSource, NeighborStatement};
pub use text::Stopwords;
