//! Concept annotations produced by an entity linker.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::EntityRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConceptSource {
    Topic,
    Sentence,
}

/// A token span of the topic or sentence linked to a knowledge-base entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptAnnotation {
    pub surface: String,
    pub entity_id: String,
    pub rank_score: f64,
    pub source: ConceptSource,
    /// Entity title as reported by the linker, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ConceptAnnotation {
    /// Graph id of the concept node, namespaced by source.
    pub fn node_id(&self) -> String {
        let prefix = match self.source {
            ConceptSource::Topic => "topic",
            ConceptSource::Sentence => "sentence",
        };
        format!("{prefix}:{}", self.surface.trim().to_lowercase())
    }

    pub fn concept_node(&self) -> EntityRef {
        EntityRef::concept(self.node_id(), self.surface.trim())
    }

    pub fn entity_node(&self) -> EntityRef {
        let label = self.label.clone().unwrap_or_else(|| String::from(self.surface.trim()));
        EntityRef::structured(self.entity_id.clone(), label)
    }
}

/// Keeps the `k` best annotations by rank score (descending), ties by
/// entity id then surface.
pub fn top_k(mut annotations: Vec<ConceptAnnotation>, k: usize) -> Vec<ConceptAnnotation> {
    annotations.sort_by(|a, b| {
        b.rank_score
            .partial_cmp(&a.rank_score)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then_with(|| a.entity_id.cmp(&b.entity_id))
            .then_with(|| a.surface.cmp(&b.surface))
    });
    annotations.truncate(k);
    annotations
}

/// Applies `top_k` separately to topic and sentence concepts.
pub fn select_concepts(annotations: Vec<ConceptAnnotation>, k_s: usize, k_t: usize) -> Vec<ConceptAnnotation> {
    let (topic, sentence): (Vec<_>, Vec<_>) = annotations.into_iter().partition(|a| a.source == ConceptSource::Topic);
    let mut out = top_k(sentence, k_s);
    out.extend(top_k(topic, k_t));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn ann(id: &str, score: f64, source: ConceptSource) -> ConceptAnnotation {
        ConceptAnnotation { surface: id.to_lowercase(), entity_id: id.to_string(), rank_score: score, source, label: None }
    }

    #[test]
    fn keeps_top_five_sentence_concepts() {
        let anns: Vec<_> = (0..7).map(|i| ann(&format!("Q{i}"), i as f64, ConceptSource::Sentence)).collect();
        let top = select_concepts(anns, 5, 2);
        let ids: Vec<&str> = top.iter().map(|a| a.entity_id.as_str()).collect();
        assert_eq!(ids, ["Q6", "Q5", "Q4", "Q3", "Q2"]);
    }

    #[test]
    fn takes_all_when_fewer() {
        let top = select_concepts(vec![ann("Q1", 0.3, ConceptSource::Topic)], 5, 2);
        assert_eq!(top.len(), 1);
    }

    #[test]
    fn ties_by_entity_id() {
        let top = top_k(vec![ann("Q9", 1.0, ConceptSource::Sentence), ann("Q10", 1.0, ConceptSource::Sentence)], 1);
        assert_eq!(top[0].entity_id, "Q10");
    }

    #[test]
    fn node_ids_are_namespaced() {
        let a = ann("Q1", 1.0, ConceptSource::Topic);
        let b = ann("Q1", 1.0, ConceptSource::Sentence);
        assert_ne!(a.node_id(), b.node_id());
        assert_eq!(vec![a.node_id()], vec!["topic:q1".to_string()]);
    }
}
