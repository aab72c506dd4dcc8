//! Word vectors, sentence vectors and the cosine gate.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::text::{label_tokens, tokenize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmbedError {
    #[error("line {line}: expected {expected} values, found {found}")]
    Arity { line: usize, expected: usize, found: usize },
    #[error("line {line}: invalid number `{value}`")]
    Number { line: usize, value: String },
    #[error("embedding table has dimension 0")]
    EmptyTable,
    #[error("no token of the sentence has a vector")]
    Unembeddable,
}

/// Token to vector lookup with a fixed dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        Self { dimension, vectors: BTreeMap::new() }
    }

    /// Parses the whitespace-separated text format `token v1 .. vD`. The
    /// dimension is taken from the first non-empty line; duplicate tokens
    /// keep their first vector.
    pub fn parse(text: &str) -> Result<Self, EmbedError> {
        let mut table = EmbeddingTable::new(0);
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            table.parse_line(line, i + 1)?;
        }
        Ok(table)
    }

    /// Parses and inserts one line. `line_no` is used for error messages.
    pub fn parse_line(&mut self, line: &str, line_no: usize) -> Result<(), EmbedError> {
        let mut parts = line.split(' ').filter(|p| !p.is_empty());
        let Some(token) = parts.next() else {
            return Ok(());
        };
        let values: Vec<&str> = parts.collect();
        if self.dimension == 0 && self.vectors.is_empty() {
            self.dimension = values.len();
        }
        if values.len() != self.dimension || values.is_empty() {
            return Err(EmbedError::Arity { line: line_no, expected: self.dimension, found: values.len() });
        }
        let mut v = Vec::with_capacity(values.len());
        for s in values {
            let x: f64 = s
                .parse()
                .map_err(|_| EmbedError::Number { line: line_no, value: String::from(s) })?;
            v.push(x);
        }
        self.vectors.entry(String::from(token)).or_insert(v);
        Ok(())
    }

    pub fn insert(&mut self, token: &str, vector: Vec<f64>) {
        assert_eq!(vector.len(), self.dimension, "vector length must equal table dimension");
        self.vectors.insert(String::from(token), vector);
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// A table is usable once it has a non-zero dimension.
    pub fn is_valid(&self) -> bool {
        self.dimension > 0
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }
}

/// Cosine similarity; any zero vector gives 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (libm::sqrt(na) * libm::sqrt(nb))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceVector {
    pub v: Vec<f64>,
    pub covered_tokens: usize,
    pub total_tokens: usize,
}

/// Mean of the vectors of all covered tokens of the lowercased sentence.
pub fn sentence_vector(sentence: &str, table: &EmbeddingTable) -> Result<SentenceVector, EmbedError> {
    if !table.is_valid() {
        return Err(EmbedError::EmptyTable);
    }
    let tokens = tokenize(sentence);
    let mut sum = vec![0.0; table.dimension()];
    let mut covered = 0;
    for t in &tokens {
        if let Some(v) = table.get(t) {
            covered += 1;
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
    }
    if covered == 0 {
        return Err(EmbedError::Unembeddable);
    }
    for s in &mut sum {
        *s /= covered as f64;
    }
    Ok(SentenceVector { v: sum, covered_tokens: covered, total_tokens: tokens.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateOutcome {
    Accept,
    Reject,
    /// No label token has a vector; traversal treats this as accepted.
    NoCoverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub outcome: GateOutcome,
    /// `None` exactly when the outcome is `NoCoverage`.
    pub max_cosine: Option<f64>,
}

impl GateDecision {
    pub fn admits(&self) -> bool {
        self.outcome != GateOutcome::Reject
    }
}

/// Maximum cosine between the sentence vector and any covered token of the
/// entity label.
pub fn max_label_cosine(entity_label: &str, v_s: &SentenceVector, table: &EmbeddingTable) -> Option<f64> {
    label_tokens(entity_label)
        .iter()
        .filter_map(|t| table.get(t))
        .map(|v| cosine(&v_s.v, v))
        .fold(None, |best: Option<f64>, c| Some(best.map_or(c, |b| b.max(c))))
}

/// Accepts iff the maximum label-token cosine is strictly above `t_cos`.
pub fn gate(entity_label: &str, v_s: &SentenceVector, table: &EmbeddingTable, t_cos: f64) -> GateDecision {
    debug_assert!(t_cos > -1.0 && t_cos < 1.0, "t_cos must lie in (-1, 1)");
    match max_label_cosine(entity_label, v_s, table) {
        None => GateDecision { outcome: GateOutcome::NoCoverage, max_cosine: None },
        Some(c) if c > t_cos => GateDecision { outcome: GateOutcome::Accept, max_cosine: Some(c) },
        Some(c) => GateDecision { outcome: GateOutcome::Reject, max_cosine: Some(c) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> EmbeddingTable {
        EmbeddingTable::parse("a 1 0\nb 0 1\n").unwrap()
    }

    #[test]
    fn parse_two_lines() {
        let t = ab();
        assert_eq!(t.dimension(), 2);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("b"), Some(&[0.0, 1.0][..]));
    }

    #[test]
    fn parse_empty_is_invalid() {
        let t = EmbeddingTable::parse("").unwrap();
        assert!(!t.is_valid());
        assert_eq!(sentence_vector("a", &t), Err(EmbedError::EmptyTable));
    }

    #[test]
    fn arity_mismatch_reports_line() {
        let err = EmbeddingTable::parse("a 1 0\nb 0 1\nc 1\n").unwrap_err();
        assert_eq!(err, EmbedError::Arity { line: 3, expected: 2, found: 1 });
        assert!(matches!(
            EmbeddingTable::parse("a 1 x\n"),
            Err(EmbedError::Number { line: 1, .. })
        ));
    }

    #[test]
    fn sentence_average() {
        let t = ab();
        let v = sentence_vector("A b!", &t).unwrap();
        assert_eq!(v.v, [0.5, 0.5]);
        assert_eq!((v.covered_tokens, v.total_tokens), (2, 2));
        let single = sentence_vector("a zz", &t).unwrap();
        assert_eq!(single.v, [1.0, 0.0]);
        assert_eq!(single.total_tokens, 2);
        assert_eq!(sentence_vector("zz", &t), Err(EmbedError::Unembeddable));
    }

    #[test]
    fn permuted_tokens_same_vector() {
        let t = EmbeddingTable::parse("a 1 2\nb 3 -1\nc 0.5 0.5\n").unwrap();
        assert_eq!(sentence_vector("a b c", &t).unwrap().v, sentence_vector("c a b", &t).unwrap().v);
    }

    #[test]
    fn zero_vector_cosine_is_zero() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
        assert!((cosine(&[3.0, 4.0], &[3.0, 4.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gate_outcomes() {
        let t = ab();
        let vs = sentence_vector("a", &t).unwrap();
        assert_eq!(gate("a", &vs, &t, 0.4).outcome, GateOutcome::Accept);
        assert_eq!(gate("b", &vs, &t, 0.4).outcome, GateOutcome::Reject);
        let nc = gate("qzxv", &vs, &t, 0.4);
        assert_eq!(nc, GateDecision { outcome: GateOutcome::NoCoverage, max_cosine: None });
        assert!(nc.admits());
        assert_eq!(gate("b-a", &vs, &t, 0.4).max_cosine, Some(1.0));
    }
}
