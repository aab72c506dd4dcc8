//! Per-entity SPARQL query text and the neighborhood source contract.
//!
//! One query covers every requested property of a subject: the properties
//! are inlined as a `VALUES` set instead of issuing one request per
//! (entity, property) pair.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

pub const ENTITY_PREFIX: &str = "http://www.wikidata.org/entity/";
pub const DIRECT_PROPERTY_PREFIX: &str = "http://www.wikidata.org/prop/direct/";

/// Default cap on returned objects per entity.
pub const DEFAULT_RESULT_LIMIT: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("property list is empty")]
    NoProperties,
    #[error("invalid identifier `{0}`")]
    InvalidId(String),
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// Sorted, deduplicated property list; the canonical form used both in the
/// query text and in cache keys.
pub fn canonical_properties(properties: &[String]) -> Vec<String> {
    let set: BTreeSet<&String> = properties.iter().collect();
    set.into_iter().cloned().collect()
}

/// Builds the single query selecting `(?p ?o ?oLabel)` for `entity_id`
/// restricted to `properties`. English labels only; objects without a label
/// are still returned.
pub fn build_entity_query(entity_id: &str, properties: &[String], limit: usize) -> Result<String, QueryError> {
    if properties.is_empty() {
        return Err(QueryError::NoProperties);
    }
    if !valid_id(entity_id) {
        return Err(QueryError::InvalidId(String::from(entity_id)));
    }
    let props = canonical_properties(properties);
    if let Some(bad) = props.iter().find(|p| !valid_id(p)) {
        return Err(QueryError::InvalidId(bad.clone()));
    }
    let mut q = String::new();
    q.push_str("PREFIX wd: <http://www.wikidata.org/entity/>\n");
    q.push_str("PREFIX wdt: <http://www.wikidata.org/prop/direct/>\n");
    q.push_str("PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>\n");
    q.push_str("SELECT ?p ?o ?oLabel WHERE {\n  VALUES ?p {");
    for p in &props {
        let _ = write!(q, " wdt:{p}");
    }
    q.push_str(" }\n");
    let _ = writeln!(q, "  wd:{entity_id} ?p ?o .");
    q.push_str("  FILTER(STRSTARTS(STR(?o), \"http://www.wikidata.org/entity/Q\"))\n");
    q.push_str("  OPTIONAL { ?o rdfs:label ?oLabel . FILTER(LANG(?oLabel) = \"en\") }\n");
    let _ = write!(q, "}}\nORDER BY ?p ?o\nLIMIT {limit}\n");
    Ok(q)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborStatement {
    pub property: String,
    pub object: String,
    pub object_label: Option<String>,
}

/// Outgoing statements of one entity over a requested property set.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EntityNeighborhood {
    pub entity: String,
    pub statements: Vec<NeighborStatement>,
}

impl EntityNeighborhood {
    /// Builds a neighborhood from raw result rows `(property IRI or id,
    /// object IRI or id, label)`, keeping only requested properties and
    /// dropping exact duplicates.
    pub fn from_rows<I>(entity: &str, properties: &[String], rows: I) -> Self
    where
        I: IntoIterator<Item = (String, String, Option<String>)>,
    {
        let wanted: BTreeSet<&str> = properties.iter().map(String::as_str).collect();
        let mut seen = BTreeSet::new();
        let mut statements = Vec::new();
        for (p, o, label) in rows {
            let p = strip(&p, DIRECT_PROPERTY_PREFIX);
            let o = strip(&o, ENTITY_PREFIX);
            if !wanted.contains(p.as_str()) || o.is_empty() {
                continue;
            }
            if seen.insert((p.clone(), o.clone())) {
                statements.push(NeighborStatement {
                    property: p,
                    object: o,
                    object_label: label.filter(|l| !l.is_empty()),
                });
            }
        }
        Self { entity: String::from(entity), statements }
    }
}

fn strip(iri: &str, prefix: &str) -> String {
    String::from(iri.strip_prefix(prefix).unwrap_or(iri))
}

/// Anything that can answer "which entities does `entity` point to via
/// these properties". The SPARQL client is the production implementation.
pub trait NeighborhoodSource {
    type Error;

    fn neighborhood(&self, entity: &str, properties: &[String]) -> Result<EntityNeighborhood, Self::Error>;
}

impl<T: NeighborhoodSource + ?Sized> NeighborhoodSource for &T {
    type Error = T::Error;

    fn neighborhood(&self, entity: &str, properties: &[String]) -> Result<EntityNeighborhood, Self::Error> {
        (**self).neighborhood(entity, properties)
    }
}

/// Content-address material for caching: entity id and sorted properties.
pub fn cache_key_material(entity: &str, properties: &[String]) -> String {
    let props = canonical_properties(properties);
    format!("{entity}|{}", props.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn props(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("P{}", 100 + i)).collect()
    }

    #[test]
    fn query_is_deterministic() {
        let a = build_entity_query("Q42", &["P69".to_string()], 500).unwrap();
        let b = build_entity_query("Q42", &["P69".to_string()], 500).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("wd:Q42 ?p ?o"));
        assert!(a.contains("wdt:P69"));
    }

    #[test]
    fn fifty_properties_one_query_each_once() {
        let ps = props(50);
        let q = build_entity_query("Q42", &ps, 500).unwrap();
        for p in &ps {
            let needle = format!("wdt:{p} ");
            assert_eq!(q.matches(&needle).count(), 1, "{p}");
        }
        assert_eq!(q.matches("SELECT").count(), 1);
    }

    #[test]
    fn property_order_does_not_change_text() {
        let a = build_entity_query("Q1", &["P2".to_string(), "P1".to_string()], 10).unwrap();
        let b = build_entity_query("Q1", &["P1".to_string(), "P2".to_string(), "P1".to_string()], 10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_and_invalid_inputs() {
        assert_eq!(build_entity_query("Q42", &[], 1), Err(QueryError::NoProperties));
        assert!(matches!(
            build_entity_query("Q42 }", &["P1".to_string()], 1),
            Err(QueryError::InvalidId(_))
        ));
    }

    #[test]
    fn rows_are_filtered_and_stripped() {
        let n = EntityNeighborhood::from_rows(
            "Q42",
            &["P69".to_string()],
            vec![
                (
                    format!("{DIRECT_PROPERTY_PREFIX}P69"),
                    format!("{ENTITY_PREFIX}Q691283"),
                    Some("St John's College".to_string()),
                ),
                (format!("{DIRECT_PROPERTY_PREFIX}P69"), format!("{ENTITY_PREFIX}Q691283"), None),
                ("P31".to_string(), "Q5".to_string(), None),
            ],
        );
        assert_eq!(n.statements.len(), 1);
        assert_eq!(n.statements[0].object, "Q691283");
    }
}
