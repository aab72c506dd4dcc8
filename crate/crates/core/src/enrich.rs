//! Unstructured knowledge from ranked topic documents.
//!
//! Documents are split into sentences, the longest sentences are packed into
//! a bounded corpus, open-IE triples over that corpus become a second graph,
//! and the second graph is joined to the structured one through MATCH edges.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::{merge_into, EntityRef, KnowledgeGraph, PropertyRef, Provenance, Statement};
use crate::text::Stopwords;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnrichError {
    #[error("invalid enrich config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnrichConfig {
    pub max_urls: usize,
    pub max_annotations: usize,
    pub max_chars: usize,
    pub min_chars: usize,
    pub min_words_per_sentence: usize,
}

impl Default for EnrichConfig {
    fn default() -> Self {
        Self { max_urls: 3, max_annotations: 600, max_chars: 99_999, min_chars: 70_000, min_words_per_sentence: 3 }
    }
}

impl EnrichConfig {
    pub fn validate(&self) -> Result<(), EnrichError> {
        if self.min_chars > self.max_chars {
            return Err(EnrichError::InvalidConfig("min_chars must not exceed max_chars"));
        }
        if self.min_words_per_sentence < 3 {
            return Err(EnrichError::InvalidConfig("min_words_per_sentence must be >= 3"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedDocument {
    pub rank: u32,
    pub url: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleAnnotation {
    pub confidence: f64,
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

/// Keeps the `max_urls` best-ranked documents in rank order.
pub fn top_documents(mut docs: Vec<RankedDocument>, max_urls: usize) -> Vec<RankedDocument> {
    docs.sort_by_key(|d| d.rank);
    docs.truncate(max_urls);
    docs
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "u.s", "u.k", "inc", "ltd",
    "co", "corp", "no", "fig", "approx", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct",
    "nov", "dec", "gen", "gov", "sen", "rep",
];

fn is_abbreviation(word_before: &str) -> bool {
    let w = word_before.trim_start_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
    if w.chars().count() == 1 && w.chars().all(char::is_alphabetic) {
        return true;
    }
    ABBREVIATIONS.contains(&w.as_str())
}

/// Rule-based sentence splitter: breaks after `.`, `?` or `!` (plus closing
/// quotes/brackets) when followed by whitespace or end of text, unless the
/// period ends a known abbreviation or a single initial.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if matches!(c, '.' | '?' | '!') {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '.' | '?' | '!' | '"' | '\'' | ')' | ']' | '\u{201d}') {
                j += 1;
            }
            let at_break = j == chars.len() || chars[j].1.is_whitespace();
            let abbrev = c == '.' && j == i + 1 && {
                let before = &text[start..pos];
                let last = before.rsplit(char::is_whitespace).next().unwrap_or("");
                is_abbreviation(last)
            };
            if at_break && !abbrev {
                let end = if j == chars.len() { text.len() } else { chars[j].0 };
                let s = text[start..end].trim();
                if !s.is_empty() {
                    out.push(String::from(s));
                }
                start = end;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(String::from(tail));
    }
    out
}

/// Sentences with at least `min_words_per_sentence` words, exact duplicates
/// removed, in document order.
pub fn collect_sentences(documents: &[RankedDocument], config: &EnrichConfig) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for d in documents {
        for s in split_sentences(&d.text) {
            if s.split_whitespace().count() >= config.min_words_per_sentence && seen.insert(s.clone()) {
                out.push(s);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    /// Selected sentences joined by newlines.
    pub text: String,
    pub sentences: Vec<String>,
    /// Fewer than `min_chars` characters could be collected.
    pub underfilled: bool,
    /// Sentences skipped because they would exceed `max_chars`.
    pub skipped: usize,
}

impl Corpus {
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// Longest sentences first (ties lexicographic), appended greedily while
/// the corpus stays within `max_chars`, until it reaches `min_chars`.
/// Lengths are in characters and include the newline separators.
pub fn build_corpus(sentences: &[String], config: &EnrichConfig) -> Corpus {
    let mut sorted: Vec<&String> = sentences.iter().collect();
    sorted.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then_with(|| a.cmp(b)));
    let mut chosen: Vec<String> = Vec::new();
    let mut total = 0usize;
    let mut skipped = 0;
    for s in sorted {
        if total >= config.min_chars {
            break;
        }
        let add = s.chars().count() + usize::from(!chosen.is_empty());
        if total + add > config.max_chars {
            skipped += 1;
            continue;
        }
        total += add;
        chosen.push(s.clone());
    }
    let text = chosen.join("\n");
    Corpus { underfilled: total < config.min_chars, text, sentences: chosen, skipped }
}

/// Outcome of triple ingestion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TripleSet {
    pub triples: Vec<TripleAnnotation>,
    pub malformed: usize,
    pub duplicates: usize,
}

/// Parses `confidence<TAB>subject<TAB>predicate<TAB>object` lines. Lines with
/// the wrong arity, a confidence outside `[0, 1]` or an empty field are
/// counted as malformed.
pub fn parse_triples_tsv(text: &str) -> (Vec<TripleAnnotation>, usize) {
    let mut out = Vec::new();
    let mut malformed = 0;
    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parsed = (fields.len() == 4)
            .then(|| fields[0].trim().parse::<f64>().ok())
            .flatten()
            .filter(|c| (0.0..=1.0).contains(c));
        match parsed {
            Some(confidence) if fields[1..].iter().all(|f| !f.trim().is_empty()) => out.push(TripleAnnotation {
                confidence,
                subject: String::from(fields[1].trim()),
                predicate: String::from(fields[2].trim()),
                object: String::from(fields[3].trim()),
            }),
            _ => malformed += 1,
        }
    }
    (out, malformed)
}

/// Removes duplicate (subject, predicate, object) triples keeping the first
/// occurrence, then keeps the first `max_annotations`.
pub fn dedupe_and_cap(triples: Vec<TripleAnnotation>, max_annotations: usize) -> (Vec<TripleAnnotation>, usize) {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut dups = 0;
    for t in triples {
        if seen.insert((t.subject.clone(), t.predicate.clone(), t.object.clone())) {
            out.push(t);
        } else {
            dups += 1;
        }
    }
    out.truncate(max_annotations);
    (out, dups)
}

pub fn ingest_triples_tsv(text: &str, config: &EnrichConfig) -> TripleSet {
    let (raw, malformed) = parse_triples_tsv(text);
    let (triples, duplicates) = dedupe_and_cap(raw, config.max_annotations);
    TripleSet { triples, malformed, duplicates }
}

/// Closed list of verbs the fallback extractor splits on.
const FALLBACK_VERBS: &[&str] = &[
    "is", "are", "was", "were", "has", "have", "had", "can", "could", "will", "would", "should", "must", "may",
    "might", "does", "do", "did", "cause", "causes", "caused", "include", "includes", "included", "contain",
    "contains", "provide", "provides", "produce", "produces", "produced", "reduce", "reduces", "increase",
    "increases", "kill", "kills", "killed", "use", "uses", "used", "need", "needs", "support", "supports",
    "oppose", "opposes", "allow", "allows", "prevent", "prevents", "protect", "protects", "make", "makes",
    "create", "creates", "require", "requires", "generate", "generates", "become", "becomes", "became",
];

/// Low-fidelity stand-in for an open-IE system: for each sentence, the
/// subject is everything before the first verb of a closed list, the
/// predicate is that verb plus directly following auxiliaries/negations,
/// and the object is the remainder. Sentences without a usable split yield
/// nothing. Confidence is fixed at 0.5.
pub fn fallback_triples(corpus: &Corpus, config: &EnrichConfig) -> TripleSet {
    let mut raw = Vec::new();
    for s in &corpus.sentences {
        let words: Vec<&str> = s.split_whitespace().collect();
        let clean = |w: &str| String::from(w.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'' && c != '-'));
        let Some(v) = words.iter().position(|w| FALLBACK_VERBS.contains(&clean(w).to_lowercase().as_str())) else {
            continue;
        };
        if v == 0 {
            continue;
        }
        let mut end = v + 1;
        while end < words.len() {
            let w = clean(words[end]).to_lowercase();
            if matches!(w.as_str(), "not" | "been" | "be" | "also" | "never") || FALLBACK_VERBS.contains(&w.as_str()) {
                end += 1;
            } else {
                break;
            }
        }
        let join = |ws: &[&str]| {
            let parts: Vec<String> = ws.iter().map(|w| clean(w)).filter(|w| !w.is_empty()).collect();
            parts.join(" ")
        };
        let subject = join(&words[..v]);
        let predicate = join(&words[v..end]);
        let object = join(&words[end..]);
        if !subject.is_empty() && !predicate.is_empty() && !object.is_empty() {
            raw.push(TripleAnnotation { confidence: 0.5, subject, predicate, object });
        }
    }
    let (triples, duplicates) = dedupe_and_cap(raw, config.max_annotations);
    TripleSet { triples, malformed: 0, duplicates }
}

/// Graph with one node per distinct subject/object phrase and one edge per
/// triple labeled with the relation phrase.
pub fn triple_graph(triples: &[TripleAnnotation]) -> KnowledgeGraph {
    let mut g = KnowledgeGraph::new();
    for t in triples {
        let s = EntityRef::unstructured(&t.subject);
        let o = EntityRef::unstructured(&t.object);
        let pred = t.predicate.trim().to_lowercase();
        g.register_property(PropertyRef { id: pred.clone(), label: String::from(t.predicate.trim()) });
        let st = Statement::new(s.id.clone(), pred, o.id.clone()).with_provenance(Provenance::Triple);
        g.add_statement(st, s, o);
    }
    g
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnrichStats {
    pub triples: usize,
    pub unstructured_nodes: usize,
    pub match_edges: usize,
}

/// Adds the triple graph to `graph` and links it with MATCH edges (marked
/// as open-IE provenance). Existing nodes and edges are untouched.
pub fn enrich(graph: &KnowledgeGraph, triples: &[TripleAnnotation], stopwords: &Stopwords) -> (KnowledgeGraph, EnrichStats) {
    let tg = triple_graph(triples);
    let mut g = graph.clone();
    let before = g.node_count();
    let match_edges = merge_into(&mut g, &tg, stopwords, true);
    let stats = EnrichStats { triples: triples.len(), unstructured_nodes: g.node_count() - before, match_edges };
    (g, stats)
}
