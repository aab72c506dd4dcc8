//! Readers and writers for every on-disk format the tool consumes or emits.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use argkg_core::annotation::{select_concepts, ConceptAnnotation, ConceptSource};
use argkg_core::classify::{AnchoredPath, ClassifierParams, Label};
use argkg_core::enrich::RankedDocument;
use argkg_core::text::{tokenize, Stopwords};
use argkg_core::topicsel::PropertyDescription;
use argkg_core::EmbeddingTable;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}:{line}: {message}")]
    Line { path: PathBuf, line: usize, message: String },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    let io = |source| FormatError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, text).map_err(io)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, FormatError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| FormatError::Json { path: path.to_path_buf(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| FormatError::Json { path: path.to_path_buf(), source })?;
    write_text(path, &(text + "\n"))
}

fn tsv_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i, l.split('\t').collect()))
}

/// One row of the sentence corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub index: usize,
    pub topic: String,
    pub sentence: String,
    pub label: Label,
    pub split: String,
}

/// Accepts `NoArgument`, `Argument`, and the stance labels `Pro`/`Con`
/// (also `Argument_for`/`Argument_against`), which collapse to `Argument`.
pub fn parse_label(s: &str) -> Option<Label> {
    match s.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
        "noargument" | "no_argument" | "none" => Some(Label::NoArgument),
        "argument" | "pro" | "con" | "argument_for" | "argument_against" => Some(Label::Argument),
        _ => None,
    }
}

/// `topic  sentence  label  split`; an optional header row starting with
/// `topic` is skipped. Row indices count data rows from zero.
pub fn parse_dataset(text: &str, path: &Path) -> Result<Vec<DatasetRow>, FormatError> {
    let mut rows = Vec::new();
    for (line, f) in tsv_lines(text) {
        if rows.is_empty() && f[0].trim().eq_ignore_ascii_case("topic") {
            continue;
        }
        let err = |message: String| FormatError::Line { path: path.to_path_buf(), line, message };
        if f.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", f.len())));
        }
        let label = parse_label(f[2]).ok_or_else(|| err(format!("unknown label `{}`", f[2])))?;
        rows.push(DatasetRow {
            index: rows.len(),
            topic: f[0].trim().to_string(),
            sentence: f[1].trim().to_string(),
            label,
            split: f[3].trim().to_string(),
        });
    }
    Ok(rows)
}

pub fn load_dataset(path: &Path) -> Result<Vec<DatasetRow>, FormatError> {
    parse_dataset(&read_text(path)?, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawConcept {
    pub surface: String,
    pub entity_id: String,
    pub rank_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Linker output for one instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceAnnotations {
    #[serde(default)]
    pub topic_concepts: Vec<RawConcept>,
    #[serde(default)]
    pub sentence_concepts: Vec<RawConcept>,
}

impl InstanceAnnotations {
    pub fn into_concepts(self) -> Vec<ConceptAnnotation> {
        let conv = |c: RawConcept, source| ConceptAnnotation {
            surface: c.surface,
            entity_id: c.entity_id,
            rank_score: c.rank_score,
            source,
            label: c.label,
        };
        let mut out: Vec<ConceptAnnotation> = self.sentence_concepts.into_iter().map(|c| conv(c, ConceptSource::Sentence)).collect();
        out.extend(self.topic_concepts.into_iter().map(|c| conv(c, ConceptSource::Topic)));
        out
    }
}

/// Reads an annotation document and keeps the top `k_s` sentence and `k_t`
/// topic concepts.
pub fn load_annotations(path: &Path, k_s: usize, k_t: usize) -> Result<Vec<ConceptAnnotation>, FormatError> {
    let doc: InstanceAnnotations = read_json(path)?;
    let all = doc.into_concepts();
    if let Some(bad) = all.iter().find(|c| c.entity_id.trim().is_empty() || c.surface.trim().is_empty()) {
        return Err(FormatError::Invalid {
            path: path.to_path_buf(),
            message: format!("concept `{}` has an empty surface or entity id", bad.surface),
        });
    }
    Ok(select_concepts(all, k_s, k_t))
}

/// Exact-match linker over a lowercase label table: scans token n-grams
/// (longest first, up to four tokens) and links every non-overlapping span
/// whose text is a known label. Scores favor longer spans, then earlier ones.
pub fn naive_link(text: &str, labels: &BTreeMap<String, String>, source: ConceptSource) -> Vec<ConceptAnnotation> {
    let toks = tokenize(text);
    let mut taken = vec![false; toks.len()];
    let mut out = Vec::new();
    for n in (1..=4usize).rev() {
        for start in 0..toks.len().saturating_sub(n - 1) {
            if taken[start..start + n].iter().any(|&t| t) {
                continue;
            }
            let span = toks[start..start + n].join(" ");
            if let Some(id) = labels.get(&span) {
                taken[start..start + n].iter_mut().for_each(|t| *t = true);
                out.push(ConceptAnnotation {
                    surface: span,
                    entity_id: id.clone(),
                    rank_score: n as f64 - start as f64 / (toks.len() as f64 + 1.0),
                    source,
                    label: None,
                });
            }
        }
    }
    out
}

/// `label  entity_id` rows, labels lowercased.
pub fn load_label_table(path: &Path) -> Result<BTreeMap<String, String>, FormatError> {
    let text = read_text(path)?;
    let mut out = BTreeMap::new();
    for (line, f) in tsv_lines(&text) {
        if f.len() != 2 {
            return Err(FormatError::Line { path: path.to_path_buf(), line, message: "expected `label<TAB>entity_id`".into() });
        }
        out.insert(f[0].trim().to_lowercase(), f[1].trim().to_string());
    }
    Ok(out)
}

/// `property_id  usage_count  label  description`.
pub fn load_property_descriptions(path: &Path) -> Result<Vec<PropertyDescription>, FormatError> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (line, f) in tsv_lines(&text) {
        if out.is_empty() && f[0].trim().eq_ignore_ascii_case("property_id") {
            continue;
        }
        let err = |message: String| FormatError::Line { path: path.to_path_buf(), line, message };
        if f.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", f.len())));
        }
        let count = f[1].trim().parse().map_err(|_| err(format!("bad usage count `{}`", f[1])))?;
        out.push(PropertyDescription {
            id: f[0].trim().to_string(),
            label: f[2].trim().to_string(),
            description: f[3].trim().to_string(),
            count,
        });
    }
    Ok(out)
}

/// Article text for each entity that has `<dir>/<entity_id>.txt`; missing
/// files are skipped.
pub fn load_articles(dir: &Path, entity_ids: &[String]) -> Result<Vec<(String, String)>, FormatError> {
    let mut out = Vec::new();
    for id in entity_ids {
        let path = dir.join(format!("{id}.txt"));
        if path.is_file() {
            out.push((id.clone(), read_text(&path)?));
        }
    }
    Ok(out)
}

/// Whitespace-separated `token v1 ... vd` lines.
pub fn load_vectors(path: &Path) -> Result<EmbeddingTable, FormatError> {
    EmbeddingTable::parse(&read_text(path)?).map_err(|e| FormatError::Invalid { path: path.to_path_buf(), message: e.to_string() })
}

pub fn load_stopwords(path: Option<&Path>) -> Result<Stopwords, FormatError> {
    match path {
        Some(p) => Ok(Stopwords::parse(&read_text(p)?)),
        None => Ok(Stopwords::english()),
    }
}

/// One JSON object per line: `{"rank": 1, "url": "...", "text": "..."}`.
pub fn load_ranked_documents(path: &Path) -> Result<Vec<RankedDocument>, FormatError> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc = serde_json::from_str(line)
            .map_err(|e| FormatError::Line { path: path.to_path_buf(), line: i + 1, message: e.to_string() })?;
        out.push(doc);
    }
    Ok(out)
}

/// File-name form of a topic: lowercase alphanumerics joined by `_`.
pub fn topic_slug(topic: &str) -> String {
    tokenize(topic).join("_")
}

/// Evidence paths of one instance, as written by the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCache {
    pub index: usize,
    pub topic: String,
    pub sentence: String,
    pub paths: Vec<AnchoredPath>,
}

pub const CHECKPOINT_FORMAT: &str = "argkg-classifier";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Trained classifier with a per-tensor shape header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub tensors: Vec<TensorHeader>,
    pub params: ClassifierParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorHeader {
    pub name: String,
    pub len: usize,
}

impl Checkpoint {
    pub fn new(params: ClassifierParams) -> Self {
        let tensors = argkg_core::classify::Weights::NAMES
            .iter()
            .zip(params.weights.tensors())
            .map(|(n, t)| TensorHeader { name: n.to_string(), len: t.len() })
            .collect();
        Self { format: CHECKPOINT_FORMAT.to_string(), version: CHECKPOINT_VERSION, tensors, params }
    }

    pub fn load(path: &Path) -> Result<ClassifierParams, FormatError> {
        let c: Checkpoint = read_json(path)?;
        let invalid = |message: String| FormatError::Invalid { path: path.to_path_buf(), message };
        if c.format != CHECKPOINT_FORMAT || c.version != CHECKPOINT_VERSION {
            return Err(invalid(format!("unsupported checkpoint {} v{}", c.format, c.version)));
        }
        let actual: Vec<usize> = c.params.weights.tensors().iter().map(|t| t.len()).collect();
        let declared: Vec<usize> = c.tensors.iter().map(|t| t.len).collect();
        if actual != declared {
            return Err(invalid("tensor sizes disagree with the header".into()));
        }
        Ok(c.params)
    }
}
