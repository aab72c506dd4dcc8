//! Pipeline configuration, read from a TOML document.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use argkg_core::classify::ClassifierHyperparams;
use argkg_core::enrich::EnrichConfig;
use argkg_core::topicsel::SelectionConfig;
use argkg_core::traverse::TraversalConfig;
use serde::{Deserialize, Serialize};

use crate::client::ClientConfig;

/// Ablation ladder, from the sentence-only baseline to the fully enriched
/// graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    Baseline,
    #[serde(rename = "WD")]
    Wd,
    #[serde(rename = "WD_LDA")]
    WdLda,
    #[serde(rename = "WD_LDA_GV")]
    WdLdaGv,
    #[serde(rename = "WD_LDA_GV_OIE")]
    WdLdaGvOie,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Baseline, Variant::Wd, Variant::WdLda, Variant::WdLdaGv, Variant::WdLdaGvOie];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "Baseline",
            Variant::Wd => "WD",
            Variant::WdLda => "WD_LDA",
            Variant::WdLdaGv => "WD_LDA_GV",
            Variant::WdLdaGvOie => "WD_LDA_GV_OIE",
        }
    }

    pub fn builds_graph(self) -> bool {
        self != Variant::Baseline
    }

    pub fn selects_properties(self) -> bool {
        self >= Variant::WdLda
    }

    pub fn gated(self) -> bool {
        self >= Variant::WdLdaGv
    }

    pub fn enriched(self) -> bool {
        self == Variant::WdLdaGvOie
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace(['-', '+'], "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name().to_ascii_uppercase() == norm.trim_start_matches('_'))
            .ok_or_else(|| format!("unknown variant `{s}` (expected one of Baseline, WD, WD_LDA, WD_LDA_GV, WD_LDA_GV_OIE)"))
    }
}

/// Which article set feeds property selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionScope {
    /// One selection per topic over the topic's and all its sentences'
    /// concepts.
    Topic,
    /// One selection per sentence over that instance's concepts.
    Sentence,
}

/// Input and output locations. Relative paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataPaths {
    pub dataset: PathBuf,
    pub annotations_dir: PathBuf,
    /// `label<TAB>entity_id` table for the fallback linker, used when an
    /// instance has no annotation file.
    pub entity_labels: Option<PathBuf>,
    pub properties: PathBuf,
    pub articles_dir: PathBuf,
    pub vectors: PathBuf,
    pub stopwords: Option<PathBuf>,
    /// Per-topic `<slug>.jsonl` ranked documents.
    pub documents_dir: PathBuf,
    /// Per-topic `<slug>.tsv` pre-extracted triples.
    pub triples_dir: PathBuf,
    pub output_dir: PathBuf,
}

impl Default for DataPaths {
    fn default() -> Self {
        Self {
            dataset: "dataset.tsv".into(),
            annotations_dir: "annotations".into(),
            entity_labels: None,
            properties: "properties.tsv".into(),
            articles_dir: "articles".into(),
            vectors: "vectors.txt".into(),
            stopwords: None,
            documents_dir: "documents".into(),
            triples_dir: "triples".into(),
            output_dir: "out".into(),
        }
    }
}

impl DataPaths {
    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset);
        fix(&mut self.annotations_dir);
        fix(&mut self.properties);
        fix(&mut self.articles_dir);
        fix(&mut self.vectors);
        fix(&mut self.documents_dir);
        fix(&mut self.triples_dir);
        fix(&mut self.output_dir);
        if let Some(p) = self.entity_labels.as_mut() {
            fix(p);
        }
        if let Some(p) = self.stopwords.as_mut() {
            fix(p);
        }
    }
}

/// Split names used for training and testing the classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub train: String,
    pub test: String,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train: "train".into(), test: "test".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub variant: Variant,
    pub k_s: usize,
    pub k_t: usize,
    pub seeds: Vec<u64>,
    /// Worker threads for sentence jobs; 0 uses all cores.
    pub jobs: usize,
    pub selection_scope: SelectionScope,
    /// Keep measured runtimes in reports; when off they are written as zero.
    pub timings: bool,
    /// Write one Graphviz file per sentence graph.
    pub write_dot: bool,
    pub data: DataPaths,
    pub split: SplitConfig,
    pub sparql: ClientConfig,
    pub selection: SelectionConfig,
    pub traversal: TraversalConfig,
    pub enrich: EnrichConfig,
    pub classifier: ClassifierHyperparams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            variant: Variant::WdLdaGvOie,
            k_s: 5,
            k_t: 2,
            seeds: (1..=10).collect(),
            jobs: 1,
            selection_scope: SelectionScope::Topic,
            timings: false,
            write_dot: false,
            data: DataPaths::default(),
            split: SplitConfig::default(),
            sparql: ClientConfig::default(),
            selection: SelectionConfig::default(),
            traversal: TraversalConfig::default(),
            enrich: EnrichConfig::default(),
            classifier: ClassifierHyperparams::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl PipelineConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|source| ConfigError::Parse { path: base_dir.to_path_buf(), source })?;
        cfg.data.resolve(base_dir);
        if cfg.sparql.cache_dir.is_relative() {
            cfg.sparql.cache_dir = base_dir.join(&cfg.sparql.cache_dir);
        }
        if let Some(rest) = cfg.sparql.endpoint.strip_prefix("file://") {
            let p = Path::new(rest);
            if p.is_relative() {
                cfg.sparql.endpoint = format!("file://{}", base_dir.join(p).display());
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            ConfigError::Parse { source, .. } => ConfigError::Parse { path: path.to_path_buf(), source },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |m: String| ConfigError::Invalid(m);
        if self.seeds.is_empty() {
            return Err(inv("at least one seed is required".into()));
        }
        if self.k_s == 0 {
            return Err(inv("k_s must be >= 1".into()));
        }
        self.selection.validate().map_err(|e| inv(e.to_string()))?;
        self.enrich.validate().map_err(|e| inv(e.to_string()))?;
        self.classifier.validate().map_err(|e| inv(e.to_string()))?;
        if self.traversal.max_nodes == 0 || self.traversal.max_depth == 0 {
            return Err(inv("traversal caps must be >= 1".into()));
        }
        Ok(())
    }

    /// Traversal settings with the gate switched by the variant.
    pub fn traversal_for_variant(&self) -> TraversalConfig {
        let mut t = self.traversal.clone();
        if !self.variant.gated() {
            t.cosine_threshold = None;
        } else if t.cosine_threshold.is_none() {
            t.cosine_threshold = TraversalConfig::default().cosine_threshold;
        }
        t.per_entity_result_limit = self.sparql.result_limit;
        t
    }
}
