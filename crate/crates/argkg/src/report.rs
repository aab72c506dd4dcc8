//! Run report: results-table TSV plus a JSON sidecar with per-sentence rows.

use std::fmt::Write as _;
use std::path::Path;

use argkg_core::classify::{Metrics, Mode};
use argkg_core::stats::{mean_sd, PathAggregates, PathRow};
use argkg_core::traverse::TraversalStats;
use serde::{Deserialize, Serialize};

use crate::config::Variant;
use crate::io::{write_json, write_text, FormatError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Self {
        let (mean, sd) = mean_sd(values);
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub final_loss: f64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSummary {
    pub mode: Mode,
    pub train_size: usize,
    pub test_size: usize,
    pub per_seed: Vec<SeedResult>,
    pub accuracy: MeanSd,
    pub macro_f1: MeanSd,
    pub argument_f1: MeanSd,
}

impl ClassificationSummary {
    pub fn from_seeds(mode: Mode, train_size: usize, test_size: usize, per_seed: Vec<SeedResult>) -> Self {
        let col = |f: &dyn Fn(&Metrics) -> f64| MeanSd::of(&per_seed.iter().map(|s| f(&s.metrics)).collect::<Vec<_>>());
        Self {
            mode,
            train_size,
            test_size,
            accuracy: col(&|m| m.accuracy),
            macro_f1: col(&|m| m.macro_f1),
            argument_f1: col(&|m| m.argument_f1),
            per_seed,
        }
    }
}

/// Graph-stage outcome of one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRow {
    pub index: usize,
    pub topic: String,
    pub split: String,
    /// Set when the sentence's graph stages failed; such rows are excluded
    /// from the aggregates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    pub properties: Vec<String>,
    pub paths: PathRow,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traversal: Option<TraversalStats>,
    pub nodes: usize,
    pub edges: usize,
    pub unstructured_nodes: usize,
    pub match_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub variant: Variant,
    pub train_split: String,
    pub test_split: String,
    pub sentences: usize,
    pub processed: usize,
    pub timings: bool,
    /// `None` for the baseline, which builds no graphs.
    pub aggregates: Option<PathAggregates>,
    pub classification: Option<ClassificationSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification_note: Option<String>,
    pub rows: Vec<SentenceRow>,
}

pub const TSV_COLUMNS: [&str; 14] = [
    "variant",
    "sents_sen_sen",
    "sents_sen_top",
    "avg_n_sen_sen",
    "avg_n_sen_top",
    "avg_hops",
    "avg_path_len",
    "avg_runtime_s",
    "acc_mean",
    "acc_sd",
    "f1_mean",
    "f1_sd",
    "arg_f1_mean",
    "arg_f1_sd",
];

fn num(v: f64) -> String {
    format!("{v:.4}")
}

impl RunReport {
    /// Results-table row, preceded by `#` lines describing the split.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# train split `{}`, test split `{}`; {} sentences, {} with graph results",
            self.train_split, self.test_split, self.sentences, self.processed
        );
        if let Some(note) = &self.classification_note {
            let _ = writeln!(s, "# classification: {note}");
        }
        s.push_str(&TSV_COLUMNS.join("\t"));
        s.push('\n');
        let mut cells = vec![self.variant.name().to_string()];
        match &self.aggregates {
            Some(a) => {
                let runtime = if self.timings { num(a.avg_runtime) } else { String::new() };
                cells.extend([
                    num(a.frac_sen_sen),
                    num(a.frac_sen_top),
                    num(a.avg_sen_sen),
                    num(a.avg_sen_top),
                    num(a.avg_hops),
                    num(a.avg_path_len),
                    runtime,
                ]);
            }
            None => cells.extend(std::iter::repeat_n(String::new(), 7)),
        }
        match &self.classification {
            Some(c) => {
                for m in [c.accuracy, c.macro_f1, c.argument_f1] {
                    cells.push(num(m.mean));
                    cells.push(num(m.sd));
                }
            }
            None => cells.extend(std::iter::repeat_n(String::new(), 6)),
        }
        s.push_str(&cells.join("\t"));
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> Result<(), FormatError> {
        write_text(&dir.join("report.tsv"), &self.to_tsv())?;
        write_json(&dir.join("report.json"), self)
    }
}
