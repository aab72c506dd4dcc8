//! Per-sentence graph statistics and their aggregate report columns.

use serde::{Deserialize, Serialize};

use crate::graph::{EvidencePath, PathKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("no rows to aggregate")]
    Empty,
}

/// Graph-stage outcome of one processed sentence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub sen_sen: usize,
    pub sen_top: usize,
    pub depth: usize,
    /// Mean edge count of this sentence's paths; 0 when it has none.
    pub mean_path_len: f64,
    pub runtime_secs: f64,
}

impl PathRow {
    pub fn from_paths(paths: &[EvidencePath], depth: usize, runtime_secs: f64) -> Self {
        let sen_sen = paths.iter().filter(|p| p.kind == PathKind::SentenceToSentence).count();
        let sen_top = paths.len() - sen_sen;
        let mean_path_len = if paths.is_empty() {
            0.0
        } else {
            paths.iter().map(|p| p.edge_count() as f64).sum::<f64>() / paths.len() as f64
        };
        Self { sen_sen, sen_top, depth, mean_path_len, runtime_secs }
    }
}

/// The seven graph columns of the results table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PathAggregates {
    pub frac_sen_sen: f64,
    pub frac_sen_top: f64,
    pub avg_sen_sen: f64,
    pub avg_sen_top: f64,
    pub avg_hops: f64,
    pub avg_path_len: f64,
    pub avg_runtime: f64,
}

/// Fractions count rows with at least one path of the kind; every average
/// is an unweighted mean over all rows.
pub fn compute_stats(rows: &[PathRow]) -> Result<PathAggregates, StatsError> {
    if rows.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = rows.len() as f64;
    let mean = |f: &dyn Fn(&PathRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    Ok(PathAggregates {
        frac_sen_sen: mean(&|r| f64::from(u8::from(r.sen_sen > 0))),
        frac_sen_top: mean(&|r| f64::from(u8::from(r.sen_top > 0))),
        avg_sen_sen: mean(&|r| r.sen_sen as f64),
        avg_sen_top: mean(&|r| r.sen_top as f64),
        avg_hops: mean(&|r| r.depth as f64),
        avg_path_len: mean(&|r| r.mean_path_len),
        avg_runtime: mean(&|r| r.runtime_secs),
    })
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}
