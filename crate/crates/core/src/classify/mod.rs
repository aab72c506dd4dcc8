//! Argument classification with attention over knowledge-graph paths.

pub mod lstm;
pub mod model;
pub mod tensor;

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingTable;

pub use model::{AnchoredPath, ClassifierHyperparams, ClassifierParams, ElementVocab, Label, LabeledInstance, Mode, Weights};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassifyError {
    #[error("sentence has no tokens")]
    EmptySentence,
    #[error("token table has dimension {found}, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training data contains a single class")]
    SingleClass,
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(&'static str),
}

/// Adam with the usual defaults (`β1 = 0.9`, `β2 = 0.999`, `ε = 1e-8`).
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Weights,
    v: Weights,
    t: i32,
}

impl Adam {
    pub fn new(like: &Weights, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: like.zeros_like(), v: like.zeros_like(), t: 0 }
    }

    pub fn step(&mut self, params: &mut Weights, grad: &Weights) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, f64::from(self.t));
        let c2 = 1.0 - libm::pow(self.beta2, f64::from(self.t));
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let ps = params.tensors_mut();
        let gs = grad.tensors();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((p, g), m), v) in ps.into_iter().zip(gs).zip(ms).zip(vs) {
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                let mh = m[k] / c1;
                let vh = v[k] / c2;
                p[k] -= lr * mh / (libm::sqrt(vh) + eps);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_accuracy: f64,
}

/// Inverse-frequency class weights, normalized so a balanced set gets 1.
pub fn class_weights(data: &[LabeledInstance]) -> [f64; 2] {
    let mut counts = [0usize; 2];
    for d in data {
        counts[d.label.index()] += 1;
    }
    let n = data.len() as f64;
    let mut w = [1.0; 2];
    for (c, wc) in counts.iter().zip(w.iter_mut()) {
        if *c > 0 {
            *wc = n / (2.0 * *c as f64);
        }
    }
    w
}

/// Trains a fresh classifier with mini-batch Adam. Element vocabulary is
/// built from the training paths; the token table stays frozen.
pub fn train(
    data: &[LabeledInstance],
    table: &EmbeddingTable,
    mode: Mode,
    hp: &ClassifierHyperparams,
) -> Result<(ClassifierParams, Vec<EpochLog>), ClassifyError> {
    hp.validate()?;
    if data.is_empty() {
        return Err(ClassifyError::EmptyDataset);
    }
    let first = data[0].label;
    if data.iter().all(|d| d.label == first) {
        return Err(ClassifyError::SingleClass);
    }
    let vocab = match mode {
        Mode::Baseline => ElementVocab::default(),
        Mode::WithPaths => ElementVocab::from_instances(data),
    };
    let mut params = ClassifierParams::init(mode, hp, table.dimension(), vocab);
    let cw = if hp.class_weighting { class_weights(data) } else { [1.0, 1.0] };
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed ^ 0x5eed);
    let mut adam = Adam::new(&params.weights, hp.learning_rate);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = Vec::with_capacity(hp.epochs);
    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(hp.batch_size) {
            let mut grad = params.weights.zeros_like();
            for &i in batch {
                let mask = params.dropout_mask(&mut rng);
                let (loss, probs) = params.accumulate_gradient_with_probs(&data[i], table, cw, mask, &mut grad)?;
                total += loss;
                let pred = if probs[1] > probs[0] { Label::Argument } else { Label::NoArgument };
                correct += usize::from(pred == data[i].label);
            }
            grad.scale(1.0 / batch.len() as f64);
            adam.step(&mut params.weights, &grad);
        }
        log.push(EpochLog {
            epoch: epoch + 1,
            mean_loss: total / data.len() as f64,
            train_accuracy: correct as f64 / data.len() as f64,
        });
    }
    Ok((params, log))
}

/// Evaluation scores. `confusion[actual][predicted]`, index 1 is Argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// Mean F1 over the classes present in the gold labels or predictions.
    pub macro_f1: f64,
    /// F1 of the Argument class.
    pub argument_f1: f64,
    pub confusion: [[usize; 2]; 2],
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    let tp = tp as f64;
    2.0 * tp / (2.0 * tp + fp as f64 + fn_ as f64)
}

impl Metrics {
    pub fn from_confusion(confusion: [[usize; 2]; 2]) -> Self {
        let n: usize = confusion.iter().flatten().sum();
        let correct = confusion[0][0] + confusion[1][1];
        let accuracy = if n == 0 { 0.0 } else { correct as f64 / n as f64 };
        let mut scores = Vec::new();
        let mut per_class = [0.0; 2];
        for c in 0..2 {
            let o = 1 - c;
            let tp = confusion[c][c];
            let fp = confusion[o][c];
            let fn_ = confusion[c][o];
            per_class[c] = f1(tp, fp, fn_);
            if tp + fp + fn_ > 0 {
                scores.push(per_class[c]);
            }
        }
        let macro_f1 = if scores.is_empty() { 0.0 } else { scores.iter().sum::<f64>() / scores.len() as f64 };
        Self { accuracy, macro_f1, argument_f1: per_class[1], confusion }
    }

    pub fn from_labels(gold: &[Label], predicted: &[Label]) -> Self {
        let mut c = [[0usize; 2]; 2];
        for (g, p) in gold.iter().zip(predicted) {
            c[g.index()][p.index()] += 1;
        }
        Self::from_confusion(c)
    }
}

pub fn predict_all(params: &ClassifierParams, table: &EmbeddingTable, data: &[LabeledInstance]) -> Result<Vec<Label>, ClassifyError> {
    data.iter().map(|d| params.predict(d, table)).collect()
}

pub fn evaluate(params: &ClassifierParams, table: &EmbeddingTable, data: &[LabeledInstance]) -> Result<Metrics, ClassifyError> {
    if data.is_empty() {
        return Err(ClassifyError::EmptyDataset);
    }
    let pred = predict_all(params, table, data)?;
    let gold: Vec<Label> = data.iter().map(|d| d.label).collect();
    Ok(Metrics::from_labels(&gold, &pred))
}

/// Largest relative error between the analytic gradient of one instance's
/// loss and central finite differences, over every parameter.
pub fn gradient_check(
    params: &ClassifierParams,
    inst: &LabeledInstance,
    table: &EmbeddingTable,
    eps: f64,
) -> Result<f64, ClassifyError> {
    let cw = [1.0, 1.0];
    let mut grad = params.weights.zeros_like();
    params.accumulate_gradient(inst, table, cw, None, &mut grad)?;
    let analytic: Vec<Vec<f64>> = grad.tensors().into_iter().map(<[f64]>::to_vec).collect();
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for (ti, a) in analytic.iter().enumerate() {
        for (k, &ak) in a.iter().enumerate() {
            let orig = probe.weights.tensors()[ti][k];
            probe.weights.tensors_mut()[ti][k] = orig + eps;
            let lp = probe.loss(inst, table, cw)?;
            probe.weights.tensors_mut()[ti][k] = orig - eps;
            let lm = probe.loss(inst, table, cw)?;
            probe.weights.tensors_mut()[ti][k] = orig;
            let numeric = (lp - lm) / (2.0 * eps);
            let denom = ak.abs().max(numeric.abs()).max(1e-7);
            worst = worst.max((ak - numeric).abs() / denom);
        }
    }
    Ok(worst)
}
