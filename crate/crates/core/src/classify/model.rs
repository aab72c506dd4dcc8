//! Path-attention argument classifier.
//!
//! Every evidence path is reduced to a vector `q` by a shared BiLSTM over
//! its graph-element embeddings. For each sentence token `v`, the paths
//! anchored at that token are pooled with additive attention
//! (`m_i = tanh(W_q q_i + W_v v)`, `α = softmax(w_mᵀ m_i)`, `u = Σ α_i q_i`)
//! and `[v; u]` is fed to the sentence BiLSTM. The baseline feeds `v` alone.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::{BiCache, BiLstm, Lstm};
use super::tensor::{axpy, dot, softmax, Mat};
use super::ClassifyError;
use crate::embed::EmbeddingTable;
use crate::graph::EvidencePath;
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Baseline,
    WithPaths,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    NoArgument,
    Argument,
}

impl Label {
    pub fn index(self) -> usize {
        match self {
            Label::NoArgument => 0,
            Label::Argument => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 1 {
            Label::Argument
        } else {
            Label::NoArgument
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierHyperparams {
    pub dropout: f64,
    pub hidden_size: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub attention_size: usize,
    pub max_paths: usize,
    pub max_path_len: usize,
    /// Width of the trainable graph-element embeddings.
    pub element_size: usize,
    /// Weight the loss by inverse class frequency.
    pub class_weighting: bool,
    pub seed: u64,
}

impl Default for ClassifierHyperparams {
    fn default() -> Self {
        Self {
            dropout: 0.7,
            hidden_size: 64,
            batch_size: 16,
            learning_rate: 0.001,
            epochs: 10,
            attention_size: 50,
            max_paths: 10,
            max_path_len: 15,
            element_size: 50,
            class_weighting: false,
            seed: 0,
        }
    }
}

impl ClassifierHyperparams {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ClassifyError::InvalidHyperparams("dropout must lie in [0, 1)"));
        }
        let sizes = [
            self.hidden_size,
            self.batch_size,
            self.attention_size,
            self.max_paths,
            self.max_path_len,
            self.element_size,
        ];
        if sizes.contains(&0) {
            return Err(ClassifyError::InvalidHyperparams("all sizes must be >= 1"));
        }
        Ok(())
    }
}

/// An evidence path plus the sentence token positions it attaches to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchoredPath {
    pub path: EvidencePath,
    pub anchors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub topic: String,
    pub sentence: String,
    pub label: Label,
    #[serde(default)]
    pub paths: Vec<AnchoredPath>,
}

/// Graph element id to embedding row; row 0 is the shared unknown vector.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ElementVocab {
    ids: BTreeMap<String, usize>,
}

impl ElementVocab {
    pub fn from_instances(data: &[LabeledInstance]) -> Self {
        let mut ids = BTreeMap::new();
        for inst in data {
            for p in &inst.paths {
                for e in p.path.elements() {
                    let next = ids.len() + 1;
                    ids.entry(String::from(e)).or_insert(next);
                }
            }
        }
        Self { ids }
    }

    /// Number of rows including the unknown row.
    pub fn rows(&self) -> usize {
        self.ids.len() + 1
    }

    pub fn index(&self, element: &str) -> usize {
        self.ids.get(element).copied().unwrap_or(0)
    }
}

/// Every trainable tensor. Also used for gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub element_embedding: Mat,
    pub path_encoder: BiLstm,
    pub sentence_encoder: BiLstm,
    /// `A x 2H`
    pub att_wq: Mat,
    /// `A x D`
    pub att_wv: Mat,
    pub att_wm: Vec<f64>,
    /// `2 x 2H`
    pub out_w: Mat,
    pub out_b: Vec<f64>,
}

fn lstm_tensors(l: &Lstm) -> [&[f64]; 3] {
    [&l.w.data, &l.u.data, &l.b]
}

fn lstm_tensors_mut(l: &mut Lstm) -> [&mut [f64]; 3] {
    [&mut l.w.data, &mut l.u.data, &mut l.b]
}

impl Weights {
    pub const NAMES: [&'static str; 18] = [
        "element_embedding",
        "path_fwd_w",
        "path_fwd_u",
        "path_fwd_b",
        "path_bwd_w",
        "path_bwd_u",
        "path_bwd_b",
        "sent_fwd_w",
        "sent_fwd_u",
        "sent_fwd_b",
        "sent_bwd_w",
        "sent_bwd_u",
        "sent_bwd_b",
        "att_wq",
        "att_wv",
        "att_wm",
        "out_w",
        "out_b",
    ];

    pub fn zeros_like(&self) -> Self {
        Self {
            element_embedding: self.element_embedding.zeros_like(),
            path_encoder: self.path_encoder.zeros_like(),
            sentence_encoder: self.sentence_encoder.zeros_like(),
            att_wq: self.att_wq.zeros_like(),
            att_wv: self.att_wv.zeros_like(),
            att_wm: vec![0.0; self.att_wm.len()],
            out_w: self.out_w.zeros_like(),
            out_b: vec![0.0; self.out_b.len()],
        }
    }

    /// Flat views in the order of [`Weights::NAMES`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = vec![&self.element_embedding.data];
        v.extend(lstm_tensors(&self.path_encoder.fwd));
        v.extend(lstm_tensors(&self.path_encoder.bwd));
        v.extend(lstm_tensors(&self.sentence_encoder.fwd));
        v.extend(lstm_tensors(&self.sentence_encoder.bwd));
        v.extend([&self.att_wq.data[..], &self.att_wv.data[..], &self.att_wm[..], &self.out_w.data[..], &self.out_b[..]]);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = vec![&mut self.element_embedding.data];
        v.extend(lstm_tensors_mut(&mut self.path_encoder.fwd));
        v.extend(lstm_tensors_mut(&mut self.path_encoder.bwd));
        v.extend(lstm_tensors_mut(&mut self.sentence_encoder.fwd));
        v.extend(lstm_tensors_mut(&mut self.sentence_encoder.bwd));
        v.extend([
            &mut self.att_wq.data[..],
            &mut self.att_wv.data[..],
            &mut self.att_wm[..],
            &mut self.out_w.data[..],
            &mut self.out_b[..],
        ]);
        v
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// Everything needed to run the classifier except the frozen token table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub mode: Mode,
    pub hyperparams: ClassifierHyperparams,
    pub token_dim: usize,
    pub vocab: ElementVocab,
    pub weights: Weights,
}

impl ClassifierParams {
    /// Random initialization, deterministic in `hp.seed`.
    pub fn init(mode: Mode, hp: &ClassifierHyperparams, token_dim: usize, vocab: ElementVocab) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
        let h = hp.hidden_size;
        let a = hp.attention_size;
        let e = hp.element_size;
        let sent_in = match mode {
            Mode::Baseline => token_dim,
            Mode::WithPaths => token_dim + 2 * h,
        };
        let element_embedding = Mat::uniform(vocab.rows(), e, 0.1, &mut rng);
        let path_encoder = BiLstm::new(e, h, &mut rng);
        let sentence_encoder = BiLstm::new(sent_in, h, &mut rng);
        let qscale = 1.0 / libm::sqrt((2 * h) as f64);
        let att_wq = Mat::uniform(a, 2 * h, qscale, &mut rng);
        let att_wv = Mat::uniform(a, token_dim.max(1), 1.0 / libm::sqrt(token_dim.max(1) as f64), &mut rng);
        let att_wm = Mat::uniform(1, a, 1.0 / libm::sqrt(a as f64), &mut rng).data;
        let out_w = Mat::uniform(2, 2 * h, qscale, &mut rng);
        let att_wv = if token_dim == 0 { Mat::zeros(a, 0) } else { att_wv };
        Self {
            mode,
            hyperparams: hp.clone(),
            token_dim,
            vocab,
            weights: Weights {
                element_embedding,
                path_encoder,
                sentence_encoder,
                att_wq,
                att_wv,
                att_wm,
                out_w,
                out_b: vec![0.0; 2],
            },
        }
    }

    pub fn element_indices(&self, path: &EvidencePath) -> Vec<usize> {
        path.elements()
            .into_iter()
            .take(self.hyperparams.max_path_len)
            .map(|e| self.vocab.index(e))
            .collect()
    }

    /// Path vector `q`: final states of the shared path BiLSTM. Unknown
    /// elements use the shared unknown embedding.
    pub fn encode_path(&self, path: &EvidencePath) -> Vec<f64> {
        let idx = self.element_indices(path);
        self.encode_elements(&idx).0
    }

    fn encode_elements(&self, idx: &[usize]) -> (Vec<f64>, BiCache) {
        let xs: Vec<Vec<f64>> = idx.iter().map(|&i| self.weights.element_embedding.row(i).to_vec()).collect();
        self.weights.path_encoder.encode(&xs)
    }

    /// Attention weights over `qs` for token vector `v` and the pooled
    /// vector `u = Σ α_i q_i`.
    pub fn attend(&self, qs: &[&[f64]], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let c = self.attend_cached(qs, v);
        (c.alpha, c.u)
    }

    fn attend_cached(&self, qs: &[&[f64]], v: &[f64]) -> AttentionCache {
        let w = &self.weights;
        let wv = w.att_wv.matvec(v);
        let mut ms = Vec::with_capacity(qs.len());
        let mut scores = Vec::with_capacity(qs.len());
        for q in qs {
            let mut z = w.att_wq.matvec(q);
            axpy(1.0, &wv, &mut z);
            let m: Vec<f64> = z.iter().map(|&x| libm::tanh(x)).collect();
            scores.push(dot(&w.att_wm, &m));
            ms.push(m);
        }
        let alpha = softmax(&scores);
        let mut u = vec![0.0; w.att_wq.cols];
        for (a, q) in alpha.iter().zip(qs) {
            axpy(*a, q, &mut u);
        }
        AttentionCache { paths: Vec::new(), alpha, m: ms, u }
    }

    /// Sentence token vectors from the frozen table (zero when missing).
    pub fn token_vectors(&self, sentence: &str, table: &EmbeddingTable) -> Result<Vec<Vec<f64>>, ClassifyError> {
        if table.dimension() != self.token_dim {
            return Err(ClassifyError::DimensionMismatch { expected: self.token_dim, found: table.dimension() });
        }
        let toks = tokenize(sentence);
        if toks.is_empty() {
            return Err(ClassifyError::EmptySentence);
        }
        Ok(toks
            .iter()
            .map(|t| table.get(t).map_or_else(|| vec![0.0; self.token_dim], <[f64]>::to_vec))
            .collect())
    }

    pub(crate) fn run(
        &self,
        inst: &LabeledInstance,
        table: &EmbeddingTable,
        dropout_mask: Option<Vec<f64>>,
    ) -> Result<Pass, ClassifyError> {
        let vs = self.token_vectors(&inst.sentence, table)?;
        let h2 = 2 * self.hyperparams.hidden_size;
        let mut path_idx = Vec::new();
        let mut path_caches = Vec::new();
        let mut qs = Vec::new();
        let mut att: Vec<Option<AttentionCache>> = Vec::new();
        let inputs: Vec<Vec<f64>> = match self.mode {
            Mode::Baseline => vs.clone(),
            Mode::WithPaths => {
                let kept = &inst.paths[..inst.paths.len().min(self.hyperparams.max_paths)];
                for p in kept {
                    let idx = self.element_indices(&p.path);
                    let (q, c) = self.encode_elements(&idx);
                    path_idx.push(idx);
                    path_caches.push(c);
                    qs.push(q);
                }
                let mut xs = Vec::with_capacity(vs.len());
                for (t, v) in vs.iter().enumerate() {
                    let anchored: Vec<usize> = kept
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| p.anchors.contains(&t))
                        .map(|(i, _)| i)
                        .collect();
                    let mut x = v.clone();
                    if anchored.is_empty() {
                        x.resize(v.len() + h2, 0.0);
                        att.push(None);
                    } else {
                        let refs: Vec<&[f64]> = anchored.iter().map(|&i| qs[i].as_slice()).collect();
                        let mut c = self.attend_cached(&refs, v);
                        c.paths = anchored;
                        x.extend_from_slice(&c.u);
                        att.push(Some(c));
                    }
                    xs.push(x);
                }
                xs
            }
        };
        let (h, sent_cache) = self.weights.sentence_encoder.encode(&inputs);
        let h_drop = match &dropout_mask {
            Some(m) => h.iter().zip(m).map(|(a, b)| a * b).collect(),
            None => h.clone(),
        };
        let mut logits = self.weights.out_w.matvec(&h_drop);
        axpy(1.0, &self.weights.out_b, &mut logits);
        let probs = softmax(&logits);
        Ok(Pass { vs, path_idx, path_caches, qs, att, sent_cache, mask: dropout_mask, h_drop, logits, probs })
    }

    /// Class probabilities `[p(NoArgument), p(Argument)]`, dropout off.
    pub fn forward(&self, inst: &LabeledInstance, table: &EmbeddingTable) -> Result<Vec<f64>, ClassifyError> {
        Ok(self.run(inst, table, None)?.probs)
    }

    pub fn logits(&self, inst: &LabeledInstance, table: &EmbeddingTable) -> Result<Vec<f64>, ClassifyError> {
        Ok(self.run(inst, table, None)?.logits)
    }

    pub fn predict(&self, inst: &LabeledInstance, table: &EmbeddingTable) -> Result<Label, ClassifyError> {
        let p = self.forward(inst, table)?;
        Ok(if p[1] > p[0] { Label::Argument } else { Label::NoArgument })
    }

    /// Weighted cross-entropy of one instance, dropout off.
    pub fn loss(&self, inst: &LabeledInstance, table: &EmbeddingTable, class_weight: [f64; 2]) -> Result<f64, ClassifyError> {
        let p = self.forward(inst, table)?;
        let y = inst.label.index();
        Ok(-class_weight[y] * libm::log(p[y]))
    }

    /// Loss and gradient of one instance, accumulated into `grad`.
    pub fn accumulate_gradient(
        &self,
        inst: &LabeledInstance,
        table: &EmbeddingTable,
        class_weight: [f64; 2],
        dropout_mask: Option<Vec<f64>>,
        grad: &mut Weights,
    ) -> Result<f64, ClassifyError> {
        Ok(self.accumulate_gradient_with_probs(inst, table, class_weight, dropout_mask, grad)?.0)
    }

    /// Like [`Self::accumulate_gradient`], also returning the class
    /// probabilities of the (dropout-masked) forward pass.
    pub fn accumulate_gradient_with_probs(
        &self,
        inst: &LabeledInstance,
        table: &EmbeddingTable,
        class_weight: [f64; 2],
        dropout_mask: Option<Vec<f64>>,
        grad: &mut Weights,
    ) -> Result<(f64, Vec<f64>), ClassifyError> {
        let pass = self.run(inst, table, dropout_mask)?;
        let y = inst.label.index();
        let cw = class_weight[y];
        let loss = -cw * libm::log(pass.probs[y]);
        self.backward(&pass, y, cw, grad);
        Ok((loss, pass.probs))
    }

    fn backward(&self, pass: &Pass, y: usize, cw: f64, g: &mut Weights) {
        let w = &self.weights;
        let mut dlogits = pass.probs.clone();
        dlogits[y] -= 1.0;
        dlogits.iter_mut().for_each(|d| *d *= cw);
        g.out_w.add_outer(&dlogits, &pass.h_drop);
        axpy(1.0, &dlogits, &mut g.out_b);
        let mut dh = w.out_w.matvec_t(&dlogits);
        if let Some(m) = &pass.mask {
            dh.iter_mut().zip(m).for_each(|(d, k)| *d *= k);
        }
        let dx = w.sentence_encoder.backward(&pass.sent_cache, &dh, &mut g.sentence_encoder);
        if self.mode == Mode::Baseline {
            return;
        }
        let d = self.token_dim;
        let mut dq: Vec<Vec<f64>> = pass.qs.iter().map(|q| vec![0.0; q.len()]).collect();
        for (t, att) in pass.att.iter().enumerate() {
            let Some(c) = att else { continue };
            let du = &dx[t][d..];
            let dalpha: Vec<f64> = c.paths.iter().map(|&p| dot(du, &pass.qs[p])).collect();
            let sbar: f64 = c.alpha.iter().zip(&dalpha).map(|(a, b)| a * b).sum();
            for (k, &p) in c.paths.iter().enumerate() {
                axpy(c.alpha[k], du, &mut dq[p]);
                let ds = c.alpha[k] * (dalpha[k] - sbar);
                axpy(ds, &c.m[k], &mut g.att_wm);
                let dz: Vec<f64> = c.m[k].iter().zip(&w.att_wm).map(|(m, wm)| ds * wm * (1.0 - m * m)).collect();
                g.att_wq.add_outer(&dz, &pass.qs[p]);
                g.att_wv.add_outer(&dz, &pass.vs[t]);
                let back = w.att_wq.matvec_t(&dz);
                axpy(1.0, &back, &mut dq[p]);
            }
        }
        for (p, cache) in pass.path_caches.iter().enumerate() {
            if dq[p].iter().all(|&x| x == 0.0) {
                continue;
            }
            let dxs = w.path_encoder.backward(cache, &dq[p], &mut g.path_encoder);
            for (k, &row) in pass.path_idx[p].iter().enumerate() {
                axpy(1.0, &dxs[k], g.element_embedding.row_mut(row));
            }
        }
    }

    /// Inverted-dropout mask over the sentence encoding.
    pub(crate) fn dropout_mask<R: Rng>(&self, rng: &mut R) -> Option<Vec<f64>> {
        let p = self.hyperparams.dropout;
        if p <= 0.0 {
            return None;
        }
        let keep = 1.0 - p;
        Some(
            (0..2 * self.hyperparams.hidden_size)
                .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                .collect(),
        )
    }
}

struct AttentionCache {
    paths: Vec<usize>,
    alpha: Vec<f64>,
    m: Vec<Vec<f64>>,
    u: Vec<f64>,
}

pub(crate) struct Pass {
    vs: Vec<Vec<f64>>,
    path_idx: Vec<Vec<usize>>,
    path_caches: Vec<BiCache>,
    qs: Vec<Vec<f64>>,
    att: Vec<Option<AttentionCache>>,
    sent_cache: BiCache,
    mask: Option<Vec<f64>>,
    h_drop: Vec<f64>,
    logits: Vec<f64>,
    pub(crate) probs: Vec<f64>,
}
