//! LSTM and bidirectional LSTM with backpropagation through time.
//!
//! Gate layout in the stacked pre-activation vector: input, forget, cell
//! candidate, output.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{axpy, sigmoid, Mat};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    pub hidden: usize,
    /// `4H x input`
    pub w: Mat,
    /// `4H x H`
    pub u: Mat,
    pub b: Vec<f64>,
}

/// Activations of one time step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

impl Lstm {
    /// Uniform init in `±1/sqrt(H)`; forget-gate bias starts at 1.
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let k = 1.0 / libm::sqrt(hidden as f64);
        let w = Mat::uniform(4 * hidden, input, k, rng);
        let u = Mat::uniform(4 * hidden, hidden, k, rng);
        let mut b = vec![0.0; 4 * hidden];
        for x in &mut b[hidden..2 * hidden] {
            *x = 1.0;
        }
        Self { hidden, w, u, b }
    }

    pub fn zeros_like(&self) -> Self {
        Self { hidden: self.hidden, w: self.w.zeros_like(), u: self.u.zeros_like(), b: vec![0.0; self.b.len()] }
    }

    pub fn input_size(&self) -> usize {
        self.w.cols
    }

    pub fn forward(&self, xs: &[Vec<f64>]) -> Vec<StepCache> {
        let h = self.hidden;
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        let mut out = Vec::with_capacity(xs.len());
        for x in xs {
            let mut z = self.b.clone();
            self.w.matvec_acc(x, &mut z);
            self.u.matvec_acc(&h_prev, &mut z);
            let i: Vec<f64> = z[..h].iter().map(|&v| sigmoid(v)).collect();
            let f: Vec<f64> = z[h..2 * h].iter().map(|&v| sigmoid(v)).collect();
            let g: Vec<f64> = z[2 * h..3 * h].iter().map(|&v| libm::tanh(v)).collect();
            let o: Vec<f64> = z[3 * h..].iter().map(|&v| sigmoid(v)).collect();
            let c: Vec<f64> = (0..h).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
            let tanh_c: Vec<f64> = c.iter().map(|&v| libm::tanh(v)).collect();
            let hv: Vec<f64> = (0..h).map(|k| o[k] * tanh_c[k]).collect();
            out.push(StepCache {
                x: x.clone(),
                h_prev: core::mem::replace(&mut h_prev, hv.clone()),
                c_prev: core::mem::replace(&mut c_prev, c),
                i,
                f,
                g,
                o,
                tanh_c,
                h: hv,
            });
        }
        out
    }

    /// Backpropagates `dh_ext[t]` (gradient of the loss w.r.t. each step's
    /// hidden output), accumulating parameter gradients into `grad` and
    /// returning the gradient w.r.t. every input.
    pub fn backward(&self, cache: &[StepCache], dh_ext: &[Vec<f64>], grad: &mut Lstm) -> Vec<Vec<f64>> {
        let h = self.hidden;
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dxs = vec![Vec::new(); cache.len()];
        let mut dz = vec![0.0; 4 * h];
        for t in (0..cache.len()).rev() {
            let s = &cache[t];
            for k in 0..h {
                let dh = dh_ext[t][k] + dh_next[k];
                let d_o = dh * s.tanh_c[k];
                let dc = dc_next[k] + dh * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
                let di = dc * s.g[k];
                let dg = dc * s.i[k];
                let df = dc * s.c_prev[k];
                dc_next[k] = dc * s.f[k];
                dz[k] = di * s.i[k] * (1.0 - s.i[k]);
                dz[h + k] = df * s.f[k] * (1.0 - s.f[k]);
                dz[2 * h + k] = dg * (1.0 - s.g[k] * s.g[k]);
                dz[3 * h + k] = d_o * s.o[k] * (1.0 - s.o[k]);
            }
            grad.w.add_outer(&dz, &s.x);
            grad.u.add_outer(&dz, &s.h_prev);
            axpy(1.0, &dz, &mut grad.b);
            dxs[t] = self.w.matvec_t(&dz);
            dh_next = self.u.matvec_t(&dz);
        }
        dxs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLstm {
    pub fwd: Lstm,
    pub bwd: Lstm,
}

pub struct BiCache {
    fwd: Vec<StepCache>,
    bwd: Vec<StepCache>,
}

impl BiLstm {
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        Self { fwd: Lstm::new(input, hidden, rng), bwd: Lstm::new(input, hidden, rng) }
    }

    pub fn zeros_like(&self) -> Self {
        Self { fwd: self.fwd.zeros_like(), bwd: self.bwd.zeros_like() }
    }

    pub fn hidden(&self) -> usize {
        self.fwd.hidden
    }

    /// Final states of both directions concatenated: `[h_fwd(T); h_bwd(1)]`.
    pub fn encode(&self, xs: &[Vec<f64>]) -> (Vec<f64>, BiCache) {
        let fwd = self.fwd.forward(xs);
        let rev: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
        let bwd = self.bwd.forward(&rev);
        let h = self.hidden();
        let mut out = Vec::with_capacity(2 * h);
        out.extend_from_slice(fwd.last().map_or(&[][..], |s| &s.h[..]));
        out.extend_from_slice(bwd.last().map_or(&[][..], |s| &s.h[..]));
        if out.len() < 2 * h {
            out.resize(2 * h, 0.0);
        }
        (out, BiCache { fwd, bwd })
    }

    /// Gradient w.r.t. each input position given the gradient of the
    /// concatenated final state.
    pub fn backward(&self, cache: &BiCache, d_out: &[f64], grad: &mut BiLstm) -> Vec<Vec<f64>> {
        let h = self.hidden();
        let n = cache.fwd.len();
        if n == 0 {
            return Vec::new();
        }
        let mut dh = vec![vec![0.0; h]; n];
        dh[n - 1].copy_from_slice(&d_out[..h]);
        let mut dx = self.fwd.backward(&cache.fwd, &dh, &mut grad.fwd);
        dh[n - 1].copy_from_slice(&d_out[h..]);
        for row in dh.iter_mut().take(n - 1) {
            row.iter_mut().for_each(|v| *v = 0.0);
        }
        let dx_rev = self.bwd.backward(&cache.bwd, &dh, &mut grad.bwd);
        for (t, d) in dx_rev.into_iter().enumerate() {
            axpy(1.0, &d, &mut dx[n - 1 - t]);
        }
        dx
    }
}
