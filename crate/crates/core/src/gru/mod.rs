//! Gated recurrent unit network over one-hot symbol sequences.
//!
//! The stack is one-hot input → GRU layers → dense readout → softmax. A
//! window of symbols is fed step by step and the readout of the top layer's
//! final hidden state scores the next symbol.

mod train;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use train::{accuracy, loss_and_gradient, train, windows, TrainConfig, TrainOutcome};

pub const INIT_RANGE: f64 = 0.08;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `out = M · v` for row-major `M` of shape `rows × v.len()`.
fn matvec_into(out: &mut [f64], m: &[f64], v: &[f64]) {
    let cols = v.len();
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

/// Weights of one GRU layer. `w_*` are `hidden × input`, `u_*` are
/// `hidden × hidden`, all row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruCellParams {
    pub input_size: usize,
    pub hidden_size: usize,
    pub w_r: Vec<f64>,
    pub w_z: Vec<f64>,
    pub w_h: Vec<f64>,
    pub u_r: Vec<f64>,
    pub u_z: Vec<f64>,
    pub u_h: Vec<f64>,
    pub b_r: Vec<f64>,
    pub b_z: Vec<f64>,
    pub b_h: Vec<f64>,
}

/// Gate activations of one step, kept for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub h_tilde: Vec<f64>,
    pub h: Vec<f64>,
}

impl GruCellParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        let wi = vec![0.0; hidden_size * input_size];
        let wh = vec![0.0; hidden_size * hidden_size];
        let b = vec![0.0; hidden_size];
        Self {
            input_size,
            hidden_size,
            w_r: wi.clone(),
            w_z: wi.clone(),
            w_h: wi,
            u_r: wh.clone(),
            u_z: wh.clone(),
            u_h: wh,
            b_r: b.clone(),
            b_z: b.clone(),
            b_h: b,
        }
    }

    pub fn check_shapes(&self) -> Result<()> {
        let (i, h) = (self.input_size, self.hidden_size);
        let ok = [&self.w_r, &self.w_z, &self.w_h].iter().all(|w| w.len() == h * i)
            && [&self.u_r, &self.u_z, &self.u_h].iter().all(|u| u.len() == h * h)
            && [&self.b_r, &self.b_z, &self.b_h].iter().all(|b| b.len() == h);
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!("GRU cell tensors inconsistent with input {i}, hidden {h}")))
        }
    }

    pub(crate) fn tensors(&self) -> [&Vec<f64>; 9] {
        [&self.w_r, &self.w_z, &self.w_h, &self.u_r, &self.u_z, &self.u_h, &self.b_r, &self.b_z, &self.b_h]
    }

    pub(crate) fn tensors_mut(&mut self) -> [&mut Vec<f64>; 9] {
        [
            &mut self.w_r,
            &mut self.w_z,
            &mut self.w_h,
            &mut self.u_r,
            &mut self.u_z,
            &mut self.u_h,
            &mut self.b_r,
            &mut self.b_z,
            &mut self.b_h,
        ]
    }

    /// One step:
    /// `r = σ(W_r a + U_r h + b_r)`, `z = σ(W_z a + U_z h + b_z)`,
    /// `h̃ = tanh(W_h a + U_h (r ⊙ h) + b_h)`, `h' = (1 − z) ⊙ h + z ⊙ h̃`.
    pub fn step(&self, input: &[f64], h_prev: &[f64]) -> Result<CellState> {
        self.check_shapes()?;
        if input.len() != self.input_size || h_prev.len() != self.hidden_size {
            return Err(Error::ShapeMismatch(format!(
                "cell expects input {} / hidden {}, got {} / {}",
                self.input_size,
                self.hidden_size,
                input.len(),
                h_prev.len()
            )));
        }
        Ok(self.step_unchecked(input, h_prev))
    }

    pub(crate) fn step_unchecked(&self, input: &[f64], h_prev: &[f64]) -> CellState {
        let n = self.hidden_size;
        let mut r = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut tmp = vec![0.0; n];

        matvec_into(&mut r, &self.w_r, input);
        matvec_into(&mut tmp, &self.u_r, h_prev);
        for j in 0..n {
            r[j] = sigmoid(r[j] + tmp[j] + self.b_r[j]);
        }
        matvec_into(&mut z, &self.w_z, input);
        matvec_into(&mut tmp, &self.u_z, h_prev);
        for j in 0..n {
            z[j] = sigmoid(z[j] + tmp[j] + self.b_z[j]);
        }
        let gated: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
        let mut h_tilde = vec![0.0; n];
        matvec_into(&mut h_tilde, &self.w_h, input);
        matvec_into(&mut tmp, &self.u_h, &gated);
        for j in 0..n {
            h_tilde[j] = libm::tanh(h_tilde[j] + tmp[j] + self.b_h[j]);
        }
        let h = (0..n).map(|j| (1.0 - z[j]) * h_prev[j] + z[j] * h_tilde[j]).collect();
        CellState { r, z, h_tilde, h }
    }
}

/// Hidden state after one GRU step.
pub fn cell_forward(params: &GruCellParams, input: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
    Ok(params.step(input, h_prev)?.h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub hidden_sizes: Vec<usize>,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self { hidden_sizes: vec![50, 50] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruNetwork {
    pub layers: Vec<GruCellParams>,
    /// `alphabet × top hidden`, row-major.
    pub readout_w: Vec<f64>,
    pub readout_b: Vec<f64>,
    pub alphabet_size: usize,
    /// Number of symbols consumed per prediction.
    pub window: usize,
    pub seed: u64,
}

impl GruNetwork {
    /// Weights drawn uniformly from `(−0.08, 0.08)`, biases zero.
    pub fn new(alphabet_size: usize, hidden_sizes: &[usize], window: usize, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(alphabet_size, hidden_sizes, window)?;
        net.seed = seed;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut net.layers {
            for t in layer.tensors_mut().into_iter().take(6) {
                for w in t.iter_mut() {
                    *w = rng.random_range(-INIT_RANGE..INIT_RANGE);
                }
            }
        }
        for w in &mut net.readout_w {
            *w = rng.random_range(-INIT_RANGE..INIT_RANGE);
        }
        Ok(net)
    }

    pub fn zeros(alphabet_size: usize, hidden_sizes: &[usize], window: usize) -> Result<Self> {
        if alphabet_size == 0 || hidden_sizes.is_empty() || hidden_sizes.contains(&0) || window == 0 {
            return Err(Error::InvalidConfig("alphabet, layer sizes and window must be positive".into()));
        }
        let mut layers = Vec::with_capacity(hidden_sizes.len());
        let mut input = alphabet_size;
        for &h in hidden_sizes {
            layers.push(GruCellParams::zeros(input, h));
            input = h;
        }
        Ok(Self {
            layers,
            readout_w: vec![0.0; alphabet_size * input],
            readout_b: vec![0.0; alphabet_size],
            alphabet_size,
            window,
            seed: 0,
        })
    }

    /// Same shape, all zeros.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
        z
    }

    pub fn top_hidden(&self) -> usize {
        self.layers.last().map(|l| l.hidden_size).unwrap_or(0)
    }

    pub fn check_shapes(&self) -> Result<()> {
        let mut input = self.alphabet_size;
        for l in &self.layers {
            l.check_shapes()?;
            if l.input_size != input {
                return Err(Error::ShapeMismatch("layer input does not match previous hidden size".into()));
            }
            input = l.hidden_size;
        }
        if self.readout_w.len() != self.alphabet_size * input || self.readout_b.len() != self.alphabet_size {
            return Err(Error::ShapeMismatch("readout does not map top hidden state to the alphabet".into()));
        }
        Ok(())
    }

    pub(crate) fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut v: Vec<&Vec<f64>> = self.layers.iter().flat_map(|l| l.tensors()).collect();
        v.push(&self.readout_w);
        v.push(&self.readout_b);
        v
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut v: Vec<&mut Vec<f64>> = self.layers.iter_mut().flat_map(|l| l.tensors_mut()).collect();
        v.push(&mut self.readout_w);
        v.push(&mut self.readout_b);
        v
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Every parameter in a fixed order (layers bottom-up, then readout).
    pub fn flat_params(&self) -> Vec<f64> {
        self.tensors().into_iter().flat_map(|t| t.iter().copied()).collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::ShapeMismatch(format!("expected {} parameters, got {}", self.param_count(), flat.len())));
        }
        let mut off = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    fn one_hot(&self, symbol: usize) -> Result<Vec<f64>> {
        if symbol >= self.alphabet_size {
            return Err(Error::UnknownSymbol { symbol, alphabet: self.alphabet_size });
        }
        let mut v = vec![0.0; self.alphabet_size];
        v[symbol] = 1.0;
        Ok(v)
    }

    /// Logits for the symbol following `symbols`.
    pub fn forward(&self, symbols: &[usize]) -> Result<Vec<f64>> {
        self.check_shapes()?;
        let mut hidden: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.hidden_size]).collect();
        for &s in symbols {
            let mut input = self.one_hot(s)?;
            for (layer, h) in self.layers.iter().zip(hidden.iter_mut()) {
                *h = layer.step_unchecked(&input, h).h;
                input = h.clone();
            }
        }
        let top = hidden.last().expect("at least one layer");
        let mut logits = vec![0.0; self.alphabet_size];
        matvec_into(&mut logits, &self.readout_w, top);
        for (l, b) in logits.iter_mut().zip(&self.readout_b) {
            *l += b;
        }
        Ok(logits)
    }

    /// Most likely next symbol; ties go to the lowest index.
    pub fn predict(&self, symbols: &[usize]) -> Result<usize> {
        Ok(argmax(&self.forward(symbols)?))
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let exps: Vec<f64> = logits.iter().map(|&v| libm::exp(v - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// First index of the maximum.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate() {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

/// Closed-loop decoding: predict, append, slide, repeat.
pub fn forecast(net: &GruNetwork, seed_symbols: &[usize], max_symbols: usize) -> Result<Vec<usize>> {
    let mut f = Forecaster::new(net, seed_symbols)?;
    (0..max_symbols).map(|_| f.next_symbol()).collect()
}

/// Incremental form of [`forecast`], for callers that decide on the fly
/// when to stop.
pub struct Forecaster<'a> {
    net: &'a GruNetwork,
    window: Vec<usize>,
}

impl<'a> Forecaster<'a> {
    pub fn new(net: &'a GruNetwork, seed_symbols: &[usize]) -> Result<Self> {
        net.check_shapes()?;
        if seed_symbols.len() < net.window {
            return Err(Error::InsufficientData(format!(
                "forecast needs {} seed symbols, got {}",
                net.window,
                seed_symbols.len()
            )));
        }
        let window = seed_symbols[seed_symbols.len() - net.window..].to_vec();
        Ok(Self { net, window })
    }

    pub fn next_symbol(&mut self) -> Result<usize> {
        let s = self.net.predict(&self.window)?;
        self.window.remove(0);
        self.window.push(s);
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_halve_the_state() {
        let p = GruCellParams::zeros(2, 3);
        let h = cell_forward(&p, &[0.3, -1.0], &[0.4, -0.2, 1.0]).unwrap();
        assert_eq!(h, vec![0.2, -0.1, 0.5]);
        let h0 = cell_forward(&p, &[0.3, -1.0], &[0.0; 3]).unwrap();
        assert_eq!(h0, vec![0.0; 3]);
    }

    #[test]
    fn shape_mismatch_detected() {
        let p = GruCellParams::zeros(2, 3);
        assert!(matches!(cell_forward(&p, &[1.0], &[0.0; 3]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn zero_readout_is_uniform() {
        let mut net = GruNetwork::new(4, &[5], 3, 1).unwrap();
        net.readout_w.iter_mut().for_each(|w| *w = 0.0);
        let p = softmax(&net.forward(&[0, 1, 2]).unwrap());
        for v in p {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn single_symbol_alphabet() {
        let net = GruNetwork::new(1, &[4, 4], 2, 9).unwrap();
        assert_eq!(forecast(&net, &[0, 0], 5).unwrap(), vec![0; 5]);
    }

    #[test]
    fn unknown_symbol() {
        let net = GruNetwork::new(3, &[4], 2, 9).unwrap();
        assert_eq!(net.forward(&[0, 3]).unwrap_err(), Error::UnknownSymbol { symbol: 3, alphabet: 3 });
    }

    #[test]
    fn empty_horizon() {
        let net = GruNetwork::new(3, &[4], 2, 9).unwrap();
        assert!(forecast(&net, &[0, 1], 0).unwrap().is_empty());
        assert!(forecast(&net, &[0], 1).is_err());
    }

    #[test]
    fn flat_params_roundtrip() {
        let net = GruNetwork::new(3, &[4, 2], 2, 5).unwrap();
        let mut other = net.zeros_like();
        other.set_flat_params(&net.flat_params()).unwrap();
        assert_eq!(net, other);
        assert_eq!(net.param_count(), 3 * (4 * 3 + 16 + 4) + 3 * (2 * 4 + 4 + 2) + 3 * 2 + 3);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
    }
}
