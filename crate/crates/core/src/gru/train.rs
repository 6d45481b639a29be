//! Backpropagation through time and Adam for [`GruNetwork`].

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, softmax, GruNetwork};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub window: usize,
    pub early_stop_patience: usize,
    pub min_delta: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Seeds the mini-batch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 128,
            max_epochs: 10_000,
            window: 10,
            early_stop_patience: 200,
            min_delta: 1e-5,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.learning_rate > 0.0
            && self.batch_size > 0
            && self.max_epochs > 0
            && self.window > 0
            && self.early_stop_patience > 0
            && self.min_delta >= 0.0
            && self.adam_eps > 0.0;
        let betas = (0.0..1.0).contains(&self.adam_beta1) && (0.0..1.0).contains(&self.adam_beta2);
        if positive && betas {
            Ok(())
        } else {
            Err(Error::InvalidConfig("training hyperparameters out of range".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainOutcome {
    /// Mean cross-entropy per epoch.
    pub loss_history: Vec<f64>,
    pub epochs_run: usize,
    pub stopped_early: bool,
}

/// Start offsets of every `(window, next symbol)` training pair.
pub fn windows(len: usize, window: usize) -> Vec<usize> {
    if len <= window {
        return Vec::new();
    }
    (0..len - window).collect()
}

/// `c = beta·c + op(a)·op(b)` where `op(a)` is `m × k`, `op(b)` is `k × n`
/// and every buffer is row-major. A transposed operand is stored as its
/// transpose.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], ta: bool, b: &[f64], tb: bool, beta: f64, c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the assert above keeps every strided access inside the slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        )
    }
}

/// Activations of one layer over a batch, `[step][batch][unit]` flattened.
struct LayerTrace {
    h_prev: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    h_tilde: Vec<f64>,
    gated: Vec<f64>,
    /// Hidden state after each step.
    out: Vec<f64>,
}

/// Runs one layer over every step of a batch. `inputs` holds dense inputs
/// (`[step][batch][input]`), or is `None` for the one-hot bottom layer, in
/// which case `symbols[t][b]` selects a column of the input weights.
fn layer_forward(
    layer: &super::GruCellParams,
    inputs: Option<&[f64]>,
    symbols: &[Vec<usize>],
    batch: usize,
) -> LayerTrace {
    let (n, inp) = (layer.hidden_size, layer.input_size);
    let steps = symbols.len();
    let size = steps * batch * n;
    let mut tr = LayerTrace {
        h_prev: vec![0.0; size],
        r: vec![0.0; size],
        z: vec![0.0; size],
        h_tilde: vec![0.0; size],
        gated: vec![0.0; size],
        out: vec![0.0; size],
    };
    let bn = batch * n;
    for t in 0..steps {
        let span = t * bn..(t + 1) * bn;
        if t > 0 {
            tr.h_prev[span.clone()].copy_from_slice(&tr.out[(t - 1) * bn..t * bn]);
        }
        let h = &tr.h_prev[span.clone()];
        let mut a_r = vec![0.0; bn];
        let mut a_z = vec![0.0; bn];
        let mut a_h = vec![0.0; bn];
        for b in 0..batch {
            a_r[b * n..(b + 1) * n].copy_from_slice(&layer.b_r);
            a_z[b * n..(b + 1) * n].copy_from_slice(&layer.b_z);
            a_h[b * n..(b + 1) * n].copy_from_slice(&layer.b_h);
        }
        match inputs {
            Some(x) => {
                let x = &x[t * batch * inp..(t + 1) * batch * inp];
                gemm(batch, inp, n, x, false, &layer.w_r, true, 1.0, &mut a_r);
                gemm(batch, inp, n, x, false, &layer.w_z, true, 1.0, &mut a_z);
                gemm(batch, inp, n, x, false, &layer.w_h, true, 1.0, &mut a_h);
            }
            None => {
                for (b, &s) in symbols[t].iter().enumerate() {
                    for j in 0..n {
                        a_r[b * n + j] += layer.w_r[j * inp + s];
                        a_z[b * n + j] += layer.w_z[j * inp + s];
                        a_h[b * n + j] += layer.w_h[j * inp + s];
                    }
                }
            }
        }
        gemm(batch, n, n, h, false, &layer.u_r, true, 1.0, &mut a_r);
        gemm(batch, n, n, h, false, &layer.u_z, true, 1.0, &mut a_z);
        let r: Vec<f64> = a_r.iter().map(|&v| super::sigmoid(v)).collect();
        let gated: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
        gemm(batch, n, n, &gated, false, &layer.u_h, true, 1.0, &mut a_h);
        for i in 0..bn {
            let z = super::sigmoid(a_z[i]);
            let ht = libm::tanh(a_h[i]);
            tr.z[t * bn + i] = z;
            tr.h_tilde[t * bn + i] = ht;
            tr.out[t * bn + i] = (1.0 - z) * h[i] + z * ht;
        }
        tr.r[span.clone()].copy_from_slice(&r);
        tr.gated[span].copy_from_slice(&gated);
    }
    tr
}

/// Backpropagates `d_out` (gradient w.r.t. each step's output) through one
/// layer, accumulating parameter gradients into `g`. Returns the gradient
/// w.r.t. the dense inputs when there are any.
fn layer_backward(
    layer: &super::GruCellParams,
    tr: &LayerTrace,
    inputs: Option<&[f64]>,
    symbols: &[Vec<usize>],
    batch: usize,
    d_out: &[f64],
    g: &mut super::GruCellParams,
) -> Option<Vec<f64>> {
    let (n, inp) = (layer.hidden_size, layer.input_size);
    let steps = symbols.len();
    let bn = batch * n;
    let mut d_inputs = inputs.map(|_| vec![0.0; steps * batch * inp]);
    let mut dh_next = vec![0.0; bn];
    let mut da_r = vec![0.0; bn];
    let mut da_z = vec![0.0; bn];
    let mut da_h = vec![0.0; bn];
    let mut dgated = vec![0.0; bn];
    for t in (0..steps).rev() {
        let o = t * bn;
        let h_prev = &tr.h_prev[o..o + bn];
        let mut dh_prev = vec![0.0; bn];
        for i in 0..bn {
            let dh = d_out[o + i] + dh_next[i];
            let (z, ht) = (tr.z[o + i], tr.h_tilde[o + i]);
            dh_prev[i] = dh * (1.0 - z);
            da_h[i] = dh * z * (1.0 - ht * ht);
            da_z[i] = dh * (ht - h_prev[i]) * z * (1.0 - z);
        }
        gemm(batch, n, n, &da_h, false, &layer.u_h, false, 0.0, &mut dgated);
        for i in 0..bn {
            let r = tr.r[o + i];
            dh_prev[i] += dgated[i] * r;
            da_r[i] = dgated[i] * h_prev[i] * r * (1.0 - r);
        }
        gemm(n, batch, n, &da_r, true, h_prev, false, 1.0, &mut g.u_r);
        gemm(n, batch, n, &da_z, true, h_prev, false, 1.0, &mut g.u_z);
        gemm(n, batch, n, &da_h, true, &tr.gated[o..o + bn], false, 1.0, &mut g.u_h);
        for b in 0..batch {
            for j in 0..n {
                g.b_r[j] += da_r[b * n + j];
                g.b_z[j] += da_z[b * n + j];
                g.b_h[j] += da_h[b * n + j];
            }
        }
        match (inputs, d_inputs.as_mut()) {
            (Some(x), Some(dx)) => {
                let span = t * batch * inp..(t + 1) * batch * inp;
                let x = &x[span.clone()];
                gemm(n, batch, inp, &da_r, true, x, false, 1.0, &mut g.w_r);
                gemm(n, batch, inp, &da_z, true, x, false, 1.0, &mut g.w_z);
                gemm(n, batch, inp, &da_h, true, x, false, 1.0, &mut g.w_h);
                let dx = &mut dx[span];
                gemm(batch, n, inp, &da_r, false, &layer.w_r, false, 1.0, dx);
                gemm(batch, n, inp, &da_z, false, &layer.w_z, false, 1.0, dx);
                gemm(batch, n, inp, &da_h, false, &layer.w_h, false, 1.0, dx);
            }
            _ => {
                for (b, &s) in symbols[t].iter().enumerate() {
                    for j in 0..n {
                        g.w_r[j * inp + s] += da_r[b * n + j];
                        g.w_z[j * inp + s] += da_z[b * n + j];
                        g.w_h[j * inp + s] += da_h[b * n + j];
                    }
                }
            }
        }
        gemm(batch, n, n, &da_r, false, &layer.u_r, false, 1.0, &mut dh_prev);
        gemm(batch, n, n, &da_z, false, &layer.u_z, false, 1.0, &mut dh_prev);
        dh_next = dh_prev;
    }
    d_inputs
}

/// Accumulates into `grad` the gradient of `scale · Σ CE` over a batch of
/// windows; returns the unscaled summed cross-entropy.
fn backprop_batch(net: &GruNetwork, symbols: &[usize], starts: &[usize], scale: f64, grad: &mut GruNetwork) -> f64 {
    let batch = starts.len();
    let w = net.window;
    let k = net.alphabet_size;
    let steps: Vec<Vec<usize>> = (0..w).map(|t| starts.iter().map(|&s| symbols[s + t]).collect()).collect();

    let mut traces: Vec<LayerTrace> = Vec::with_capacity(net.layers.len());
    for (li, layer) in net.layers.iter().enumerate() {
        let input = if li == 0 { None } else { Some(traces[li - 1].out.as_slice()) };
        let tr = layer_forward(layer, input, &steps, batch);
        traces.push(tr);
    }
    let n_top = net.top_hidden();
    let top = traces.last().expect("at least one layer");
    let h_final = &top.out[(w - 1) * batch * n_top..];

    let mut logits = vec![0.0; batch * k];
    for b in 0..batch {
        logits[b * k..(b + 1) * k].copy_from_slice(&net.readout_b);
    }
    gemm(batch, n_top, k, h_final, false, &net.readout_w, true, 1.0, &mut logits);
    let mut loss = 0.0;
    let mut dlogits = vec![0.0; batch * k];
    for (b, &s) in starts.iter().enumerate() {
        let target = symbols[s + w];
        let p = softmax(&logits[b * k..(b + 1) * k]);
        loss -= libm::log(p[target].max(f64::MIN_POSITIVE));
        for (d, pv) in dlogits[b * k..(b + 1) * k].iter_mut().zip(&p) {
            *d = pv * scale;
        }
        dlogits[b * k + target] -= scale;
    }
    gemm(k, batch, n_top, &dlogits, true, h_final, false, 1.0, &mut grad.readout_w);
    for b in 0..batch {
        for (g, d) in grad.readout_b.iter_mut().zip(&dlogits[b * k..(b + 1) * k]) {
            *g += d;
        }
    }

    let mut d_out = vec![0.0; w * batch * n_top];
    gemm(batch, k, n_top, &dlogits, false, &net.readout_w, false, 0.0, &mut d_out[(w - 1) * batch * n_top..]);
    for li in (0..net.layers.len()).rev() {
        let input = if li == 0 { None } else { Some(traces[li - 1].out.as_slice()) };
        let below = layer_backward(&net.layers[li], &traces[li], input, &steps, batch, &d_out, &mut grad.layers[li]);
        match below {
            Some(d) => d_out = d,
            None => break,
        }
    }
    loss
}

/// Mean next-symbol cross-entropy over the windows starting at `starts`,
/// and its gradient with respect to every parameter.
pub fn loss_and_gradient(net: &GruNetwork, symbols: &[usize], starts: &[usize]) -> Result<(f64, GruNetwork)> {
    net.check_shapes()?;
    if starts.is_empty() {
        return Err(Error::InsufficientData("no training windows".into()));
    }
    let w = net.window;
    if let Some(&symbol) = symbols.iter().find(|&&s| s >= net.alphabet_size) {
        return Err(Error::UnknownSymbol { symbol, alphabet: net.alphabet_size });
    }
    if starts.iter().any(|&s| s + w >= symbols.len()) {
        return Err(Error::InsufficientData("window runs past the end of the sequence".into()));
    }
    let mut grad = net.zeros_like();
    let scale = 1.0 / starts.len() as f64;
    let total = backprop_batch(net, symbols, starts, scale, &mut grad);
    Ok((total * scale, grad))
}

/// Fraction of windows whose next symbol is predicted exactly.
pub fn accuracy(net: &GruNetwork, symbols: &[usize]) -> Result<f64> {
    let starts = windows(symbols.len(), net.window);
    if starts.is_empty() {
        return Err(Error::InsufficientData("sequence shorter than the window".into()));
    }
    let mut hits = 0;
    for &s in &starts {
        if argmax(&net.forward(&symbols[s..s + net.window])?) == symbols[s + net.window] {
            hits += 1;
        }
    }
    Ok(hits as f64 / starts.len() as f64)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, net: &mut GruNetwork, grad: &GruNetwork, cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let c1 = 1.0 - libm::pow(b1, self.t as f64);
        let c2 = 1.0 - libm::pow(b2, self.t as f64);
        let mut off = 0;
        for (p, g) in net.tensors_mut().into_iter().zip(grad.tensors()) {
            for (i, (pv, gv)) in p.iter_mut().zip(g).enumerate() {
                let m = &mut self.m[off + i];
                let v = &mut self.v[off + i];
                *m = b1 * *m + (1.0 - b1) * gv;
                *v = b2 * *v + (1.0 - b2) * gv * gv;
                *pv -= cfg.learning_rate * (*m / c1) / (libm::sqrt(*v / c2) + cfg.adam_eps);
            }
            off += p.len();
        }
    }
}

/// Mini-batch Adam on next-symbol cross-entropy with full BPTT over each
/// window. Stops at `max_epochs` or when the epoch loss has not improved by
/// `min_delta` for `early_stop_patience` epochs.
pub fn train(net: &mut GruNetwork, symbols: &[usize], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    net.check_shapes()?;
    if net.window != cfg.window {
        return Err(Error::InvalidConfig("network window differs from training window".into()));
    }
    if symbols.len() <= cfg.window + 1 {
        return Err(Error::InsufficientData(alloc::format!(
            "need more than {} symbols for window {}, got {}",
            cfg.window + 1,
            cfg.window,
            symbols.len()
        )));
    }
    let mut order = windows(symbols.len(), cfg.window);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ net.seed.rotate_left(32));
    let mut adam = Adam::new(net.param_count());
    let mut history = Vec::new();
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut stopped_early = false;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grad) = loss_and_gradient(net, symbols, batch)?;
            if !loss.is_finite() {
                return Err(Error::DivergedLoss { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            adam.step(net, &grad, cfg);
        }
        epoch_loss /= order.len() as f64;
        history.push(epoch_loss);
        if epoch_loss < best - cfg.min_delta {
            best = epoch_loss;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.early_stop_patience {
                stopped_early = true;
                break;
            }
        }
    }
    Ok(TrainOutcome { epochs_run: history.len(), loss_history: history, stopped_early })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_starts() {
        assert_eq!(windows(5, 2), vec![0, 1, 2]);
        assert!(windows(2, 2).is_empty());
    }

    #[test]
    fn insufficient_data() {
        let mut net = GruNetwork::new(2, &[3], 3, 0).unwrap();
        let cfg = TrainConfig { window: 3, ..Default::default() };
        assert!(matches!(train(&mut net, &[0, 1, 0, 1], &cfg), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn loss_decreases() {
        let seq: Vec<usize> = (0..40).map(|i| (i / 2) % 3).collect();
        let mut net = GruNetwork::new(3, &[8], 4, 2).unwrap();
        let cfg = TrainConfig { window: 4, max_epochs: 100, learning_rate: 0.01, ..Default::default() };
        let out = train(&mut net, &seq, &cfg).unwrap();
        assert!(out.loss_history.last().unwrap() < &out.loss_history[0]);
    }
}
