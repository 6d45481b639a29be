//! Adaptive Brownian bridge-based aggregation (ABBA).
//!
//! A series is compressed into a polyline of `(len, inc)` pieces, the pieces
//! are clustered, and each piece is replaced by the label of its cluster.
//! The inverse maps labels back to cluster centres and stitches the centres
//! into a polyline again.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kmeans::{kmeans, Point};
use crate::stats::std_dev;
use crate::{Error, Result, TimeSeries};

pub const MAX_ALPHABET: usize = 100;

/// One polyline piece: `len` samples long, rising by `inc`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentTuple {
    pub len: usize,
    pub inc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compression {
    pub tuples: Vec<SegmentTuple>,
    pub start_value: f64,
}

/// Greedy piecewise-linear compression.
///
/// A piece starting at sample `s` is extended to `e` for as long as the
/// squared distances of the samples from the chord `x[s] → x[e]` sum to at
/// most `(e − s) · tol²`.
pub fn compress(series: &TimeSeries, tol: f64) -> Result<Compression> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidConfig("ABBA tolerance must be positive".into()));
    }
    let x = series.values();
    let n = x.len();
    let tol2 = tol * tol;
    let mut tuples = Vec::new();
    let mut s = 0;
    while s < n - 1 {
        // running sums of y_j = x[s + j] − x[s]
        let mut syy = 0.0;
        let mut sjy = 0.0;
        let mut e = s + 1;
        {
            let y = x[e] - x[s];
            syy += y * y;
            sjy += y;
        }
        while e + 1 < n {
            let cand = e + 1;
            let len = (cand - s) as f64;
            let y = x[cand] - x[s];
            let syy_c = syy + y * y;
            let sjy_c = sjy + len * y;
            let sjj = len * (len + 1.0) * (2.0 * len + 1.0) / 6.0;
            let slope = y / len;
            let sse = syy_c - 2.0 * slope * sjy_c + slope * slope * sjj;
            // slack keeps the direct recomputation inside the bound as well
            if sse > len * tol2 * (1.0 - 1e-9) {
                break;
            }
            syy = syy_c;
            sjy = sjy_c;
            e = cand;
        }
        tuples.push(SegmentTuple { len: e - s, inc: x[e] - x[s] });
        s = e;
    }
    Ok(Compression { tuples, start_value: x[0] })
}

/// Sum of squared deviations of `x[s..=e]` from the chord joining its ends.
pub fn chord_sse(x: &[f64], s: usize, e: usize) -> f64 {
    let len = (e - s) as f64;
    (s..=e)
        .map(|i| {
            let chord = x[s] + (x[e] - x[s]) * ((i - s) as f64 / len);
            (x[i] - chord) * (x[i] - chord)
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    /// Cluster centres `(len, inc)` in scaled units.
    pub centers: Vec<Point>,
    pub scale_len: f64,
    pub scale_inc: f64,
}

impl Codebook {
    pub fn alphabet_size(&self) -> usize {
        self.centers.len()
    }

    /// Centre of `symbol` in original units (`len` still real-valued).
    pub fn center(&self, symbol: usize) -> Result<(f64, f64)> {
        let c = self
            .centers
            .get(symbol)
            .ok_or(Error::UnknownSymbol { symbol, alphabet: self.centers.len() })?;
        Ok((c[0] * self.scale_len, c[1] * self.scale_inc))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicModel {
    pub symbols: Vec<usize>,
    pub codebook: Codebook,
    pub start_value: f64,
    pub tolerance: f64,
}

impl SymbolicModel {
    pub fn validate(&self) -> Result<()> {
        let k = self.codebook.alphabet_size();
        if k == 0 || k > MAX_ALPHABET {
            return Err(Error::InvalidConfig("alphabet size must be in 1..=100".into()));
        }
        if !(self.codebook.scale_len > 0.0 && self.codebook.scale_inc > 0.0) {
            return Err(Error::InvalidConfig("codebook scales must be positive".into()));
        }
        if let Some(&symbol) = self.symbols.iter().find(|&&s| s >= k) {
            return Err(Error::UnknownSymbol { symbol, alphabet: k });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DigitizeConfig {
    pub max_k: usize,
    /// Accept the smallest `k` whose WCSS is at most `m · tolerance`.
    pub tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for DigitizeConfig {
    fn default() -> Self {
        Self { max_k: MAX_ALPHABET, tolerance: 0.05, restarts: 20, seed: 0 }
    }
}

impl DigitizeConfig {
    /// Digitization tolerance derived from the compression tolerance.
    pub fn for_compression_tol(tol: f64, seed: u64) -> Self {
        Self { tolerance: tol.max(0.05), seed, ..Self::default() }
    }
}

fn guarded_scale(sigma: f64) -> f64 {
    if sigma > 0.0 && sigma.is_finite() {
        sigma
    } else {
        1.0
    }
}

/// Clusters the tuples and labels them in order of first appearance.
pub fn digitize(compression: &Compression, tol: f64, cfg: &DigitizeConfig) -> Result<SymbolicModel> {
    let tuples = &compression.tuples;
    let m = tuples.len();
    if m == 0 {
        return Err(Error::InsufficientData("nothing to digitize".into()));
    }
    if cfg.max_k == 0 || cfg.max_k > MAX_ALPHABET {
        return Err(Error::InvalidConfig("max_k must be in 1..=100".into()));
    }
    let lens: Vec<f64> = tuples.iter().map(|t| t.len as f64).collect();
    let incs: Vec<f64> = tuples.iter().map(|t| t.inc).collect();
    let scale_len = guarded_scale(std_dev(&lens));
    let scale_inc = guarded_scale(std_dev(&incs));
    let points: Vec<Point> = tuples.iter().map(|t| [t.len as f64 / scale_len, t.inc / scale_inc]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let budget = m as f64 * cfg.tolerance;
    let mut best = None;
    for k in 1..=cfg.max_k.min(m) {
        let fit = kmeans(&points, k, cfg.restarts, &mut rng);
        let accept = fit.wcss <= budget;
        if best.as_ref().is_none_or(|b: &crate::kmeans::KMeansFit| fit.wcss < b.wcss) || accept {
            best = Some(fit);
        }
        if accept {
            break;
        }
    }
    let fit = best.expect("k = 1 always runs");

    // relabel by first appearance; unused clusters disappear
    let mut remap = alloc::vec![usize::MAX; fit.centers.len()];
    let mut centers = Vec::new();
    let mut symbols = Vec::with_capacity(m);
    for &l in &fit.labels {
        if remap[l] == usize::MAX {
            remap[l] = centers.len();
            centers.push(fit.centers[l]);
        }
        symbols.push(remap[l]);
    }
    Ok(SymbolicModel {
        symbols,
        codebook: Codebook { centers, scale_len, scale_inc },
        start_value: compression.start_value,
        tolerance: tol,
    })
}

/// Rounds a stream of real-valued lengths to positive integers so that the
/// running integer total never drifts a full sample from the real total.
#[derive(Debug, Clone, Default)]
pub struct LengthQuantizer {
    real_total: f64,
    int_total: i64,
}

impl LengthQuantizer {
    pub fn push(&mut self, len: f64) -> usize {
        self.real_total += len;
        let target = libm::round(self.real_total) as i64;
        let step = (target - self.int_total).max(1);
        self.int_total += step;
        step as usize
    }
}

/// Decodes `symbols` against `codebook`.
pub fn decode_symbols(symbols: &[usize], codebook: &Codebook) -> Result<Vec<SegmentTuple>> {
    let mut q = LengthQuantizer::default();
    symbols
        .iter()
        .map(|&s| {
            let (len, inc) = codebook.center(s)?;
            Ok(SegmentTuple { len: q.push(len), inc })
        })
        .collect()
}

pub fn inverse_digitize(model: &SymbolicModel) -> Result<Vec<SegmentTuple>> {
    model.validate()?;
    decode_symbols(&model.symbols, &model.codebook)
}

/// Appends the polyline for `tuples` to `out`, whose last element is the
/// current end value.
pub fn extend_polyline(out: &mut Vec<f64>, tuples: &[SegmentTuple]) {
    let mut level = *out.last().expect("polyline has a start value");
    for t in tuples {
        let len = t.len as f64;
        for j in 1..=t.len {
            out.push(level + t.inc * (j as f64 / len));
        }
        level += t.inc;
    }
}

pub fn inverse_compress(tuples: &[SegmentTuple], start_value: f64, t0: f64, dt: f64) -> Result<TimeSeries> {
    if tuples.is_empty() {
        return Err(Error::InsufficientData("no segments to reconstruct".into()));
    }
    if tuples.iter().any(|t| t.len == 0) {
        return Err(Error::InvalidSeries("segment length must be at least 1".into()));
    }
    let total: usize = tuples.iter().map(|t| t.len).sum();
    let mut values = Vec::with_capacity(total + 1);
    values.push(start_value);
    extend_polyline(&mut values, tuples);
    TimeSeries::new(t0, dt, values)
}
