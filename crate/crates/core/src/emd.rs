//! Empirical mode decomposition.
//!
//! A signal is peeled into intrinsic mode functions (IMFs) by repeatedly
//! subtracting the mean of its upper and lower cubic-spline envelopes
//! ("sifting"). Whatever is left after the last IMF is the residual, and the
//! IMFs plus the residual add back up to the input.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::spline::NaturalSpline;
use crate::{Error, Result, TimeSeries};

/// How envelopes are extended past the ends of the series.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeBoundary {
    /// Reflect the two outermost extrema about each endpoint.
    #[default]
    Mirror,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiftConfig {
    pub max_sift_iters: usize,
    /// Cauchy-type stop: `Σ(h_prev − h)² / Σ h_prev²` must fall below this.
    pub sd_threshold: f64,
    pub max_imfs: usize,
    pub envelope_boundary: EnvelopeBoundary,
    /// Report [`Error::NoConvergence`] instead of accepting the last iterate
    /// when `max_sift_iters` runs out.
    pub fail_on_iteration_cap: bool,
}

impl Default for SiftConfig {
    fn default() -> Self {
        Self {
            max_sift_iters: 100,
            sd_threshold: 0.2,
            max_imfs: 32,
            envelope_boundary: EnvelopeBoundary::Mirror,
            fail_on_iteration_cap: false,
        }
    }
}

impl SiftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_sift_iters == 0 || self.max_imfs == 0 {
            return Err(Error::InvalidConfig("max_sift_iters and max_imfs must be positive".into()));
        }
        if !(self.sd_threshold > 0.0 && self.sd_threshold < 1.0) {
            return Err(Error::InvalidConfig("sd_threshold must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Local extrema as `(index, value)` pairs in index order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extrema {
    pub maxima: Vec<(usize, f64)>,
    pub minima: Vec<(usize, f64)>,
}

impl Extrema {
    pub fn count(&self) -> usize {
        self.maxima.len() + self.minima.len()
    }
}

pub fn find_extrema(series: &TimeSeries) -> Result<Extrema> {
    if series.len() < 3 {
        return Err(Error::TooShort { needed: 3, got: series.len() });
    }
    Ok(extrema_of(series.values()))
}

/// Strict local extrema; a flat run bounded on both sides by lower (higher)
/// samples counts once, at its midpoint. Runs touching either end are not
/// extrema.
pub(crate) fn extrema_of(x: &[f64]) -> Extrema {
    let n = x.len();
    let mut out = Extrema::default();
    let mut i = 1;
    while i + 1 < n {
        let mut j = i;
        while j + 1 < n && x[j + 1] == x[i] {
            j += 1;
        }
        if j + 1 >= n {
            break;
        }
        let (left, right, v) = (x[i - 1], x[j + 1], x[i]);
        let mid = (i + j) / 2;
        if v > left && v > right {
            out.maxima.push((mid, v));
        } else if v < left && v < right {
            out.minima.push((mid, v));
        }
        i = j + 1;
    }
    out
}

/// Sign changes, skipping exact zeros.
pub fn zero_crossings(x: &[f64]) -> usize {
    let mut count = 0;
    let mut prev = 0.0;
    for &v in x {
        if v == 0.0 {
            continue;
        }
        if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
            count += 1;
        }
        prev = v;
    }
    count
}

/// IMF shape condition: extrema and zero crossings differ by at most one.
pub fn satisfies_extrema_criterion(x: &[f64]) -> bool {
    let e = extrema_of(x).count();
    let z = zero_crossings(x);
    e.abs_diff(z) <= 1
}

fn mirrored_knots(points: &[(usize, f64)], n: usize) -> (Vec<f64>, Vec<f64>) {
    let last = (n - 1) as f64;
    let k = points.len().min(2);
    let mut xs = Vec::with_capacity(points.len() + 2 * k);
    let mut ys = Vec::with_capacity(points.len() + 2 * k);
    for &(p, v) in points[..k].iter().rev() {
        xs.push(-(p as f64));
        ys.push(v);
    }
    for &(p, v) in points {
        xs.push(p as f64);
        ys.push(v);
    }
    for &(p, v) in points[points.len() - k..].iter().rev() {
        xs.push(2.0 * last - p as f64);
        ys.push(v);
    }
    (xs, ys)
}

/// Upper and lower envelopes on the sample grid.
pub(crate) fn envelopes(x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let ext = extrema_of(x);
    if ext.maxima.is_empty() || ext.minima.is_empty() {
        return Err(Error::InsufficientExtrema);
    }
    let n = x.len();
    let (ux, uy) = mirrored_knots(&ext.maxima, n);
    let (lx, ly) = mirrored_knots(&ext.minima, n);
    let upper = NaturalSpline::fit(&ux, &uy)?.eval_grid(0.0, n);
    let lower = NaturalSpline::fit(&lx, &ly)?.eval_grid(0.0, n);
    Ok((upper, lower))
}

fn mean_envelope_of(x: &[f64]) -> Result<Vec<f64>> {
    let (upper, lower) = envelopes(x)?;
    Ok(upper.iter().zip(&lower).map(|(u, l)| 0.5 * (u + l)).collect())
}

/// `(e_max + e_min) / 2` with natural-spline envelopes through the
/// (mirror-extended) maxima and minima.
pub fn mean_envelope(series: &TimeSeries) -> Result<TimeSeries> {
    if series.len() < 3 {
        return Err(Error::TooShort { needed: 3, got: series.len() });
    }
    series.with_values(mean_envelope_of(series.values())?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiftOutcome {
    pub imf: TimeSeries,
    pub residual: TimeSeries,
    pub iterations: usize,
    /// False when the iteration cap ended sifting.
    pub converged: bool,
}

pub fn sift_one_imf(series: &TimeSeries, cfg: &SiftConfig) -> Result<SiftOutcome> {
    cfg.validate()?;
    if series.len() < 3 {
        return Err(Error::TooShort { needed: 3, got: series.len() });
    }
    let x = series.values();
    let mut h = x.to_vec();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_sift_iters {
        let m = match mean_envelope_of(&h) {
            Ok(m) => m,
            // the component has lost its oscillation; keep what we have
            Err(Error::InsufficientExtrema) if iterations > 0 => break,
            Err(e) => return Err(e),
        };
        iterations += 1;
        let prev_energy: f64 = h.iter().map(|v| v * v).sum();
        let change: f64 = m.iter().map(|v| v * v).sum();
        for (hv, mv) in h.iter_mut().zip(&m) {
            *hv -= mv;
        }
        let sd = if prev_energy > 0.0 { change / prev_energy } else { 0.0 };
        if sd < cfg.sd_threshold && satisfies_extrema_criterion(&h) {
            converged = true;
            break;
        }
    }
    if !converged && iterations >= cfg.max_sift_iters && cfg.fail_on_iteration_cap {
        return Err(Error::NoConvergence { iterations });
    }
    let residual: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a - b).collect();
    Ok(SiftOutcome {
        imf: series.with_values(h)?,
        residual: series.with_values(residual)?,
        iterations,
        converged,
    })
}

/// IMFs `c_1 … c_n` and final residual `r_n` of one decomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImfSet {
    pub imfs: Vec<TimeSeries>,
    pub residual: TimeSeries,
    pub source_len: usize,
    /// Sifting iterations spent on each IMF.
    pub sift_iterations: Vec<usize>,
    /// Whether each IMF met the stop criterion before the iteration cap.
    pub converged: Vec<bool>,
}

impl ImfSet {
    /// `r_n + Σ c_i`, summed sample by sample.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.residual.values().to_vec();
        for imf in &self.imfs {
            for (o, v) in out.iter_mut().zip(imf.values()) {
                *o += v;
            }
        }
        out
    }
}

/// Decides, after each IMF, whether the current residual is final.
pub trait ResidualStopRule {
    fn should_stop(&mut self, residual: &TimeSeries) -> Result<bool>;
}

/// Never stops early; decomposition ends when the residual is monotone or
/// `max_imfs` is reached.
#[derive(Debug, Clone, Copy, Default)]
pub struct Exhaustive;

impl ResidualStopRule for Exhaustive {
    fn should_stop(&mut self, _residual: &TimeSeries) -> Result<bool> {
        Ok(false)
    }
}

/// Wraps a closure as a stop rule.
pub struct StopFn<F>(pub F);

impl<F: FnMut(&TimeSeries) -> Result<bool>> ResidualStopRule for StopFn<F> {
    fn should_stop(&mut self, residual: &TimeSeries) -> Result<bool> {
        (self.0)(residual)
    }
}

/// True when the signal has no interior maximum or no interior minimum, so
/// no envelope pair can be formed.
pub fn is_monotone_like(x: &[f64]) -> bool {
    let e = extrema_of(x);
    e.maxima.is_empty() || e.minima.is_empty()
}

pub fn decompose<R: ResidualStopRule + ?Sized>(series: &TimeSeries, cfg: &SiftConfig, stop: &mut R) -> Result<ImfSet> {
    cfg.validate()?;
    let mut imfs = Vec::new();
    let mut sift_iterations = Vec::new();
    let mut converged = Vec::new();
    let mut residual = series.clone();
    while imfs.len() < cfg.max_imfs {
        if residual.len() < 3 || is_monotone_like(residual.values()) {
            break;
        }
        let out = sift_one_imf(&residual, cfg)?;
        imfs.push(out.imf);
        sift_iterations.push(out.iterations);
        converged.push(out.converged);
        residual = out.residual;
        if stop.should_stop(&residual)? {
            break;
        }
    }
    Ok(ImfSet { imfs, residual, source_len: series.len(), sift_iterations, converged })
}
