//! Hilbert spectral analysis: analytic signal, instantaneous frequency and
//! energy, and the sparse time-frequency-energy spectrum of a set of
//! components.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fft::{fft, ifft};
use crate::{Error, Result, TimeSeries, SECONDS_PER_HOUR};

/// Samples whose amplitude is below this fraction of the peak amplitude have
/// no meaningful phase derivative.
pub const AMPLITUDE_FLOOR_RATIO: f64 = 1e-6;

pub const MIN_HILBERT_LEN: usize = 8;

/// Smallest ratio between the top and bottom edge of a spectrum's grid.
pub const MIN_SPECTRUM_SPAN: f64 = 10.0;

/// Unit in which frequencies are expressed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyUnit {
    #[default]
    Hertz,
    /// Cycles per hour, the native time unit of [`TimeSeries`].
    PerHour,
}

impl FrequencyUnit {
    pub fn from_hz(self, hz: f64) -> f64 {
        match self {
            FrequencyUnit::Hertz => hz,
            FrequencyUnit::PerHour => hz * SECONDS_PER_HOUR,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSignal {
    pub real: TimeSeries,
    pub imag: TimeSeries,
    pub amplitude: Vec<f64>,
    /// Unwrapped phase in radians.
    pub phase: Vec<f64>,
}

/// Adds or removes multiples of 2π so consecutive samples never jump by
/// more than π.
pub fn unwrap_phase(wrapped: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(wrapped.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &p in wrapped {
        if let Some(q) = prev {
            let d = p - q;
            if d > PI {
                offset -= 2.0 * PI * libm::ceil((d - PI) / (2.0 * PI));
            } else if d < -PI {
                offset += 2.0 * PI * libm::ceil((-d - PI) / (2.0 * PI));
            }
        }
        prev = Some(p);
        out.push(p + offset);
    }
    out
}

/// Analytic signal `x + iH[x]` via the frequency-domain construction:
/// positive frequencies doubled, negative ones zeroed, DC and Nyquist kept.
pub fn hilbert_transform(series: &TimeSeries) -> Result<AnalyticSignal> {
    let n = series.len();
    if n < MIN_HILBERT_LEN {
        return Err(Error::TooShort { needed: MIN_HILBERT_LEN, got: n });
    }
    let input: Vec<Complex64> = series.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut spectrum = fft(&input);
    let positive_end = n.div_ceil(2);
    for (k, c) in spectrum.iter_mut().enumerate() {
        if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
            continue;
        } else if k < positive_end {
            *c *= 2.0;
        } else {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    let z = ifft(&spectrum);
    let imag: Vec<f64> = z.iter().map(|c| c.im).collect();
    let amplitude: Vec<f64> =
        series.values().iter().zip(&imag).map(|(r, i)| libm::sqrt(r * r + i * i)).collect();
    let wrapped: Vec<f64> = series.values().iter().zip(&imag).map(|(r, i)| libm::atan2(*i, *r)).collect();
    Ok(AnalyticSignal {
        real: series.clone(),
        imag: series.with_values(imag)?,
        amplitude,
        phase: unwrap_phase(&wrapped),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstantaneousFrequency {
    pub hz: Vec<f64>,
    /// False where the amplitude is below the floor and the value is noise.
    pub reliable: Vec<bool>,
}

/// `(1/2π) dφ/dt` in Hz; central differences inside, one-sided at the ends.
pub fn instantaneous_frequency(sig: &AnalyticSignal) -> InstantaneousFrequency {
    let n = sig.phase.len();
    let dt_s = sig.real.dt() * SECONDS_PER_HOUR;
    let p = &sig.phase;
    let hz: Vec<f64> = (0..n)
        .map(|i| {
            let dphi = if i == 0 {
                (p[1] - p[0]) / dt_s
            } else if i == n - 1 {
                (p[n - 1] - p[n - 2]) / dt_s
            } else {
                (p[i + 1] - p[i - 1]) / (2.0 * dt_s)
            };
            dphi / (2.0 * PI)
        })
        .collect();
    let peak = sig.amplitude.iter().fold(0.0f64, |m, &a| m.max(a));
    let floor = AMPLITUDE_FLOOR_RATIO * peak;
    let reliable = sig.amplitude.iter().map(|&a| peak > 0.0 && a > floor).collect();
    InstantaneousFrequency { hz, reliable }
}

/// Frequency bin edges (Hz), ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub edges: Vec<f64>,
}

impl FrequencyGrid {
    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig("frequency edges must be strictly increasing, at least two".into()));
        }
        Ok(Self { edges })
    }

    /// `bins` log-spaced bins covering `[f_min, f_max]`; a degenerate range
    /// is widened by 1% each way.
    pub fn log_spaced(f_min: f64, f_max: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(f_min > 0.0) || !(f_max >= f_min) || !f_max.is_finite() {
            return Err(Error::EmptyBins);
        }
        let (lo, hi) = if f_max > f_min { (f_min, f_max) } else { (f_min * 0.99, f_max * 1.01) };
        let (llo, lhi) = (libm::log(lo), libm::log(hi));
        let mut edges: Vec<f64> =
            (0..=bins).map(|i| libm::exp(llo + (lhi - llo) * i as f64 / bins as f64)).collect();
        edges[0] = lo;
        edges[bins] = hi;
        Self::from_edges(edges)
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn width(&self, bin: usize) -> f64 {
        self.edges[bin + 1] - self.edges[bin]
    }

    /// Geometric bin centres.
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| libm::sqrt(w[0] * w[1])).collect()
    }

    pub fn bin_of(&self, f: f64) -> Option<usize> {
        let n = self.edges.len();
        if !(f >= self.edges[0] && f <= self.edges[n - 1]) {
            return None;
        }
        let i = self.edges.partition_point(|&e| e <= f);
        Some(i.saturating_sub(1).min(n - 2))
    }
}

/// Energy `ε(t)` of one component: at each sample the squared amplitude is
/// deposited as a density over the bin holding the instantaneous frequency,
/// and the density is integrated back over the grid.
pub fn instantaneous_energy(sig: &AnalyticSignal, grid: &FrequencyGrid) -> Result<Vec<f64>> {
    let inst = instantaneous_frequency(sig);
    let mut energy = vec![0.0; sig.amplitude.len()];
    let mut any_signal = false;
    let mut any_inside = false;
    for (i, (&f, &ok)) in inst.hz.iter().zip(&inst.reliable).enumerate() {
        if !ok {
            continue;
        }
        any_signal = true;
        if let Some(bin) = grid.bin_of(f) {
            any_inside = true;
            let a = sig.amplitude[i];
            let density = a * a / grid.width(bin);
            energy[i] = density * grid.width(bin);
        }
    }
    if any_signal && !any_inside {
        return Err(Error::EmptyBins);
    }
    Ok(energy)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HilbertSpectrum {
    /// Sample times in hours.
    pub times: Vec<f64>,
    /// Bin centres in Hz.
    pub freqs: Vec<f64>,
    #[serde(skip)]
    pub grid: FrequencyGrid,
    /// Sparse `(time index, frequency index, energy)` entries, sorted.
    pub triplets: Vec<(usize, usize, f64)>,
    /// Per component, per sample instantaneous frequency in Hz.
    #[serde(skip)]
    pub inst_freq: Vec<Vec<f64>>,
    /// Per component, per sample instantaneous energy.
    #[serde(skip)]
    pub inst_energy: Vec<Vec<f64>>,
}

impl HilbertSpectrum {
    /// Total energy in each frequency bin.
    pub fn marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.freqs.len()];
        for &(_, f, e) in &self.triplets {
            m[f] += e;
        }
        m
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.freqs.len()]; self.times.len()];
        for &(t, f, e) in &self.triplets {
            d[t][f] += e;
        }
        d
    }
}

fn demeaned(series: &TimeSeries) -> Result<TimeSeries> {
    let mean = series.values().iter().sum::<f64>() / series.len() as f64;
    series.with_values(series.values().iter().map(|v| v - mean).collect())
}

/// Time-frequency-energy distribution of several components on one grid.
///
/// Each component (mean removed) deposits `a(t)²` at `(t, IF(t))`.
/// Bins are log-spaced between the smallest and largest reliable positive
/// instantaneous frequency seen across all components, widened about its
/// geometric centre to at least [`MIN_SPECTRUM_SPAN`].
pub fn build_spectrum(components: &[TimeSeries], freq_bins: usize) -> Result<HilbertSpectrum> {
    let first = components.first().ok_or(Error::EmptyBins)?;
    if components.iter().any(|c| !c.same_grid(first)) {
        return Err(Error::ShapeMismatch("spectrum components must share one time grid".into()));
    }
    let mut signals = Vec::with_capacity(components.len());
    let mut freqs = Vec::with_capacity(components.len());
    let (mut f_lo, mut f_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in components {
        let sig = hilbert_transform(&demeaned(c)?)?;
        let inst = instantaneous_frequency(&sig);
        for (&f, &ok) in inst.hz.iter().zip(&inst.reliable) {
            if ok && f > 0.0 && f.is_finite() {
                f_lo = f_lo.min(f);
                f_hi = f_hi.max(f);
            }
        }
        signals.push(sig);
        freqs.push(inst);
    }
    if !f_lo.is_finite() {
        return Err(Error::EmptyBins);
    }
    // a near-constant IF would otherwise be sliced into bins finer than its jitter
    let span = f_hi / f_lo;
    if span < MIN_SPECTRUM_SPAN {
        let widen = libm::sqrt(MIN_SPECTRUM_SPAN / span);
        f_lo /= widen;
        f_hi *= widen;
    }
    let grid = FrequencyGrid::log_spaced(f_lo, f_hi, freq_bins)?;

    let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut inst_energy = Vec::with_capacity(signals.len());
    for (sig, inst) in signals.iter().zip(&freqs) {
        let mut energy = vec![0.0; sig.amplitude.len()];
        for (t, (&f, &ok)) in inst.hz.iter().zip(&inst.reliable).enumerate() {
            if !ok {
                continue;
            }
            if let Some(bin) = grid.bin_of(f) {
                let e = sig.amplitude[t] * sig.amplitude[t];
                *cells.entry((t, bin)).or_insert(0.0) += e;
                energy[t] = e;
            }
        }
        inst_energy.push(energy);
    }
    Ok(HilbertSpectrum {
        times: first.times().collect(),
        freqs: grid.centers(),
        triplets: cells.into_iter().map(|((t, f), e)| (t, f, e)).collect(),
        grid,
        inst_freq: freqs.into_iter().map(|i| i.hz).collect(),
        inst_energy,
    })
}
