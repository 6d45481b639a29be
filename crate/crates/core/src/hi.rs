//! Health-indicator extraction: sift IMFs off the voltage one at a time and
//! stop as soon as the residual's instantaneous frequency drops below a
//! threshold. That residual is the health indicator.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::emd::{decompose, ImfSet, SiftConfig, StopFn};
use crate::hilbert::{hilbert_transform, instantaneous_frequency, FrequencyUnit, MIN_HILBERT_LEN};
use crate::stats::weighted_median;
use crate::{Error, Result, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HiConfig {
    /// Stop once the residual's representative IF is below this.
    pub threshold: f64,
    /// Unit of `threshold` and of the reported IF values.
    pub unit: FrequencyUnit,
    pub sift: SiftConfig,
}

impl Default for HiConfig {
    fn default() -> Self {
        Self { threshold: 0.005, unit: FrequencyUnit::PerHour, sift: SiftConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HiExtractionResult {
    pub hi: TimeSeries,
    pub imf_count: usize,
    /// Representative IF of the residual after each IMF, in `unit`.
    pub if_summary: Vec<f64>,
    pub threshold: f64,
    pub unit: FrequencyUnit,
    /// False when decomposition ended (monotone residual or `max_imfs`)
    /// with the residual still above the threshold.
    pub threshold_met: bool,
    #[serde(skip)]
    pub decomposition: ImfSet,
}

/// Amplitude-weighted median of the instantaneous frequency of the
/// signal, with its least-squares line removed, over the interior 90%.
///
/// A signal without any oscillation (all amplitudes below the floor)
/// has representative frequency 0.
pub fn representative_if(residual: &TimeSeries, unit: FrequencyUnit) -> Result<f64> {
    let n = residual.len();
    if n < MIN_HILBERT_LEN {
        return Err(Error::TooShort { needed: MIN_HILBERT_LEN, got: n });
    }
    let centered = residual.with_values(detrend(residual.values()))?;
    let sig = hilbert_transform(&centered)?;
    let inst = instantaneous_frequency(&sig);
    let margin = n / 20;
    let range = margin..n - margin;
    let weights: Vec<f64> = range
        .clone()
        .map(|i| if inst.reliable[i] { sig.amplitude[i] } else { 0.0 })
        .collect();
    let median = weighted_median(&inst.hz[range], &weights).unwrap_or(0.0);
    Ok(unit.from_hz(median))
}

/// `x` minus its least-squares straight line over the sample index.
pub fn detrend(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mid = (n - 1.0) / 2.0;
    let mean = x.iter().sum::<f64>() / n;
    let sxx: f64 = (0..x.len()).map(|i| (i as f64 - mid).powi(2)).sum();
    let sxy: f64 = x.iter().enumerate().map(|(i, v)| (i as f64 - mid) * (v - mean)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    x.iter().enumerate().map(|(i, v)| v - mean - slope * (i as f64 - mid)).collect()
}

pub fn extract_hi(voltage: &TimeSeries, cfg: &HiConfig) -> Result<HiExtractionResult> {
    if !(cfg.threshold > 0.0 && cfg.threshold.is_finite()) {
        return Err(Error::InvalidConfig("IF threshold must be positive".into()));
    }
    let mut if_summary = Vec::new();
    let decomposition = {
        let mut rule = StopFn(|r: &TimeSeries| {
            let f = representative_if(r, cfg.unit)?;
            if_summary.push(f);
            Ok(f < cfg.threshold)
        });
        decompose(voltage, &cfg.sift, &mut rule)?
    };
    let threshold_met = match if_summary.last() {
        Some(&f) if if_summary.len() == decomposition.imfs.len() => f < cfg.threshold,
        _ => representative_if(&decomposition.residual, cfg.unit)? < cfg.threshold,
    };
    Ok(HiExtractionResult {
        hi: decomposition.residual.clone(),
        imf_count: decomposition.imfs.len(),
        if_summary,
        threshold: cfg.threshold,
        unit: cfg.unit,
        threshold_met,
        decomposition,
    })
}
