//! Prognostics metrics: confidence regions, prognostics horizon, alpha-lambda
//! performance and relative accuracy.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub alpha_low: f64,
    pub alpha_up: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { alpha_low: 0.2, alpha_up: 0.1 }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |a: f64| a.is_finite() && (0.0..1.0).contains(&a);
        if !ok(self.alpha_low) || !ok(self.alpha_up) {
            return Err(Error::InvalidConfig("alpha modifiers must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// `[rul - alpha_low * eol, rul + alpha_up * eol]`, not clipped at zero.
pub fn cr_ph_bounds(rul_true: f64, eol_true: f64, cfg: &MetricConfig) -> (f64, f64) {
    (rul_true - cfg.alpha_low * eol_true, rul_true + cfg.alpha_up * eol_true)
}

/// `[rul * (1 - alpha_low), rul * (1 + alpha_up)]`; narrows as the truth approaches zero.
pub fn alpha_lambda_bounds(rul_true: f64, cfg: &MetricConfig) -> (f64, f64) {
    (rul_true * (1.0 - cfg.alpha_low), rul_true * (1.0 + cfg.alpha_up))
}

pub fn within(v: f64, (lo, hi): (f64, f64)) -> bool {
    v >= lo && v <= hi
}

/// One prognostics point's outcome for a given failure threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEntry {
    pub t: f64,
    pub rul_true: f64,
    /// `None` when the predictor produced no estimate at this point.
    pub rul_pred: Option<f64>,
    pub in_cr_ph: bool,
    pub in_alpha_lambda: bool,
    pub ra: Option<f64>,
}

impl MetricEntry {
    pub fn new(t: f64, eol_true: f64, rul_pred: Option<f64>, cfg: &MetricConfig) -> Result<Self> {
        let rul_true = eol_true - t;
        let (in_cr_ph, in_alpha_lambda, ra) = match rul_pred {
            Some(p) => (
                within(p, cr_ph_bounds(rul_true, eol_true, cfg)),
                within(p, alpha_lambda_bounds(rul_true, cfg)),
                Some(relative_accuracy(rul_true, p)?),
            ),
            None => (false, false, None),
        };
        Ok(Self { t, rul_true, rul_pred, in_cr_ph, in_alpha_lambda, ra })
    }
}

/// `eol_true - t*`, where `t*` is the earliest entry from which every entry
/// (itself included) lies inside its confidence region. Zero if the last
/// entry is outside.
pub fn prognostics_horizon(entries: &[MetricEntry], eol_true: f64) -> Result<f64> {
    let inside: Vec<(f64, bool)> = entries.iter().map(|e| (e.t, e.in_cr_ph)).collect();
    horizon_from_flags(&inside, eol_true)
}

/// Same as [`prognostics_horizon`] on bare `(t, inside)` pairs.
pub fn horizon_from_flags(flags: &[(f64, bool)], eol_true: f64) -> Result<f64> {
    if flags.is_empty() {
        return Err(Error::EmptyEntries);
    }
    let mut start = None;
    for (t, ok) in flags.iter().rev() {
        if !ok {
            break;
        }
        start = Some(*t);
    }
    Ok(start.map_or(0.0, |t| eol_true - t))
}

/// `1 - |rt - rp| / rt`, unclipped.
pub fn relative_accuracy(rul_true: f64, rul_pred: f64) -> Result<f64> {
    if rul_true == 0.0 {
        return Err(Error::ZeroTrueRul);
    }
    Ok(1.0 - (rul_true - rul_pred).abs() / rul_true)
}

/// All prognostics points for one failure threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub ft: f64,
    pub eol_true: f64,
    pub entries: Vec<MetricEntry>,
    pub ph: f64,
    /// mean over entries that have a prediction; `None` if none do
    pub mean_ra: Option<f64>,
}

impl EvaluationRecord {
    pub fn new(ft: f64, eol_true: f64, entries: Vec<MetricEntry>) -> Result<Self> {
        let ph = prognostics_horizon(&entries, eol_true)?;
        let ras: Vec<f64> = entries.iter().filter_map(|e| e.ra).collect();
        let mean_ra = (!ras.is_empty()).then(|| ras.iter().sum::<f64>() / ras.len() as f64);
        Ok(Self { ft, eol_true, entries, ph, mean_ra })
    }

    pub fn alpha_lambda_passes(&self) -> usize {
        self.entries.iter().filter(|e| e.in_alpha_lambda).count()
    }
}
