//! Evaluation harness: truth EOLs from the full HI, a schedule of
//! prognostics points, a predictor run at each point, and the metric matrix
//! over points × failure thresholds.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::metrics::{EvaluationRecord, MetricConfig, MetricEntry};
use crate::rul::{predict_rul_multi, trajectory_to_eol, FailureThresholdSet, PrognosticsPoint, RulConfig};
use crate::{Error, Result, TimeSeries};

/// Evenly spaced prognostics points between two fractions of life, where
/// life is the earliest true EOL over all thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointSchedule {
    pub first_frac: f64,
    pub last_frac: f64,
    pub count: usize,
}

impl Default for PointSchedule {
    fn default() -> Self {
        Self { first_frac: 0.5, last_frac: 0.9, count: 9 }
    }
}

impl PointSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = self.count > 0
            && self.first_frac > 0.0
            && self.last_frac < 1.0
            && self.first_frac <= self.last_frac
            && (self.count > 1 || self.first_frac == self.last_frac);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("schedule needs 0 < first_frac <= last_frac < 1 and count >= 1".into()))
        }
    }

    /// Point times in hours for a record starting at `t0` with the given life.
    pub fn times(&self, t0: f64, life: f64) -> Vec<f64> {
        let span = life - t0;
        (0..self.count)
            .map(|i| {
                let frac = if self.count == 1 {
                    self.first_frac
                } else {
                    self.first_frac + (self.last_frac - self.first_frac) * i as f64 / (self.count - 1) as f64
                };
                t0 + frac * span
            })
            .collect()
    }
}

/// Crossing time of the full HI with every threshold.
pub fn truth_eols(hi: &TimeSeries, thresholds: &FailureThresholdSet) -> Result<Vec<f64>> {
    thresholds
        .as_slice()
        .iter()
        .map(|&ft| {
            trajectory_to_eol(hi, ft)
                .ok_or_else(|| Error::InvalidSeries(format!("full HI never reaches failure threshold {ft}")))
        })
        .collect()
}

/// Anything that turns observed history into one RUL per threshold.
pub trait RulPredictor {
    /// `None` for a threshold the predictor could not reach.
    fn predict(&self, point: &PrognosticsPoint, thresholds: &FailureThresholdSet) -> Result<Vec<Option<f64>>>;
}

/// The ABBA-GRU ensemble with KDE-mode selection.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePredictor {
    pub cfg: RulConfig,
}

impl RulPredictor for EnsemblePredictor {
    fn predict(&self, point: &PrognosticsPoint, thresholds: &FailureThresholdSet) -> Result<Vec<Option<f64>>> {
        predict_rul_multi(point, thresholds, &self.cfg)?
            .into_iter()
            .map(|r| match r {
                Ok(est) => Ok(Some(est.rul_mode)),
                Err(Error::AllModelsNonCrossing { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPrediction {
    pub t: f64,
    /// One entry per threshold.
    pub rul: Vec<Option<f64>>,
}

/// Builds one record per threshold from predictions made at each point.
pub fn score(
    thresholds: &FailureThresholdSet,
    eols: &[f64],
    predictions: &[PointPrediction],
    cfg: &MetricConfig,
) -> Result<Vec<EvaluationRecord>> {
    cfg.validate()?;
    let fts = thresholds.as_slice();
    if eols.len() != fts.len() {
        return Err(Error::ShapeMismatch(format!("{} truth EOLs for {} thresholds", eols.len(), fts.len())));
    }
    if predictions.is_empty() {
        return Err(Error::EmptyEntries);
    }
    if let Some(p) = predictions.iter().find(|p| p.rul.len() != fts.len()) {
        return Err(Error::ShapeMismatch(format!("point at {} h has {} predictions", p.t, p.rul.len())));
    }
    fts.iter()
        .zip(eols)
        .enumerate()
        .map(|(i, (&ft, &eol))| {
            let entries = predictions
                .iter()
                .map(|p| {
                    if p.t >= eol {
                        return Err(Error::InvalidConfig(format!(
                            "prognostics point {} h is not before the true EOL {eol} h",
                            p.t
                        )));
                    }
                    MetricEntry::new(p.t, eol, p.rul[i], cfg)
                })
                .collect::<Result<Vec<_>>>()?;
            EvaluationRecord::new(ft, eol, entries)
        })
        .collect()
}

/// Headline numbers of an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub ft: Vec<f64>,
    pub ph: Vec<f64>,
    pub mean_ra: Vec<Option<f64>>,
    /// Mean RA over the final `last_n` points, per threshold.
    pub mean_ra_last: Vec<Option<f64>>,
    pub last_n: usize,
    pub alpha_lambda_passes: usize,
    pub alpha_lambda_total: usize,
    pub alpha_lambda_pass_rate: f64,
}

/// Mean RA over the last `n` entries; entries without a prediction count
/// as RA 0 so a missing forecast cannot raise the average.
pub fn mean_ra_last(record: &EvaluationRecord, n: usize) -> Option<f64> {
    let tail = &record.entries[record.entries.len().saturating_sub(n)..];
    if tail.is_empty() {
        return None;
    }
    Some(tail.iter().map(|e| e.ra.unwrap_or(0.0)).sum::<f64>() / tail.len() as f64)
}

pub fn summarize(records: &[EvaluationRecord], last_n: usize) -> Summary {
    let passes: usize = records.iter().map(|r| r.alpha_lambda_passes()).sum();
    let total: usize = records.iter().map(|r| r.entries.len()).sum();
    Summary {
        ft: records.iter().map(|r| r.ft).collect(),
        ph: records.iter().map(|r| r.ph).collect(),
        mean_ra: records.iter().map(|r| r.mean_ra).collect(),
        mean_ra_last: records.iter().map(|r| mean_ra_last(r, last_n)).collect(),
        last_n,
        alpha_lambda_passes: passes,
        alpha_lambda_total: total,
        alpha_lambda_pass_rate: if total == 0 { 0.0 } else { passes as f64 / total as f64 },
    }
}

/// Everything an evaluation run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub life: f64,
    pub eols: Vec<f64>,
    pub predictions: Vec<PointPrediction>,
    pub records: Vec<EvaluationRecord>,
    pub summary: Summary,
}

/// Truth EOLs and point times for a normalized full-life HI.
pub fn plan(hi: &TimeSeries, schedule: &PointSchedule, thresholds: &FailureThresholdSet) -> Result<(Vec<f64>, Vec<f64>)> {
    schedule.validate()?;
    let eols = truth_eols(hi, thresholds)?;
    let life = eols.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((eols, schedule.times(hi.t0(), life)))
}

/// Scores already-computed predictions; the caller may have produced them
/// in any order or in parallel.
pub fn assemble_evaluation(
    eols: Vec<f64>,
    predictions: Vec<PointPrediction>,
    thresholds: &FailureThresholdSet,
    cfg: &MetricConfig,
    last_n: usize,
) -> Result<Evaluation> {
    let records = score(thresholds, &eols, &predictions, cfg)?;
    let summary = summarize(&records, last_n);
    let life = eols.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Evaluation { life, eols, predictions, records, summary })
}

/// Runs `predictor` at every scheduled point, one after the other.
pub fn evaluate<P: RulPredictor + ?Sized>(
    hi: &TimeSeries,
    schedule: &PointSchedule,
    thresholds: &FailureThresholdSet,
    cfg: &MetricConfig,
    predictor: &P,
) -> Result<Evaluation> {
    let (eols, times) = plan(hi, schedule, thresholds)?;
    let predictions = times
        .iter()
        .map(|&t| {
            let point = PrognosticsPoint::from_hi(hi, t)?;
            Ok(PointPrediction { t: point.t_now, rul: predictor.predict(&point, thresholds)? })
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_evaluation(eols, predictions, thresholds, cfg, 3)
}
