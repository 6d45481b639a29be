//! Uniformly sampled signals and full-life min-max normalization.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A real-valued signal on a uniform time grid.
///
/// Sample `i` sits at `t0 + i * dt` hours. The grid is implicit; only the
/// start and step are stored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::InvalidSeries(format!("start time {t0} is not finite")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidSeries(format!("sampling interval {dt} must be finite and > 0")));
        }
        if values.len() < 2 {
            return Err(Error::TooShort { needed: 2, got: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { t0, dt, values })
    }

    /// Builds a series from explicit, strictly increasing timestamps.
    ///
    /// Uniform input is taken as-is. Irregular input is linearly
    /// interpolated onto a grid whose step is the median sample spacing.
    pub fn from_samples(times: &[f64], values: &[f64]) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidSeries(format!(
                "{} timestamps but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::TooShort { needed: 2, got: times.len() });
        }
        if let Some(index) = times.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let mut gaps = Vec::with_capacity(times.len() - 1);
        for (i, w) in times.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::InvalidSeries(format!(
                    "time must be strictly increasing (sample {} at {} follows {})",
                    i + 1,
                    w[1],
                    w[0]
                )));
            }
            gaps.push(w[1] - w[0]);
        }
        let span = times[times.len() - 1] - times[0];
        let mean_dt = span / (times.len() - 1) as f64;
        let uniform = gaps.iter().all(|g| libm::fabs(g - mean_dt) <= 1e-9 * mean_dt.max(1.0));
        if uniform {
            return Self::new(times[0], mean_dt, values.to_vec());
        }

        let dt = crate::stats::median(&gaps).expect("at least one gap");
        let n = libm::floor(span / dt + 1e-9) as usize + 1;
        let mut resampled = Vec::with_capacity(n);
        let mut j = 0;
        for i in 0..n {
            let t = times[0] + i as f64 * dt;
            while j + 2 < times.len() && times[j + 1] < t {
                j += 1;
            }
            let (ta, tb) = (times[j], times[j + 1]);
            let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
            resampled.push(values[j] + w * (values[j + 1] - values[j]));
        }
        Self::new(times[0], dt, resampled)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: a valid series holds at least two samples.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.time(i))
    }

    /// Same grid, new samples.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} samples on this grid, got {}",
                self.len(),
                values.len()
            )));
        }
        Self::new(self.t0, self.dt, values)
    }

    pub fn same_grid(&self, other: &TimeSeries) -> bool {
        self.len() == other.len() && self.t0 == other.t0 && self.dt == other.dt
    }

    /// Samples with `time <= t_end` (to within half a step).
    pub fn truncate_at(&self, t_end: f64) -> Result<Self> {
        let k = libm::floor((t_end - self.t0) / self.dt + 0.5);
        if k < 1.0 {
            return Err(Error::TooShort { needed: 2, got: if k < 0.0 { 0 } else { 1 } });
        }
        let keep = (k as usize + 1).min(self.len());
        Self::new(self.t0, self.dt, self.values[..keep].to_vec())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

#[derive(Deserialize)]
struct RawSeries {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl<'de> Deserialize<'de> for TimeSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let raw = RawSeries::deserialize(d)?;
        TimeSeries::new(raw.t0, raw.dt, raw.values).map_err(serde::de::Error::custom)
    }
}

/// Constants of a min-max normalization, kept so it can be undone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub hi_min: f64,
    pub hi_max: f64,
}

impl NormalizationRecord {
    pub fn new(hi_min: f64, hi_max: f64) -> Result<Self> {
        if !(hi_min.is_finite() && hi_max.is_finite()) {
            return Err(Error::InvalidConfig(format!("normalization bounds ({hi_min}, {hi_max}) must be finite")));
        }
        if hi_max <= hi_min {
            return Err(Error::ConstantSeries);
        }
        Ok(Self { hi_min, hi_max })
    }

    pub fn normalize_value(&self, x: f64) -> f64 {
        (x - self.hi_min) / (self.hi_max - self.hi_min)
    }

    pub fn denormalize_value(&self, x: f64) -> f64 {
        self.hi_min + x * (self.hi_max - self.hi_min)
    }
}

/// Rescales the whole record onto `[0, 1]`: the minimum maps to 0 and the
/// maximum to 1.
pub fn normalize_full_life(series: &TimeSeries) -> Result<(TimeSeries, NormalizationRecord)> {
    let (lo, hi) = series.min_max();
    let record = NormalizationRecord::new(lo, hi)?;
    let values = series.values.iter().map(|&x| record.normalize_value(x)).collect();
    Ok((series.with_values(values)?, record))
}

pub fn denormalize(series: &TimeSeries, record: &NormalizationRecord) -> Result<TimeSeries> {
    let values = series.values.iter().map(|&x| record.denormalize_value(x)).collect();
    series.with_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn normalize_maps_endpoints() {
        let s = TimeSeries::new(0.0, 1.0, vec![2.0, 4.0, 6.0]).unwrap();
        let (n, rec) = normalize_full_life(&s).unwrap();
        assert_eq!(n.values(), &[0.0, 0.5, 1.0]);
        assert_eq!(rec, NormalizationRecord { hi_min: 2.0, hi_max: 6.0 });
        assert_eq!(denormalize(&n, &rec).unwrap().values(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn constant_series_rejected() {
        let s = TimeSeries::new(0.0, 1.0, vec![5.0, 5.0, 5.0]).unwrap();
        assert_eq!(normalize_full_life(&s).unwrap_err(), Error::ConstantSeries);
    }

    #[test]
    fn identity_record_is_identity() {
        let rec = NormalizationRecord::new(0.0, 1.0).unwrap();
        assert_eq!(rec.denormalize_value(0.0), 0.0);
        assert!(NormalizationRecord::new(1.0, 1.0).is_err());
    }

    #[test]
    fn invariants_enforced() {
        assert!(matches!(TimeSeries::new(0.0, 0.0, vec![1.0, 2.0]), Err(Error::InvalidSeries(_))));
        assert!(matches!(TimeSeries::new(0.0, 1.0, vec![1.0]), Err(Error::TooShort { .. })));
        assert_eq!(
            TimeSeries::new(0.0, 1.0, vec![1.0, f64::NAN]).unwrap_err(),
            Error::NonFinite { index: 1 }
        );
    }

    #[test]
    fn irregular_samples_are_resampled() {
        let s = TimeSeries::from_samples(&[0.0, 1.0, 3.0, 4.0], &[0.0, 1.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.dt(), 1.0);
        assert_eq!(s.len(), 5);
        for (t, v) in s.times().zip(s.values()) {
            assert!((t - v).abs() < 1e-12);
        }
        assert!(TimeSeries::from_samples(&[0.0, 1.0, 1.0], &[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn truncate_keeps_prefix() {
        let s = TimeSeries::new(10.0, 0.5, (0..10).map(|i| i as f64).collect()).unwrap();
        let h = s.truncate_at(12.0).unwrap();
        assert_eq!(h.len(), 5);
        assert_eq!(h.t_end(), 12.0);
    }
}
