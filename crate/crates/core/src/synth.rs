//! Synthetic dynamic-load fuel-cell voltage with a known degradation trend.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, TimeSeries, SECONDS_PER_HOUR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadStep {
    pub duration_s: f64,
    pub current_a: f64,
}

const fn step(duration_s: f64, current_a: f64) -> LoadStep {
    LoadStep { duration_s, current_a }
}

const FC1_STEPS: [LoadStep; 7] = [
    step(1060.0, 0.0),
    step(630.0, 8.0),
    step(710.0, 0.0),
    step(1910.0, 8.0),
    step(915.0, 0.0),
    step(2565.0, 8.0),
    step(1065.0, 0.0),
];

const FC2_URBAN: [LoadStep; 7] = [
    step(13.0, 4.45),
    step(33.0, 1.78),
    step(35.0, 9.51),
    step(47.0, 1.78),
    step(20.0, 14.85),
    step(25.0, 10.4),
    step(22.0, 1.78),
];

const FC2_SUBURBAN: [LoadStep; 7] = [
    step(46.0, 1.78),
    step(58.0, 20.75),
    step(82.0, 14.85),
    step(85.0, 20.75),
    step(50.0, 29.65),
    step(44.0, 35.6),
    step(36.0, 0.0),
];

/// Piecewise-constant current cycle, repeated indefinitely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub steps: Vec<LoadStep>,
}

impl LoadProfile {
    pub fn new(steps: Vec<LoadStep>) -> Result<Self> {
        let p = Self { steps };
        p.validate()?;
        Ok(p)
    }

    pub fn fc1() -> Self {
        Self { steps: FC1_STEPS.to_vec() }
    }

    /// Four urban blocks followed by one suburban block.
    pub fn fc2() -> Self {
        let mut steps = Vec::with_capacity(35);
        for _ in 0..4 {
            steps.extend_from_slice(&FC2_URBAN);
        }
        steps.extend_from_slice(&FC2_SUBURBAN);
        Self { steps }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::BadSpec("load profile has no steps".into()));
        }
        for (i, s) in self.steps.iter().enumerate() {
            if !(s.duration_s.is_finite() && s.duration_s > 0.0) {
                return Err(Error::BadSpec(format!("step {i}: duration must be positive")));
            }
            if !(s.current_a.is_finite() && s.current_a >= 0.0) {
                return Err(Error::BadSpec(format!("step {i}: current must be non-negative")));
            }
        }
        Ok(())
    }

    pub fn cycle_s(&self) -> f64 {
        self.steps.iter().map(|s| s.duration_s).sum()
    }

    pub fn mean_current(&self) -> f64 {
        self.steps.iter().map(|s| s.duration_s * s.current_a).sum::<f64>() / self.cycle_s()
    }

    /// Current at `t_s` seconds from the start of the first cycle.
    pub fn current_at(&self, t_s: f64) -> f64 {
        let mut phase = t_s.rem_euclid(self.cycle_s());
        for s in &self.steps {
            if phase < s.duration_s {
                return s.current_a;
            }
            phase -= s.duration_s;
        }
        self.steps[self.steps.len() - 1].current_a
    }
}

/// Shape of the injected degradation. Rates are fractions of `v0` per hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trend {
    Linear { rate: f64 },
    /// `rates[i]` applies from `breaks_h[i - 1]` (or 0) up to `breaks_h[i]`;
    /// the last rate continues indefinitely.
    PiecewiseLinear { breaks_h: Vec<f64>, rates: Vec<f64> },
    Exponential { rate: f64 },
}

impl Trend {
    /// Fraction of `v0` remaining at `t_h`.
    pub fn factor(&self, t_h: f64) -> f64 {
        match self {
            Trend::Linear { rate } => 1.0 - rate * t_h,
            Trend::Exponential { rate } => libm::exp(-rate * t_h),
            Trend::PiecewiseLinear { breaks_h, rates } => {
                let mut f = 1.0;
                let mut from = 0.0;
                for (i, r) in rates.iter().enumerate() {
                    let to = breaks_h.get(i).copied().unwrap_or(f64::INFINITY);
                    if t_h <= to {
                        return f - r * (t_h - from);
                    }
                    f -= r * (to - from);
                    from = to;
                }
                f
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let rate_ok = |r: &f64| r.is_finite() && *r >= 0.0;
        match self {
            Trend::Linear { rate } | Trend::Exponential { rate } if !rate_ok(rate) => {
                Err(Error::BadSpec("trend rate must be finite and non-negative".into()))
            }
            Trend::PiecewiseLinear { breaks_h, rates } => {
                if rates.len() != breaks_h.len() + 1 {
                    return Err(Error::BadSpec("piecewise trend needs one more rate than breakpoints".into()));
                }
                if !rates.iter().all(rate_ok) {
                    return Err(Error::BadSpec("trend rates must be finite and non-negative".into()));
                }
                let mut prev = 0.0;
                for b in breaks_h {
                    if !(b.is_finite() && *b > prev) {
                        return Err(Error::BadSpec("breakpoints must be positive and increasing".into()));
                    }
                    prev = *b;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradationSpec {
    pub v0: f64,
    pub trend: Trend,
    /// fraction of `v0`
    pub noise_std: f64,
    /// voltage drop per ampere, as a fraction of `v0`
    pub load_sensitivity: f64,
    pub seed: u64,
}

impl Default for DegradationSpec {
    fn default() -> Self {
        Self {
            v0: 12.0,
            trend: Trend::Linear { rate: 1.2e-4 },
            noise_std: 0.002,
            load_sensitivity: 0.025,
            seed: 42,
        }
    }
}

impl DegradationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.v0.is_finite() && self.v0 > 0.0) {
            return Err(Error::BadSpec("v0 must be positive".into()));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::BadSpec("noise_std must be non-negative".into()));
        }
        if !(self.load_sensitivity.is_finite() && self.load_sensitivity >= 0.0) {
            return Err(Error::BadSpec("load_sensitivity must be non-negative".into()));
        }
        self.trend.validate()
    }
}

/// Affine stack temperature as a function of load current, in degrees C.
pub fn fc1_temperature(current_a: f64) -> f64 {
    2.5074 * current_a + 30.3585
}

/// All channels share one grid in hours starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOutput {
    pub voltage: TimeSeries,
    pub current: TimeSeries,
    pub temperature: TimeSeries,
    pub true_trend: TimeSeries,
}

pub fn generate(profile: &LoadProfile, spec: &DegradationSpec, total_hours: f64, dt_s: f64) -> Result<SynthOutput> {
    profile.validate()?;
    spec.validate()?;
    if !(dt_s.is_finite() && dt_s > 0.0) {
        return Err(Error::BadSpec("dt must be positive".into()));
    }
    if !(total_hours.is_finite() && total_hours * SECONDS_PER_HOUR > profile.cycle_s()) {
        return Err(Error::BadSpec("total duration must exceed one load cycle".into()));
    }
    let n = libm::floor(total_hours * SECONDS_PER_HOUR / dt_s + 1e-9) as usize + 1;
    let dt_h = dt_s / SECONDS_PER_HOUR;
    let noise = Normal::new(0.0, spec.noise_std * spec.v0).map_err(|e| Error::BadSpec(format!("{e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let beta = spec.load_sensitivity * spec.v0;

    let mut voltage = vec![0.0; n];
    let mut current = vec![0.0; n];
    let mut temperature = vec![0.0; n];
    let mut trend = vec![0.0; n];
    for i in 0..n {
        let t_s = i as f64 * dt_s;
        let amps = profile.current_at(t_s);
        let v_trend = spec.v0 * spec.trend.factor(i as f64 * dt_h);
        let eps = if spec.noise_std > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        current[i] = amps;
        temperature[i] = fc1_temperature(amps);
        trend[i] = v_trend;
        voltage[i] = v_trend - beta * amps + eps;
    }
    Ok(SynthOutput {
        voltage: TimeSeries::new(0.0, dt_h, voltage)?,
        current: TimeSeries::new(0.0, dt_h, current)?,
        temperature: TimeSeries::new(0.0, dt_h, temperature)?,
        true_trend: TimeSeries::new(0.0, dt_h, trend)?,
    })
}
