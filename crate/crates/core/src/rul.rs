//! Remaining-useful-life estimation from an ensemble of symbolic GRU
//! forecasters.
//!
//! The history up to the prognostics point is converted to ABBA symbols once.
//! Each ensemble member trains its own network from a distinct seed, forecasts
//! symbols in closed loop, and turns them back into an HI trajectory anchored
//! at the last observed value. Crossing times of that trajectory with each
//! failure threshold give one RUL sample per member; the KDE mode of the
//! samples is the estimate.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::abba::{compress, digitize, extend_polyline, DigitizeConfig, LengthQuantizer, SegmentTuple, SymbolicModel};
use crate::gru::{train, Forecaster, GruNetwork, NetConfig, TrainConfig};
use crate::kde::kde_mode;
use crate::{Error, Result, TimeSeries};

/// Normalized HI observed up to `t_now`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrognosticsPoint {
    pub t_now: f64,
    pub history: TimeSeries,
}

impl PrognosticsPoint {
    /// Cuts `hi` at `t_now`, which must fall inside the observed span.
    pub fn from_hi(hi: &TimeSeries, t_now: f64) -> Result<Self> {
        if !t_now.is_finite() || t_now > hi.t_end() + 0.5 * hi.dt() {
            return Err(Error::InsufficientHistory(format!(
                "t_now {t_now} h is beyond the data end {} h",
                hi.t_end()
            )));
        }
        let history = hi
            .truncate_at(t_now)
            .map_err(|_| Error::InsufficientHistory(format!("no history before t_now {t_now} h")))?;
        Ok(Self { t_now: history.t_end(), history })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FailureThresholdSet {
    thresholds: Vec<f64>,
}

impl FailureThresholdSet {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::InvalidConfig("at least one failure threshold is required".into()));
        }
        if thresholds.iter().any(|t| !(0.0..1.0).contains(t)) {
            return Err(Error::InvalidConfig("failure thresholds must lie in [0, 1)".into()));
        }
        if thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("failure thresholds must be strictly increasing".into()));
        }
        Ok(Self { thresholds })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn lowest(&self) -> f64 {
        self.thresholds[0]
    }
}

impl Default for FailureThresholdSet {
    /// 0.00, 0.01, ..., 0.09
    fn default() -> Self {
        Self { thresholds: (0..10).map(|i| i as f64 / 100.0).collect() }
    }
}

impl TryFrom<Vec<f64>> for FailureThresholdSet {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FailureThresholdSet> for Vec<f64> {
    fn from(s: FailureThresholdSet) -> Self {
        s.thresholds
    }
}

/// First time the trajectory reaches `ft` or below, interpolated linearly
/// between the bracketing samples.
pub fn trajectory_to_eol(trajectory: &TimeSeries, ft: f64) -> Option<f64> {
    let v = trajectory.values();
    if v[0] <= ft {
        return Some(trajectory.t0());
    }
    let i = v.iter().position(|&x| x <= ft)?;
    let (a, b) = (v[i - 1], v[i]);
    let frac = (a - ft) / (a - b);
    Some(trajectory.time(i - 1) + frac * trajectory.dt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RulConfig {
    pub abba_tol: f64,
    pub digitize: DigitizeConfig,
    pub net: NetConfig,
    pub train: TrainConfig,
    pub n_models: usize,
    /// Forecast at most this many times the history length.
    pub horizon_factor: f64,
    /// Hard cap on forecast samples, applied on top of `horizon_factor`.
    pub max_forecast_samples: Option<usize>,
}

impl Default for RulConfig {
    fn default() -> Self {
        let abba_tol = 0.001;
        Self {
            abba_tol,
            digitize: DigitizeConfig::for_compression_tol(abba_tol, 0),
            net: NetConfig::default(),
            train: TrainConfig::default(),
            n_models: 20,
            horizon_factor: 3.0,
            max_forecast_samples: None,
        }
    }
}

impl RulConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_models == 0 {
            return Err(Error::InvalidConfig("n_models must be at least 1".into()));
        }
        if !(self.abba_tol > 0.0 && self.abba_tol.is_finite()) {
            return Err(Error::InvalidConfig("abba_tol must be positive".into()));
        }
        if !(self.horizon_factor > 0.0 && self.horizon_factor.is_finite()) {
            return Err(Error::InvalidConfig("horizon_factor must be positive".into()));
        }
        if self.net.hidden_sizes.is_empty() || self.net.hidden_sizes.contains(&0) {
            return Err(Error::InvalidConfig("hidden sizes must be positive".into()));
        }
        self.train.validate()
    }

    /// Seeds of the ensemble members, `1..=n_models`.
    pub fn member_seeds(&self) -> Vec<u64> {
        (1..=self.n_models as u64).collect()
    }
}

/// Symbolic form of one prognostics point, shared by all members.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreparedPoint {
    pub t_now: f64,
    pub dt: f64,
    pub history_len: usize,
    pub last_value: f64,
    pub model: SymbolicModel,
    /// Training window actually used, never more than the symbol count allows.
    pub window: usize,
    pub forecast_cap: usize,
}

pub fn prepare(point: &PrognosticsPoint, cfg: &RulConfig) -> Result<PreparedPoint> {
    cfg.validate()?;
    let h = &point.history;
    if h.len() < 3 {
        return Err(Error::InsufficientHistory(format!("{} samples before t_now", h.len())));
    }
    let compression = compress(h, cfg.abba_tol)?;
    let model = digitize(&compression, cfg.abba_tol, &cfg.digitize)?;
    let m = model.symbols.len();
    if m < 3 {
        return Err(Error::InsufficientHistory(format!("history compresses to only {m} segments")));
    }
    let window = cfg.train.window.min(m - 2);
    let by_factor = libm::ceil(cfg.horizon_factor * (h.len() - 1) as f64) as usize;
    let forecast_cap = cfg.max_forecast_samples.map_or(by_factor, |c| c.min(by_factor)).max(1);
    Ok(PreparedPoint {
        t_now: point.t_now,
        dt: h.dt(),
        history_len: h.len(),
        last_value: h.values()[h.len() - 1],
        model,
        window,
        forecast_cap,
    })
}

/// One trained member and what it predicted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberOutcome {
    pub seed: u64,
    pub epochs_run: usize,
    pub final_loss: f64,
    /// Mean training cross-entropy per epoch.
    pub loss_history: Vec<f64>,
    #[serde(skip)]
    pub network: GruNetwork,
    /// Forecast HI starting at `t_now` with the last observed value.
    pub trajectory: TimeSeries,
    /// Per failure threshold, the crossing time if the forecast reached it.
    pub eols: Vec<Option<f64>>,
}

/// Trains a member from `seed`, then forecasts until the trajectory reaches
/// the lowest threshold or the forecast cap.
pub fn run_member(prep: &PreparedPoint, thresholds: &FailureThresholdSet, cfg: &RulConfig, seed: u64) -> Result<MemberOutcome> {
    let symbols = &prep.model.symbols;
    let k = prep.model.codebook.alphabet_size();
    let mut net = GruNetwork::new(k, &cfg.net.hidden_sizes, prep.window, seed)?;
    let tcfg = TrainConfig { window: prep.window, ..cfg.train.clone() };
    let outcome = train(&mut net, symbols, &tcfg)?;

    let floor = thresholds.lowest();
    let mut values = Vec::with_capacity(prep.forecast_cap + 1);
    values.push(prep.last_value);
    let mut forecaster = Forecaster::new(&net, symbols)?;
    let mut quantizer = LengthQuantizer::default();
    while values.len() <= prep.forecast_cap && values[values.len() - 1] > floor {
        let s = forecaster.next_symbol()?;
        let (len, inc) = prep.model.codebook.center(s)?;
        let piece = SegmentTuple { len: quantizer.push(len), inc };
        extend_polyline(&mut values, &[piece]);
    }
    values.truncate(prep.forecast_cap + 1);
    let trajectory = TimeSeries::new(prep.t_now, prep.dt, values)?;
    let eols = thresholds.as_slice().iter().map(|&ft| trajectory_to_eol(&trajectory, ft)).collect();
    Ok(MemberOutcome {
        seed,
        epochs_run: outcome.epochs_run,
        final_loss: outcome.loss_history.last().copied().unwrap_or(f64::NAN),
        loss_history: outcome.loss_history,
        network: net,
        trajectory,
        eols,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RulEstimate {
    pub t_now: f64,
    pub ft: f64,
    /// RUL of every member that crossed `ft`, in member order.
    pub samples: Vec<f64>,
    pub excluded: usize,
    pub kde_grid: Vec<f64>,
    pub kde_pdf: Vec<f64>,
    pub bandwidth: f64,
    pub rul_mode: f64,
    pub eol_mode: f64,
}

/// Pools member crossings for threshold number `index`. Members that never
/// crossed are left out; more than half missing is an error.
pub fn assemble(t_now: f64, ft: f64, index: usize, members: &[MemberOutcome]) -> Result<RulEstimate> {
    let total = members.len();
    let samples: Vec<f64> = members.iter().filter_map(|m| m.eols[index]).map(|eol| (eol - t_now).max(0.0)).collect();
    let excluded = total - samples.len();
    if samples.is_empty() || 2 * excluded > total {
        return Err(Error::AllModelsNonCrossing { excluded, total });
    }
    let kde = kde_mode(&samples)?;
    Ok(RulEstimate {
        t_now,
        ft,
        samples,
        excluded,
        bandwidth: kde.bandwidth,
        rul_mode: kde.mode,
        eol_mode: t_now + kde.mode,
        kde_grid: kde.grid,
        kde_pdf: kde.pdf,
    })
}

/// Per-threshold estimates; a threshold the ensemble failed to reach gets
/// its own error without affecting the others.
pub fn assemble_all(t_now: f64, thresholds: &FailureThresholdSet, members: &[MemberOutcome]) -> Vec<Result<RulEstimate>> {
    thresholds.as_slice().iter().enumerate().map(|(i, &ft)| assemble(t_now, ft, i, members)).collect()
}

/// Runs the whole ensemble sequentially.
pub fn predict_rul_multi(
    point: &PrognosticsPoint,
    thresholds: &FailureThresholdSet,
    cfg: &RulConfig,
) -> Result<Vec<Result<RulEstimate>>> {
    let prep = prepare(point, cfg)?;
    let members = cfg
        .member_seeds()
        .into_iter()
        .map(|seed| run_member(&prep, thresholds, cfg, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_all(point.t_now, thresholds, &members))
}

pub fn predict_rul(point: &PrognosticsPoint, ft: f64, cfg: &RulConfig) -> Result<RulEstimate> {
    let set = FailureThresholdSet::new(alloc::vec![ft])?;
    predict_rul_multi(point, &set, cfg)?.remove(0)
}
