//! The five pipeline stages, each reading and writing files under one
//! output directory.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use log::info;
use prognos_core::emd::{decompose, Exhaustive};
use prognos_core::evaluation::{assemble_evaluation, plan, Evaluation, PointPrediction, RulPredictor};
use prognos_core::hi::extract_hi;
use prognos_core::hilbert::{build_spectrum, FrequencyUnit};
use prognos_core::rul::{assemble_all, prepare, run_member, MemberOutcome, PrognosticsPoint, RulEstimate};
use prognos_core::synth::generate;
use prognos_core::timeseries::normalize_full_life;
use prognos_core::{NormalizationRecord, TimeSeries};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::io::{self, EvaluationRow, ImfMetadata, SpectrumExport, SymbolicModelExport};

/// Resolved configuration plus where and how wide to run.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub cfg: PipelineConfig,
    pub out: PathBuf,
    /// Worker threads for ensemble training; 0 lets rayon decide.
    pub jobs: usize,
}

impl RunContext {
    pub fn new(cfg: PipelineConfig, out: impl Into<PathBuf>, jobs: usize) -> Result<Self, CliError> {
        let out = out.into();
        std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
        Ok(Self { cfg: cfg.resolve()?, out, jobs })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))
    }

    /// Wall-clock facts go here, never into the reports themselves.
    fn write_meta(&self, command: &str, started: SystemTime, clock: Instant) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Meta<'a> {
            command: &'a str,
            version: &'a str,
            started_unix_s: f64,
            elapsed_s: f64,
            jobs: usize,
        }
        let meta = Meta {
            command,
            version: env!("CARGO_PKG_VERSION"),
            started_unix_s: started.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64()),
            elapsed_s: clock.elapsed().as_secs_f64(),
            jobs: self.jobs,
        };
        io::write_json(&self.path(&format!("{command}.meta.json")), &meta)
    }

    fn timed<T>(&self, command: &str, f: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
        let started = SystemTime::now();
        let clock = Instant::now();
        let value = f()?;
        self.write_meta(command, started, clock)?;
        Ok(value)
    }
}

#[derive(Serialize)]
struct SynthReport<'a> {
    config: &'a PipelineConfig,
    samples: usize,
    dt_h: f64,
    mean_current: f64,
    cycle_s: f64,
}

/// Writes voltage, current, temperature and the injected trend.
pub fn synth(ctx: &RunContext) -> Result<(), CliError> {
    ctx.timed("synth", || {
        let cfg = &ctx.cfg;
        let profile = cfg.synth.profile.profile();
        let data = generate(&profile, &cfg.degradation(), cfg.synth.total_hours, cfg.synth.dt_s)?;
        io::write_series_csv(&ctx.path("voltage.csv"), &data.voltage)?;
        io::write_series_csv(&ctx.path("current.csv"), &data.current)?;
        io::write_series_csv(&ctx.path("temperature.csv"), &data.temperature)?;
        io::write_series_csv(&ctx.path("true_trend.csv"), &data.true_trend)?;
        let report = SynthReport {
            config: cfg,
            samples: data.voltage.len(),
            dt_h: data.voltage.dt(),
            mean_current: profile.mean_current(),
            cycle_s: profile.cycle_s(),
        };
        io::write_json(&ctx.path("synth_report.json"), &report)?;
        info!("synth: {} samples to {}", report.samples, ctx.out.display());
        Ok(())
    })
}

#[derive(Serialize)]
struct DecomposeReport<'a> {
    config: &'a PipelineConfig,
    #[serde(flatten)]
    imfs: ImfMetadata,
}

/// Full EMD of a series plus its Hilbert spectrum.
pub fn decompose_file(ctx: &RunContext, input: &Path) -> Result<(), CliError> {
    ctx.timed("decompose", || {
        let series = io::read_series_csv(input)?;
        let set = decompose(&series, &ctx.cfg.hi.sift, &mut Exhaustive)?;
        io::write_imfs_csv(&ctx.path("imfs.csv"), &set)?;
        let spectrum = if set.imfs.is_empty() {
            io::write_json(&ctx.path("spectrum.json"), &SpectrumExport::empty(series.times().collect()))?;
            None
        } else {
            let spec = build_spectrum(&set.imfs, ctx.cfg.spectrum.bins)?;
            io::write_json(&ctx.path("spectrum.json"), &SpectrumExport::from(&spec))?;
            Some(spec)
        };
        if ctx.cfg.spectrum.dense {
            if let Some(spec) = &spectrum {
                io::write_dense_spectrum_csv(&ctx.path("spectrum_dense.csv"), spec)?;
            }
        }
        let report = DecomposeReport { config: &ctx.cfg, imfs: ImfMetadata::from(&set) };
        io::write_json(&ctx.path("decompose_report.json"), &report)?;
        info!("decompose: {} IMFs", set.imfs.len());
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractionSummary {
    pub imf_count: usize,
    pub if_summary: Vec<f64>,
    pub threshold: f64,
    pub unit: FrequencyUnit,
    pub threshold_met: bool,
    pub normalization: NormalizationRecord,
}

#[derive(Serialize)]
struct ExtractionReport<'a> {
    config: &'a PipelineConfig,
    #[serde(flatten)]
    summary: &'a ExtractionSummary,
}

/// HI extraction and full-life normalization. Writes `hi.csv` (normalized)
/// and `hi_raw.csv` (volts).
pub fn extract(ctx: &RunContext, input: &Path) -> Result<(TimeSeries, ExtractionSummary), CliError> {
    ctx.timed("extract", || {
        let voltage = io::read_series_csv(input)?;
        let res = extract_hi(&voltage, &ctx.cfg.hi)?;
        let (hi, normalization) = normalize_full_life(&res.hi)?;
        io::write_series_csv(&ctx.path("hi_raw.csv"), &res.hi)?;
        io::write_series_csv(&ctx.path("hi.csv"), &hi)?;
        let summary = ExtractionSummary {
            imf_count: res.imf_count,
            if_summary: res.if_summary,
            threshold: res.threshold,
            unit: res.unit,
            threshold_met: res.threshold_met,
            normalization,
        };
        io::write_json(&ctx.path("extraction_report.json"), &ExtractionReport { config: &ctx.cfg, summary: &summary })?;
        info!("extract: {} IMFs removed, threshold met: {}", summary.imf_count, summary.threshold_met);
        Ok((hi, summary))
    })
}

/// Outcome at one threshold: an estimate or the reason there is none.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ThresholdResult {
    Estimate(RulEstimate),
    Failed { ft: f64, error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberSummary {
    pub seed: u64,
    pub epochs_run: usize,
    pub final_loss: f64,
    pub eols: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct RulReport<'a> {
    config: &'a PipelineConfig,
    t_now: f64,
    history_len: usize,
    window: usize,
    alphabet_size: usize,
    segments: usize,
    forecast_cap: usize,
    symbolic_model: SymbolicModelExport,
    members: Vec<MemberSummary>,
    thresholds: &'a [ThresholdResult],
}

#[derive(Serialize)]
struct Checkpoint<'a> {
    config: &'a PipelineConfig,
    seed: u64,
    network: &'a prognos_core::gru::GruNetwork,
}

/// Trains every member on its own worker; results come back in seed order.
fn train_members(
    ctx: &RunContext,
    jobs: &[(usize, u64)],
    preps: &[prognos_core::rul::PreparedPoint],
) -> Result<Vec<MemberOutcome>, CliError> {
    let cfg = &ctx.cfg;
    let run = || {
        jobs.par_iter()
            .map(|&(p, seed)| run_member(&preps[p], &cfg.thresholds, &cfg.rul, seed))
            .collect::<prognos_core::Result<Vec<_>>>()
    };
    Ok(ctx.pool()?.install(run)?)
}

/// RUL at `t_now` for every configured threshold.
pub fn predict(ctx: &RunContext, hi_path: &Path, t_now: f64) -> Result<Vec<ThresholdResult>, CliError> {
    ctx.timed("predict", || {
        let cfg = &ctx.cfg;
        let hi = io::read_series_csv(hi_path)?;
        let point = PrognosticsPoint::from_hi(&hi, t_now)?;
        let prep = prepare(&point, &cfg.rul)?;
        let jobs: Vec<(usize, u64)> = cfg.rul.member_seeds().into_iter().map(|s| (0, s)).collect();
        let members = train_members(ctx, &jobs, std::slice::from_ref(&prep))?;

        let mut first_error = None;
        let results: Vec<ThresholdResult> = assemble_all(point.t_now, &cfg.thresholds, &members)
            .into_iter()
            .zip(cfg.thresholds.as_slice())
            .map(|(r, &ft)| match r {
                Ok(est) => ThresholdResult::Estimate(est),
                Err(e) => {
                    let error = e.to_string();
                    first_error.get_or_insert(e);
                    ThresholdResult::Failed { ft, error }
                }
            })
            .collect();

        if cfg.output.save_models {
            let dir = ctx.path("models");
            std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
            for m in &members {
                let ck = Checkpoint { config: cfg, seed: m.seed, network: &m.network };
                io::write_json(&dir.join(format!("member_{:02}.json", m.seed)), &ck)?;
                io::write_loss_csv(&dir.join(format!("loss_{:02}.csv", m.seed)), &m.loss_history)?;
            }
        }
        write_trajectories(&ctx.path("forecasts.csv"), &members)?;

        let report = RulReport {
            config: cfg,
            t_now: point.t_now,
            history_len: prep.history_len,
            window: prep.window,
            alphabet_size: prep.model.codebook.alphabet_size(),
            segments: prep.model.symbols.len(),
            forecast_cap: prep.forecast_cap,
            symbolic_model: SymbolicModelExport::from(&prep.model),
            members: members
                .iter()
                .map(|m| MemberSummary { seed: m.seed, epochs_run: m.epochs_run, final_loss: m.final_loss, eols: m.eols.clone() })
                .collect(),
            thresholds: &results,
        };
        io::write_json(&ctx.path("rul_report.json"), &report)?;

        match first_error {
            Some(e) if results.iter().all(|r| matches!(r, ThresholdResult::Failed { .. })) => Err(e.into()),
            _ => Ok(results),
        }
    })
}

/// Member forecasts in long form: `seed, time_h, value`.
fn write_trajectories(path: &Path, members: &[MemberOutcome]) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Row {
        seed: u64,
        time_h: f64,
        value: f64,
    }
    let rows: Vec<Row> = members
        .iter()
        .flat_map(|m| m.trajectory.times().zip(m.trajectory.values()).map(|(t, &v)| Row { seed: m.seed, time_h: t, value: v }))
        .collect();
    io::write_rows_csv(path, &rows)
}

#[derive(Serialize)]
struct SummaryReport<'a> {
    config: &'a PipelineConfig,
    life: f64,
    eols: &'a [f64],
    points: Vec<f64>,
    #[serde(flatten)]
    summary: &'a prognos_core::evaluation::Summary,
}

/// Number of final points averaged for the headline RA.
pub const LAST_POINTS: usize = 3;

fn write_evaluation(ctx: &RunContext, ev: &Evaluation) -> Result<(), CliError> {
    let rows: Vec<EvaluationRow> = ev
        .records
        .iter()
        .flat_map(|r| {
            r.entries.iter().map(move |e| EvaluationRow {
                ft: r.ft,
                t: e.t,
                rul_true: e.rul_true,
                rul_pred: e.rul_pred,
                in_cr_ph: e.in_cr_ph,
                in_alpha_lambda: e.in_alpha_lambda,
                ra: e.ra,
            })
        })
        .collect();
    io::write_rows_csv(&ctx.path("evaluation.csv"), &rows)?;
    let report = SummaryReport {
        config: &ctx.cfg,
        life: ev.life,
        eols: &ev.eols,
        points: ev.predictions.iter().map(|p| p.t).collect(),
        summary: &ev.summary,
    };
    io::write_json(&ctx.path("summary.json"), &report)
}

/// Sweeps the schedule with the ABBA-GRU ensemble. Every (point, member)
/// pair is an independent job.
pub fn evaluate(ctx: &RunContext, hi_path: &Path) -> Result<Evaluation, CliError> {
    ctx.timed("evaluate", || {
        let cfg = &ctx.cfg;
        let hi = io::read_series_csv(hi_path)?;
        let (eols, times) = plan(&hi, &cfg.schedule, &cfg.thresholds)?;
        let points = times.iter().map(|&t| PrognosticsPoint::from_hi(&hi, t)).collect::<prognos_core::Result<Vec<_>>>()?;
        let preps = points.iter().map(|p| prepare(p, &cfg.rul)).collect::<prognos_core::Result<Vec<_>>>()?;
        let seeds = cfg.rul.member_seeds();
        let jobs: Vec<(usize, u64)> = (0..points.len()).flat_map(|p| seeds.iter().map(move |&s| (p, s))).collect();
        let members = train_members(ctx, &jobs, &preps)?;

        let predictions = points
            .iter()
            .zip(members.chunks(seeds.len()))
            .map(|(point, ms)| PointPrediction {
                t: point.t_now,
                rul: assemble_all(point.t_now, &cfg.thresholds, ms).into_iter().map(|r| r.ok().map(|e| e.rul_mode)).collect(),
            })
            .collect();
        let ev = assemble_evaluation(eols, predictions, &cfg.thresholds, &cfg.metrics, LAST_POINTS)?;
        write_evaluation(ctx, &ev)?;
        info!("evaluate: alpha-lambda pass rate {:.3}", ev.summary.alpha_lambda_pass_rate);
        Ok(ev)
    })
}

/// Same sweep and outputs with any predictor, one worker per point.
pub fn evaluate_with<P: RulPredictor + Sync>(ctx: &RunContext, hi_path: &Path, predictor: &P) -> Result<Evaluation, CliError> {
    ctx.timed("evaluate", || {
        let cfg = &ctx.cfg;
        let hi = io::read_series_csv(hi_path)?;
        let (eols, times) = plan(&hi, &cfg.schedule, &cfg.thresholds)?;
        let run = || {
            times
                .par_iter()
                .map(|&t| {
                    let point = PrognosticsPoint::from_hi(&hi, t)?;
                    Ok(PointPrediction { t: point.t_now, rul: predictor.predict(&point, &cfg.thresholds)? })
                })
                .collect::<prognos_core::Result<Vec<_>>>()
        };
        let predictions = ctx.pool()?.install(run)?;
        let ev = assemble_evaluation(eols, predictions, &cfg.thresholds, &cfg.metrics, LAST_POINTS)?;
        write_evaluation(ctx, &ev)?;
        Ok(ev)
    })
}
