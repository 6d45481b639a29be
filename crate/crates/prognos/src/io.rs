//! CSV and JSON formats read and written by the CLI.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use prognos_core::abba::SymbolicModel;
use prognos_core::emd::ImfSet;
use prognos_core::hilbert::HilbertSpectrum;
use prognos_core::TimeSeries;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SERIES_HEADER: [&str; 2] = ["time_h", "value"];

/// Parses a two-column `time_h,value` CSV. Irregular timestamps are
/// interpolated onto a uniform grid.
pub fn parse_series_csv<R: Read>(reader: R, path: &Path) -> Result<TimeSeries, CliError> {
    let err = |line: u64, message: String| CliError::Parse { path: path.to_path_buf(), line, message };
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(err(1, "empty file; expected header `time_h,value`".into())),
        Some(r) => r.map_err(|e| err(1, e.to_string()))?,
    };
    if header.iter().collect::<Vec<_>>() != SERIES_HEADER {
        return Err(err(1, format!("expected header `time_h,value`, found `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut lines = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(err(line, format!("expected 2 fields, found {}", rec.len())));
        }
        let num = |i: usize, name: &str| -> Result<f64, CliError> {
            let v: f64 = rec[i].parse().map_err(|_| err(line, format!("{name} `{}` is not a number", &rec[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(line, format!("{name} `{}` is not finite", &rec[i])))
            }
        };
        times.push(num(0, "time_h")?);
        values.push(num(1, "value")?);
        lines.push(line);
    }
    if times.len() < 2 {
        return Err(err(lines.last().copied().unwrap_or(1), format!("need at least 2 samples, found {}", times.len())));
    }
    if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(err(lines[i + 1], "time_h must be strictly increasing".into()));
    }
    TimeSeries::from_samples(&times, &values).map_err(|e| err(lines[0], e.to_string()))
}

pub fn read_series_csv(path: &Path) -> Result<TimeSeries, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_series_csv(file, path)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn finish(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<(), CliError> {
    let mut inner = w.into_inner().map_err(|e| CliError::io(path, std::io::Error::other(e.to_string())))?;
    inner.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_series_csv(path: &Path, series: &TimeSeries) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(SERIES_HEADER).map_err(|e| csv_err(path, e))?;
    for (t, v) in series.times().zip(series.values()) {
        w.write_record([t.to_string(), v.to_string()]).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| CliError::io(path, e.into()))?;
    f.write_all(b"\n").and_then(|_| f.flush()).map_err(|e| CliError::io(path, e))
}

/// `time_h, imf_1 .. imf_n, residual`.
pub fn write_imfs_csv(path: &Path, set: &ImfSet) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["time_h".to_string()];
    header.extend((1..=set.imfs.len()).map(|i| format!("imf_{i}")));
    header.push("residual".into());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (i, t) in set.residual.times().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(set.imfs.iter().map(|c| c.values()[i].to_string()));
        row.push(set.residual.values()[i].to_string());
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImfMetadata {
    pub imf_count: usize,
    pub samples: usize,
    pub sift_iterations: Vec<usize>,
    pub converged: Vec<bool>,
}

impl From<&ImfSet> for ImfMetadata {
    fn from(set: &ImfSet) -> Self {
        Self {
            imf_count: set.imfs.len(),
            samples: set.source_len,
            sift_iterations: set.sift_iterations.clone(),
            converged: set.converged.clone(),
        }
    }
}

/// Sparse spectrum: bin centres in Hz and `[t_idx, f_idx, energy]` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumExport {
    pub times: Vec<f64>,
    pub freqs: Vec<f64>,
    pub triplets: Vec<(usize, usize, f64)>,
}

impl SpectrumExport {
    pub fn empty(times: Vec<f64>) -> Self {
        Self { times, freqs: vec![], triplets: vec![] }
    }
}

impl From<&HilbertSpectrum> for SpectrumExport {
    fn from(s: &HilbertSpectrum) -> Self {
        Self { times: s.times.clone(), freqs: s.freqs.clone(), triplets: s.triplets.clone() }
    }
}

/// One row per time sample, one column per frequency bin.
pub fn write_dense_spectrum_csv(path: &Path, spec: &HilbertSpectrum) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["time_h".to_string()];
    header.extend(spec.freqs.iter().map(|f| format!("{f}")));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (t, row) in spec.times.iter().zip(spec.dense()) {
        let mut rec = vec![t.to_string()];
        rec.extend(row.iter().map(|e| e.to_string()));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Flat symbolic-model layout with the codebook fields inlined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicModelExport {
    pub tolerance: f64,
    pub start_value: f64,
    pub scale_len: f64,
    pub scale_inc: f64,
    pub centers: Vec<[f64; 2]>,
    pub symbols: Vec<usize>,
}

impl From<&SymbolicModel> for SymbolicModelExport {
    fn from(m: &SymbolicModel) -> Self {
        Self {
            tolerance: m.tolerance,
            start_value: m.start_value,
            scale_len: m.codebook.scale_len,
            scale_inc: m.codebook.scale_inc,
            centers: m.codebook.centers.clone(),
            symbols: m.symbols.clone(),
        }
    }
}

impl From<SymbolicModelExport> for SymbolicModel {
    fn from(e: SymbolicModelExport) -> Self {
        SymbolicModel {
            symbols: e.symbols,
            codebook: prognos_core::abba::Codebook { centers: e.centers, scale_len: e.scale_len, scale_inc: e.scale_inc },
            start_value: e.start_value,
            tolerance: e.tolerance,
        }
    }
}

pub fn write_loss_csv(path: &Path, losses: &[f64]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(["epoch", "loss"]).map_err(|e| csv_err(path, e))?;
    for (i, l) in losses.iter().enumerate() {
        w.write_record([(i + 1).to_string(), l.to_string()]).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// One row of the evaluation matrix. Missing predictions are empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub ft: f64,
    pub t: f64,
    pub rul_true: f64,
    pub rul_pred: Option<f64>,
    pub in_cr_ph: bool,
    pub in_alpha_lambda: bool,
    pub ra: Option<f64>,
}

pub fn write_rows_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

pub fn read_rows_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    rdr.deserialize()
        .map(|r| {
            r.map_err(|e| CliError::Parse {
                path: path.to_path_buf(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })
        })
        .collect()
}
