use prognos::io::{
    parse_series_csv, read_rows_csv, read_series_csv, write_imfs_csv, write_json, write_rows_csv, write_series_csv,
    EvaluationRow, SpectrumExport, SymbolicModelExport,
};
use prognos::CliError;
use prognos_core::abba::{compress, digitize, DigitizeConfig, SymbolicModel};
use prognos_core::emd::{decompose, Exhaustive, SiftConfig};
use prognos_core::gru::{forecast, GruNetwork};
use prognos_core::hilbert::build_spectrum;
use prognos_core::TimeSeries;
use std::path::Path;

fn tone_with_trend(n: usize) -> TimeSeries {
    let v = (0..n).map(|i| 0.01 * i as f64 + (i as f64 * 0.3).sin() + 0.3 * (i as f64 * 0.05).cos()).collect();
    TimeSeries::new(2.0, 0.25, v).unwrap()
}

#[test]
fn series_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.csv");
    let s = TimeSeries::new(10.0, 1.0 / 120.0, (0..500).map(|i| (i as f64).sqrt() / 7.0).collect()).unwrap();
    write_series_csv(&p, &s).unwrap();
    let back = read_series_csv(&p).unwrap();
    assert_eq!(back.values(), s.values());
    assert_eq!(back.t0(), s.t0());
    assert!((back.dt() - s.dt()).abs() <= 1e-12 * s.dt());
}

#[test]
fn irregular_timestamps_are_resampled() {
    let text = "time_h,value\n0,0\n0.9,0.9\n2.1,2.1\n3,3\n";
    let s = parse_series_csv(text.as_bytes(), Path::new("x.csv")).unwrap();
    assert_eq!(s.t0(), 0.0);
    for (t, v) in s.times().zip(s.values()) {
        assert!((t - v).abs() <= 1e-12);
    }
    // median spacing 0.9 h, grid stops at the last node inside the span
    assert!((s.dt() - 0.9).abs() <= 1e-12);
    assert_eq!(s.len(), 4);
}

#[test]
fn non_monotone_time_names_the_line() {
    let err = parse_series_csv("time_h,value\n0,1\n2,1\n1,1\n".as_bytes(), Path::new("x.csv")).unwrap_err();
    assert!(matches!(err, CliError::Parse { line: 4, .. }), "{err}");
    let err = parse_series_csv("time_h,value\n0,1\n1,inf\n".as_bytes(), Path::new("x.csv")).unwrap_err();
    assert!(matches!(err, CliError::Parse { line: 3, .. }), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn imf_table_columns_add_up() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("imfs.csv");
    let x = tone_with_trend(800);
    let set = decompose(&x, &SiftConfig::default(), &mut Exhaustive).unwrap();
    write_imfs_csv(&p, &set).unwrap();
    let mut rdr = csv::Reader::from_path(&p).unwrap();
    assert_eq!(rdr.headers().unwrap().len(), set.imfs.len() + 2);
    let mut n = 0;
    for (i, rec) in rdr.records().enumerate() {
        let row: Vec<f64> = rec.unwrap().iter().map(|v| v.parse().unwrap()).collect();
        assert_eq!(row[0], x.time(i));
        assert!((row[1..].iter().sum::<f64>() - x.values()[i]).abs() <= 1e-9);
        n += 1;
    }
    assert_eq!(n, x.len());
}

#[test]
fn spectrum_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("spectrum.json");
    let set = decompose(&tone_with_trend(800), &SiftConfig::default(), &mut Exhaustive).unwrap();
    let spec = build_spectrum(&set.imfs, 40).unwrap();
    let export = SpectrumExport::from(&spec);
    write_json(&p, &export).unwrap();
    let back: SpectrumExport = serde_json::from_slice(&std::fs::read(&p).unwrap()).unwrap();
    assert_eq!(back, export);
    assert_eq!(back.freqs.len(), 40);
    assert!(back.triplets.iter().all(|&(t, f, e)| t < back.times.len() && f < 40 && e > 0.0));
}

#[test]
fn symbolic_model_flat_form_round_trip() {
    let x = tone_with_trend(600);
    let c = compress(&x, 0.2).unwrap();
    let model = digitize(&c, 0.2, &DigitizeConfig::for_compression_tol(0.2, 3)).unwrap();
    let text = serde_json::to_string(&SymbolicModelExport::from(&model)).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["tolerance", "start_value", "scale_len", "scale_inc", "centers", "symbols"] {
        assert!(value.get(key).is_some(), "{key}");
    }
    let back: SymbolicModel = serde_json::from_str::<SymbolicModelExport>(&text).unwrap().into();
    assert_eq!(back, model);
}

#[test]
fn checkpoint_network_forecasts_identically() {
    let net = GruNetwork::new(4, &[6, 5], 3, 9).unwrap();
    let text = serde_json::to_string(&net).unwrap();
    let back: GruNetwork = serde_json::from_str(&text).unwrap();
    assert_eq!(back, net);
    let seed = [0, 1, 2, 3, 1];
    assert_eq!(forecast(&back, &seed, 10).unwrap(), forecast(&net, &seed, 10).unwrap());
}

#[test]
fn evaluation_rows_keep_missing_predictions_empty() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("evaluation.csv");
    let rows = vec![
        EvaluationRow { ft: 0.0, t: 500.0, rul_true: 400.0, rul_pred: Some(380.5), in_cr_ph: true, in_alpha_lambda: true, ra: Some(0.95125) },
        EvaluationRow { ft: 0.0, t: 600.0, rul_true: 300.0, rul_pred: None, in_cr_ph: false, in_alpha_lambda: false, ra: None },
    ];
    write_rows_csv(&p, &rows).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().next().unwrap(), "ft,t,rul_true,rul_pred,in_cr_ph,in_alpha_lambda,ra");
    assert_eq!(text.lines().nth(2).unwrap(), "0.0,600.0,300.0,,false,false,");
    assert_eq!(read_rows_csv::<EvaluationRow>(&p).unwrap(), rows);
}
