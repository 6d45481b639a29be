use prognos_core::abba::{
    chord_sse, compress, digitize, inverse_compress, inverse_digitize, Compression, DigitizeConfig, SegmentTuple,
};
use prognos_core::kmeans::{kmeans, Point};
use prognos_core::TimeSeries;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ts(v: Vec<f64>) -> TimeSeries {
    TimeSeries::new(0.0, 1.0, v).unwrap()
}

fn random_walk(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            x += rng.random_range(-1.0..1.0);
            x
        })
        .collect()
}

/// Deviation of every sample from the straight line joining the segment's
/// ends, recomputed from scratch.
fn segment_sse(x: &[f64], s: usize, e: usize) -> f64 {
    let mut sse = 0.0;
    for i in s..=e {
        let w = (i - s) as f64 / (e - s) as f64;
        let line = (1.0 - w) * x[s] + w * x[e];
        sse += (x[i] - line).powi(2);
    }
    sse
}

#[test]
fn deviation_bound_holds_on_random_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for k in 0..100 {
        let n = rng.random_range(20..400);
        let x = random_walk(&mut rng, n);
        let tol = rng.random_range(0.05..2.0);
        let c = compress(&ts(x.clone()), tol).unwrap();
        let mut s = 0;
        for t in &c.tuples {
            let e = s + t.len;
            let sse = segment_sse(&x, s, e);
            assert!(sse <= t.len as f64 * tol * tol, "series {k} segment {s}..{e}: {sse}");
            assert!((chord_sse(&x, s, e) - sse).abs() <= 1e-9 * (1.0 + sse));
            assert!((t.inc - (x[e] - x[s])).abs() == 0.0);
            s = e;
        }
        assert_eq!(s, n - 1);
    }
}

#[test]
fn sine_deviation_bound() {
    let x: Vec<f64> = (0..200).map(|i| (i as f64 * 0.1).sin()).collect();
    let c = compress(&ts(x.clone()), 0.1).unwrap();
    let mut s = 0;
    for t in &c.tuples {
        assert!(segment_sse(&x, s, s + t.len) <= t.len as f64 * 0.01);
        s += t.len;
    }
}

#[test]
fn breakpoints_survive_inverse_compression() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let x = random_walk(&mut rng, 300);
        let c = compress(&ts(x.clone()), 0.5).unwrap();
        let y = inverse_compress(&c.tuples, c.start_value, 0.0, 1.0).unwrap();
        assert_eq!(y.len(), x.len());
        let mut s = 0;
        assert!((y.values()[0] - x[0]).abs() <= 1e-12);
        for t in &c.tuples {
            s += t.len;
            assert!((y.values()[s] - x[s]).abs() <= 1e-12 * (1.0 + x[s].abs()), "breakpoint {s}");
        }
    }
}

#[test]
fn single_segment_polyline() {
    let y = inverse_compress(&[SegmentTuple { len: 2, inc: 1.0 }], 0.0, 0.0, 1.0).unwrap();
    assert_eq!(y.values(), &[0.0, 0.5, 1.0]);
}

/// Exhaustive best split of the points into two non-empty groups.
fn best_two_partition(points: &[Point]) -> (f64, Vec<bool>) {
    let n = points.len();
    let mut best = (f64::INFINITY, vec![]);
    // fix point 0 in group A to skip mirrored partitions
    for mask in 0u32..(1 << (n - 1)) {
        let side: Vec<bool> = (0..n).map(|i| i > 0 && mask >> (i - 1) & 1 == 1).collect();
        if side.iter().all(|s| !s) {
            continue;
        }
        let mut wcss = 0.0;
        for g in [false, true] {
            let members: Vec<&Point> = points.iter().zip(&side).filter(|(_, s)| **s == g).map(|(p, _)| p).collect();
            let m = members.len() as f64;
            let cx = members.iter().map(|p| p[0]).sum::<f64>() / m;
            let cy = members.iter().map(|p| p[1]).sum::<f64>() / m;
            wcss += members.iter().map(|p| (p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sum::<f64>();
        }
        if wcss < best.0 {
            best = (wcss, side);
        }
    }
    best
}

#[test]
fn two_separated_groups_become_two_pure_runs() {
    let mut tuples = vec![SegmentTuple { len: 1, inc: 0.0 }; 10];
    tuples.extend(vec![SegmentTuple { len: 10, inc: 5.0 }; 10]);
    let c = Compression { tuples, start_value: 0.0 };
    let model = digitize(&c, 0.001, &DigitizeConfig::for_compression_tol(0.001, 3)).unwrap();
    assert_eq!(model.codebook.alphabet_size(), 2);
    assert_eq!(model.symbols, [vec![0; 10], vec![1; 10]].concat());

    let points: Vec<Point> = c.tuples.iter().map(|t| [t.len as f64, t.inc]).collect();
    let (wcss, side) = best_two_partition(&points);
    assert_eq!(wcss, 0.0);
    let labels: Vec<bool> = model.symbols.iter().map(|&s| s == 1).collect();
    assert_eq!(labels, side);
}

#[test]
fn kmeans_reaches_brute_force_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..10 {
        let points: Vec<Point> = (0..14)
            .map(|i| {
                let (cx, cy) = if i % 2 == 0 { (0.0, 0.0) } else { (2.5, 1.0) };
                [cx + rng.random_range(-1.0..1.0), cy + rng.random_range(-1.0..1.0)]
            })
            .collect();
        let (opt, side) = best_two_partition(&points);
        let mut krng = ChaCha8Rng::seed_from_u64(trial);
        let fit = kmeans(&points, 2, 20, &mut krng);
        assert!(fit.wcss <= opt * (1.0 + 1e-9), "trial {trial}: {} vs {opt}", fit.wcss);
        let same: Vec<bool> = fit.labels.iter().map(|&l| l != fit.labels[0]).collect();
        assert_eq!(same, side);
    }
}

#[test]
fn identical_tuples_make_one_symbol() {
    let c = Compression { tuples: vec![SegmentTuple { len: 4, inc: -0.5 }; 3], start_value: 1.0 };
    let model = digitize(&c, 0.001, &DigitizeConfig::default()).unwrap();
    assert_eq!(model.codebook.alphabet_size(), 1);
    let back = inverse_digitize(&model).unwrap();
    assert_eq!(back, c.tuples);
}

#[test]
fn digitize_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let x = random_walk(&mut rng, 2000);
    let c = compress(&ts(x), 0.3).unwrap();
    let cfg = DigitizeConfig::for_compression_tol(0.3, 11);
    let a = digitize(&c, 0.3, &cfg).unwrap();
    let b = digitize(&c, 0.3, &cfg).unwrap();
    assert_eq!(a, b);
    let k = a.codebook.alphabet_size();
    let mut seen = vec![false; k];
    for &s in &a.symbols {
        assert!(s < k);
        seen[s] = true;
    }
    assert!(seen.iter().all(|s| *s));
}

/// Worst per-sample round-trip error relative to the series range.
fn round_trip_error(x: &[f64], tol: f64, seed: u64) -> f64 {
    let c = compress(&ts(x.to_vec()), tol).unwrap();
    let model = digitize(&c, tol, &DigitizeConfig::for_compression_tol(tol, seed)).unwrap();
    let tuples = inverse_digitize(&model).unwrap();
    let y = inverse_compress(&tuples, model.start_value, 0.0, 1.0).unwrap();
    let range = x.iter().copied().fold(f64::NEG_INFINITY, f64::max) - x.iter().copied().fold(f64::INFINITY, f64::min);
    let m = y.len().min(x.len());
    (0..m).map(|i| (y.values()[i] - x[i]).abs()).fold(0.0, f64::max) / range
}

#[test]
fn round_trip_tracks_smooth_series() {
    // worst case seen over these shapes and seeds is about 0.13 of the range
    for n in [300usize, 600, 1200, 2400] {
        for shape in 0..3 {
            let x: Vec<f64> = (0..n)
                .map(|i| {
                    let t = i as f64 / n as f64;
                    match shape {
                        0 => 1.0 - t,
                        1 => 1.0 - 0.6 * t - 0.2 * t * t + 0.05 * (12.0 * t).sin(),
                        _ => (-2.0 * t).exp() + 0.1 * (30.0 * t).sin(),
                    }
                })
                .collect();
            for seed in 0..5 {
                let err = round_trip_error(&x, 0.001, seed);
                assert!(err <= 0.15, "n {n} shape {shape} seed {seed}: {err}");
            }
        }
    }
}

proptest! {
    #[test]
    fn lengths_add_up(v in proptest::collection::vec(-10.0f64..10.0, 2..200), tol in 0.01f64..3.0) {
        let c = compress(&ts(v.clone()), tol).unwrap();
        prop_assert_eq!(c.tuples.iter().map(|t| t.len).sum::<usize>(), v.len() - 1);
        prop_assert!(c.tuples.iter().all(|t| t.len >= 1));
    }
}

