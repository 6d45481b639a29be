use std::f64::consts::PI;

use prognos_core::emd::{
    decompose, find_extrema, mean_envelope, satisfies_extrema_criterion, sift_one_imf, Exhaustive, SiftConfig,
};
use prognos_core::fft::fft;
use prognos_core::stats::{l2, relative_l2};
use prognos_core::TimeSeries;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn ts(values: Vec<f64>) -> TimeSeries {
    TimeSeries::new(0.0, 1.0, values).unwrap()
}

fn random_signal(rng: &mut ChaCha8Rng) -> TimeSeries {
    let n = rng.random_range(400..1500);
    let tones = rng.random_range(1..4);
    let params: Vec<(f64, f64, f64)> = (0..tones)
        .map(|_| (rng.random_range(0.1..2.0), rng.random_range(0.002..0.2), rng.random_range(0.0..2.0 * PI)))
        .collect();
    let slope = rng.random_range(-0.01..0.01);
    let offset = rng.random_range(-5.0..5.0);
    let noise = Normal::new(0.0, rng.random_range(0.0..0.2)).unwrap();
    let v = (0..n)
        .map(|i| {
            let t = i as f64;
            let s: f64 = params.iter().map(|(a, f, p)| a * (2.0 * PI * f * t + p).sin()).sum();
            s + offset + slope * t + noise.sample(rng)
        })
        .collect();
    ts(v)
}

#[test]
fn decomposition_is_complete_and_imfs_qualify() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = SiftConfig::default();
    for k in 0..50 {
        let x = random_signal(&mut rng);
        let set = decompose(&x, &cfg, &mut Exhaustive).unwrap();
        let err = relative_l2(&set.reconstruct(), x.values());
        assert!(err <= 1e-8, "signal {k}: completeness error {err:e}");
        for (j, imf) in set.imfs.iter().enumerate() {
            assert!(satisfies_extrema_criterion(imf.values()), "signal {k} imf {j}");
            assert!(imf.same_grid(&x));
        }
    }
}

#[test]
fn decomposition_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random_signal(&mut rng);
    let a = decompose(&x, &SiftConfig::default(), &mut Exhaustive).unwrap();
    let b = decompose(&x, &SiftConfig::default(), &mut Exhaustive).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sine_extrema_match_dense_scan() {
    let x = ts((0..=100).map(|i| (2.0 * PI * i as f64 / 100.0).sin()).collect());
    let e = find_extrema(&x).unwrap();
    // brute force over a 100x finer analytic grid
    let dense: Vec<f64> = (0..=10_000).map(|i| (2.0 * PI * i as f64 / 10_000.0).sin()).collect();
    let argmax = dense.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0 as f64 / 100.0;
    let argmin = dense.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0 as f64 / 100.0;
    assert_eq!(e.maxima.len(), 1);
    assert_eq!(e.minima.len(), 1);
    assert!((e.maxima[0].0 as f64 - argmax).abs() <= 1.0);
    assert!((e.minima[0].0 as f64 - argmin).abs() <= 1.0);
}

#[test]
fn sine_mean_envelope_is_flat() {
    let per = 50.0;
    let n = 500;
    for offset in [0.0, 3.5] {
        let x = ts((0..n).map(|i| 2.0 * (2.0 * PI * i as f64 / per).sin() + offset).collect());
        let m = mean_envelope(&x).unwrap();
        let edge = 2 * per as usize;
        let worst = m.values()[edge..n - edge].iter().map(|v| (v - offset).abs()).fold(0.0, f64::max);
        assert!(worst <= 0.05 * 2.0, "offset {offset}: {worst}");
    }
}

/// Natural cubic spline in the textbook tridiagonal formulation (solve for
/// c_j, then b_j and d_j), evaluated at integer points.
fn textbook_spline(xs: &[f64], ys: &[f64], at: &[f64]) -> Vec<f64> {
    let n = xs.len() - 1;
    let h: Vec<f64> = (0..n).map(|i| xs[i + 1] - xs[i]).collect();
    let mut alpha = vec![0.0; n + 1];
    for i in 1..n {
        alpha[i] = 3.0 / h[i] * (ys[i + 1] - ys[i]) - 3.0 / h[i - 1] * (ys[i] - ys[i - 1]);
    }
    let mut l = vec![1.0; n + 1];
    let mut mu = vec![0.0; n + 1];
    let mut z = vec![0.0; n + 1];
    for i in 1..n {
        l[i] = 2.0 * (xs[i + 1] - xs[i - 1]) - h[i - 1] * mu[i - 1];
        mu[i] = h[i] / l[i];
        z[i] = (alpha[i] - h[i - 1] * z[i - 1]) / l[i];
    }
    let mut c = vec![0.0; n + 1];
    let mut b = vec![0.0; n];
    let mut d = vec![0.0; n];
    for j in (0..n).rev() {
        c[j] = z[j] - mu[j] * c[j + 1];
        b[j] = (ys[j + 1] - ys[j]) / h[j] - h[j] * (c[j + 1] + 2.0 * c[j]) / 3.0;
        d[j] = (c[j + 1] - c[j]) / (3.0 * h[j]);
    }
    at.iter()
        .map(|&x| {
            let mut j = 0;
            while j + 1 < n && x > xs[j + 1] {
                j += 1;
            }
            let u = x - xs[j];
            ys[j] + b[j] * u + c[j] * u * u + d[j] * u * u * u
        })
        .collect()
}

#[test]
fn triangle_mean_envelope_matches_textbook_spline() {
    // 5 samples per half period, period 10; amplitude drifts so the envelope is not flat
    let n = 83;
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let p = i % 10;
            let tri = if p <= 5 { p as f64 } else { (10 - p) as f64 } - 2.5;
            tri * (1.0 + 0.01 * i as f64)
        })
        .collect();
    let series = ts(x.clone());
    let e = find_extrema(&series).unwrap();
    let last = (n - 1) as f64;
    let mirror = |pts: &[(usize, f64)]| {
        let mut k: Vec<(f64, f64)> = vec![(-(pts[1].0 as f64), pts[1].1), (-(pts[0].0 as f64), pts[0].1)];
        k.extend(pts.iter().map(|&(i, v)| (i as f64, v)));
        let m = pts.len();
        k.push((2.0 * last - pts[m - 1].0 as f64, pts[m - 1].1));
        k.push((2.0 * last - pts[m - 2].0 as f64, pts[m - 2].1));
        k
    };
    let grid: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let eval = |k: Vec<(f64, f64)>| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = k.into_iter().unzip();
        textbook_spline(&xs, &ys, &grid)
    };
    let upper = eval(mirror(&e.maxima));
    let lower = eval(mirror(&e.minima));
    let got = mean_envelope(&series).unwrap();
    for i in 0..n {
        let want = 0.5 * (upper[i] + lower[i]);
        assert!((got.values()[i] - want).abs() <= 1e-10, "sample {i}");
    }
}

#[test]
fn pure_tone_is_one_imf() {
    let x = ts((0..2000).map(|i| (2.0 * PI * 0.02 * i as f64).sin()).collect());
    let out = sift_one_imf(&x, &SiftConfig::default()).unwrap();
    assert!(l2(out.residual.values()) <= 0.01 * l2(x.values()));
}

#[test]
fn tone_plus_trend_leaves_the_trend() {
    let trend: Vec<f64> = (0..2000).map(|i| 1.0 + 0.002 * i as f64).collect();
    let x = ts(trend.iter().enumerate().map(|(i, t)| t + 0.5 * (2.0 * PI * 0.01 * i as f64).sin()).collect());
    let set = decompose(&x, &SiftConfig::default(), &mut Exhaustive).unwrap();
    let err = relative_l2(set.residual.values(), &trend);
    assert!(err <= 0.02, "{err}");
}

fn band_fraction(x: &[f64], f_lo: f64, f_hi: f64) -> f64 {
    let spec = fft(&x.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>());
    let n = x.len();
    let mut band = 0.0;
    let mut total = 0.0;
    for (k, c) in spec.iter().enumerate().take(n / 2 + 1).skip(1) {
        let f = k as f64 / n as f64;
        let e = c.norm_sqr();
        total += e;
        if f >= f_lo && f <= f_hi {
            band += e;
        }
    }
    band / total
}

#[test]
fn fast_tone_comes_out_first() {
    let (f1, f2) = (0.05, 0.005);
    let x = ts((0..4000)
        .map(|i| {
            let t = i as f64;
            (2.0 * PI * f1 * t).sin() + (2.0 * PI * f2 * t).sin()
        })
        .collect());
    let set = decompose(&x, &SiftConfig::default(), &mut Exhaustive).unwrap();
    let frac = band_fraction(set.imfs[0].values(), 0.5 * f1, 1.5 * f1);
    assert!(frac >= 0.9, "{frac}");
}
