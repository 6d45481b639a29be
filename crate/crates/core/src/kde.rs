//! Gaussian kernel density estimate with Silverman's bandwidth.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::stats::{quantile_sorted, std_dev};
use crate::{Error, Result};

pub const GRID_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeResult {
    pub grid: Vec<f64>,
    pub pdf: Vec<f64>,
    pub bandwidth: f64,
    pub mode: f64,
}

/// `0.9 * min(sigma, IQR / 1.34) * n^(-1/5)`, floored so it never collapses.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let range = sorted[sorted.len() - 1] - sorted[0];
    if range == 0.0 {
        return Ok(1.0);
    }
    let sigma = std_dev(&sorted);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sigma.min(iqr / 1.34) } else { sigma };
    let n = sorted.len() as f64;
    let h = 0.9 * spread * libm::pow(n, -0.2);
    Ok(h.max(1e-6 * range))
}

pub fn gaussian_density(samples: &[f64], bandwidth: f64, x: f64) -> f64 {
    let norm = 1.0 / (samples.len() as f64 * bandwidth * libm::sqrt(2.0 * core::f64::consts::PI));
    samples
        .iter()
        .map(|s| {
            let u = (x - s) / bandwidth;
            libm::exp(-0.5 * u * u)
        })
        .sum::<f64>()
        * norm
}

/// Trapezoidal area under `pdf` sampled on an evenly spaced grid.
pub fn trapezoid(grid: &[f64], pdf: &[f64]) -> f64 {
    grid.windows(2).zip(pdf.windows(2)).map(|(x, p)| 0.5 * (x[1] - x[0]) * (p[0] + p[1])).sum()
}

/// Density on a 512-point grid over `[min - 3h, max + 3h]` and its argmax.
/// Ties resolve to the smaller grid value. The pdf is rescaled to unit area
/// over the grid, which leaves the argmax unchanged.
pub fn kde_mode(samples: &[f64]) -> Result<KdeResult> {
    let h = silverman_bandwidth(samples)?;
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let step = (max - min + 6.0 * h) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = if min == max {
        // put the lone peak exactly on a node
        let mid = (GRID_POINTS / 2 - 1) as f64;
        (0..GRID_POINTS).map(|i| min + step * (i as f64 - mid)).collect()
    } else {
        let lo = min - 3.0 * h;
        (0..GRID_POINTS).map(|i| lo + step * i as f64).collect()
    };
    let mut pdf: Vec<f64> = grid.iter().map(|&x| gaussian_density(samples, h, x)).collect();
    let area = trapezoid(&grid, &pdf);
    if area > 0.0 {
        pdf.iter_mut().for_each(|p| *p /= area);
    }
    let mut best = 0;
    for (i, p) in pdf.iter().enumerate() {
        if *p > pdf[best] {
            best = i;
        }
    }
    Ok(KdeResult { mode: grid[best], grid, pdf, bandwidth: h })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_mode_is_the_sample() {
        let r = kde_mode(&[42.0]).unwrap();
        assert_eq!(r.bandwidth, 1.0);
        assert_eq!(r.mode, 42.0);
    }

    #[test]
    fn identical_samples() {
        let r = kde_mode(&[5.0; 7]).unwrap();
        assert_eq!(r.mode, 5.0);
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(kde_mode(&[]), Err(Error::EmptySamples));
    }

    #[test]
    fn pdf_integrates_to_one() {
        let s = [1.0, 2.0, 2.5, 7.0, 7.2, 7.3];
        let r = kde_mode(&s).unwrap();
        let area = trapezoid(&r.grid, &r.pdf);
        assert!((area - 1.0).abs() < 1e-12, "{area}");
        assert!(r.mode > 6.5 && r.mode < 7.8);
    }
}
