//! Lloyd's k-means on 2-D points with k-means++ seeding and restarts.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centers: Vec<Point>,
    pub labels: Vec<usize>,
    /// Total within-cluster sum of squares.
    pub wcss: f64,
}

fn dist2(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn nearest(p: &Point, centers: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn seed_plus_plus(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[idx];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn lloyd(points: &[Point], mut centers: Vec<Point>, max_iter: usize) -> KMeansFit {
    let k = centers.len();
    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..max_iter {
        let mut changed = false;
        for (p, l) in points.iter().zip(labels.iter_mut()) {
            let (j, _) = nearest(p, &centers);
            if *l != j {
                *l = j;
                changed = true;
            }
        }
        let mut sums = vec![[0.0, 0.0]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sums[l][0] += p[0];
            sums[l][1] += p[1];
            counts[l] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = [sums[j][0] / counts[j] as f64, sums[j][1] / counts[j] as f64];
            } else {
                // move an empty centre onto the worst-served point
                let (far, _) = points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, dist2(p, &centers[labels[i]])))
                    .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
                centers[j] = points[far];
                labels[far] = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let wcss = points.iter().zip(&labels).map(|(p, &l)| dist2(p, &centers[l])).sum();
    KMeansFit { centers, labels, wcss }
}

/// Best of `restarts` seeded runs (lowest WCSS, earliest run on ties).
pub fn kmeans(points: &[Point], k: usize, restarts: usize, rng: &mut ChaCha8Rng) -> KMeansFit {
    assert!(!points.is_empty() && k >= 1 && k <= points.len(), "k-means needs 1 <= k <= n");
    let mut best: Option<KMeansFit> = None;
    for _ in 0..restarts.max(1) {
        let init = seed_plus_plus(points, k, rng);
        let fit = lloyd(points, init, 300);
        if best.as_ref().is_none_or(|b| fit.wcss < b.wcss) {
            best = Some(fit);
        }
    }
    best.expect("at least one restart")
}
