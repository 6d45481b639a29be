//! Natural cubic spline interpolation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Interpolant through `(x_i, y_i)` with zero second derivative at both ends.
#[derive(Debug, Clone)]
pub struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// second derivatives at the knots
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n != ys.len() {
            return Err(Error::ShapeMismatch(format!("{} knots but {} values", n, ys.len())));
        }
        if n < 2 {
            return Err(Error::TooShort { needed: 2, got: n });
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSeries("spline knots must be strictly increasing".into()));
        }

        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior equations
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            for r in 1..k {
                let lower = xs[r + 1] - xs[r];
                let w = lower / diag[r - 1];
                diag[r] -= w * upper[r - 1];
                rhs[r] -= w * rhs[r - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for r in (0..k - 1).rev() {
                m[r + 1] = (rhs[r] - upper[r] * m[r + 2]) / diag[r];
            }
        }
        Ok(Self { xs: xs.to_vec(), ys: ys.to_vec(), m })
    }

    fn eval_in(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = x1 - x;
        let b = x - x0;
        self.m[i] * a * a * a / (6.0 * h)
            + self.m[i + 1] * b * b * b / (6.0 * h)
            + (self.ys[i] / h - self.m[i] * h / 6.0) * a
            + (self.ys[i + 1] / h - self.m[i + 1] * h / 6.0) * b
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.binary_search_by(|k| k.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Value at `x`; outside the knot range the end cubic is extended.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_in(self.segment(x), x)
    }

    /// Evaluates at `start, start + 1, …` for `count` points.
    pub fn eval_grid(&self, start: f64, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        let mut seg = self.segment(start);
        let last = self.xs.len() - 2;
        for j in 0..count {
            let x = start + j as f64;
            while seg < last && x > self.xs[seg + 1] {
                seg += 1;
            }
            out.push(self.eval_in(seg, x));
        }
        out
    }
}
