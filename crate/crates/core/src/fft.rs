//! Discrete Fourier transform for arbitrary lengths.
//!
//! Power-of-two sizes use an iterative radix-2 transform; every other size
//! goes through Bluestein's chirp-z reformulation on top of it.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

fn cis(theta: f64) -> Complex64 {
    Complex64::new(libm::cos(theta), libm::sin(theta))
}

fn radix2(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    if n <= 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        // twiddles computed directly per stage keep the error at O(eps log n)
        let twiddles: Vec<Complex64> = (0..half).map(|k| cis(sign * 2.0 * PI * k as f64 / len as f64)).collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let a = buf[start + k];
                let b = buf[start + k + half] * twiddles[k];
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

fn bluestein(input: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = input.len();
    let m = (2 * n - 1).next_power_of_two();
    let sign = if inverse { 1.0 } else { -1.0 };
    let two_n = 2 * n as u64;
    let chirp: Vec<Complex64> = (0..n as u64)
        .map(|k| {
            // k² mod 2n keeps the angle small for long inputs
            let k2 = (k * k) % two_n;
            cis(sign * PI * k2 as f64 / n as f64)
        })
        .collect();

    let mut a = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n {
        a[k] = input[k] * chirp[k];
    }
    let mut b = vec![Complex64::new(0.0, 0.0); m];
    b[0] = chirp[0].conj();
    for k in 1..n {
        let c = chirp[k].conj();
        b[k] = c;
        b[m - k] = c;
    }
    radix2(&mut a, false);
    radix2(&mut b, false);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    radix2(&mut a, true);
    let scale = 1.0 / m as f64;
    (0..n).map(|k| a[k] * scale * chirp[k]).collect()
}

/// Unnormalized forward DFT: `X[k] = Σ x[j] e^{-2πi jk/n}`.
pub fn fft(input: &[Complex64]) -> Vec<Complex64> {
    transform(input, false)
}

/// Inverse DFT including the `1/n` factor.
pub fn ifft(input: &[Complex64]) -> Vec<Complex64> {
    let n = input.len();
    let mut out = transform(input, true);
    if n > 0 {
        let scale = 1.0 / n as f64;
        for x in &mut out {
            *x *= scale;
        }
    }
    out
}

fn transform(input: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = input.len();
    if n.is_power_of_two() || n <= 1 {
        let mut buf = input.to_vec();
        radix2(&mut buf, inverse);
        buf
    } else {
        bluestein(input, inverse)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, v) in x.iter().enumerate() {
                    let theta = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
                    acc += v * Complex64::new(theta.cos(), theta.sin());
                }
                acc
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_for_all_small_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=67 {
            let x: Vec<Complex64> =
                (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let fast = fft(&x);
            let slow = naive_dft(&x);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).l1_norm() < 1e-9 * n as f64, "n={n}: {a} vs {b}");
            }
            let back = ifft(&fast);
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).l1_norm() < 1e-12 * n as f64);
            }
        }
    }
}
